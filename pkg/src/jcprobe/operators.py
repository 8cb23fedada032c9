"""Dense operator algebra on the truncated qubit-cavity space.

Conventions, fixed package-wide:

* the qubit factor comes first, so joint operators embed as
  ``sigma_i (x) 1_D`` for the qubit and ``1_2 (x) b`` for the cavity;
* the cavity is truncated to its lowest ``D`` Fock levels, ``D >= 2``;
* hbar = 1 (atomic units).

On the truncated space ``[b, b+]`` equals the identity everywhere except
the highest Fock level, where the commutator picks up ``-(D-1)``. That
corner is the only place the truncation is visible; state preparation
keeps the populated levels far away from it.

Everything here returns fresh dense complex arrays and mutates nothing,
so all values are safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidStateError, ShapeError

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = (SIGMA_1 + 1j * SIGMA_2) / 2
SIGMA_MINUS = (SIGMA_1 - 1j * SIGMA_2) / 2
PAULIS = (SIGMA_1, SIGMA_2, SIGMA_3)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10


def ladder(dim: int) -> np.ndarray:
    """Annihilation operator on the ``dim``-level cavity factor."""
    if dim < 2:
        raise InvalidDimensionError(f"cavity dimension must be >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Joint-space operators for one qubit and one ``dim_cavity``-level mode.

    All matrices are ``2*dim_cavity`` square, qubit factor first.
    """

    dim_cavity: int
    sigma1: np.ndarray
    sigma2: np.ndarray
    sigma3: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    b: np.ndarray
    b_dag: np.ndarray
    number: np.ndarray
    identity: np.ndarray

    @property
    def paulis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.sigma1, self.sigma2, self.sigma3)


def build_operators(dim_cavity: int) -> OperatorSet:
    """Embed Pauli and ladder operators in the joint space."""
    if dim_cavity < 2:
        raise InvalidDimensionError(
            f"cavity dimension must be >= 2, got {dim_cavity}"
        )
    eye_q = np.eye(2, dtype=complex)
    eye_c = np.eye(dim_cavity, dtype=complex)
    b_c = ladder(dim_cavity)
    return OperatorSet(
        dim_cavity=dim_cavity,
        sigma1=np.kron(SIGMA_1, eye_c),
        sigma2=np.kron(SIGMA_2, eye_c),
        sigma3=np.kron(SIGMA_3, eye_c),
        sigma_plus=np.kron(SIGMA_PLUS, eye_c),
        sigma_minus=np.kron(SIGMA_MINUS, eye_c),
        b=np.kron(eye_q, b_c),
        b_dag=np.kron(eye_q, b_c.conj().T),
        # Built as an exact diagonal; b+ @ b only matches it to rounding.
        number=np.kron(eye_q, np.diag(np.arange(dim_cavity)).astype(complex)),
        identity=np.kron(eye_q, eye_c),
    )


def assert_density_matrix(
    matrix: np.ndarray,
    *,
    what: str = "state",
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    eig_floor: float = EIGENVALUE_FLOOR,
) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return the array.

    Raises ShapeError for non-square input and InvalidStateError when any
    of the three density-matrix invariants fails.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"{what} must be a square matrix, got shape {matrix.shape}")
    herm_dev = np.max(np.abs(matrix - matrix.conj().T))
    if herm_dev > herm_tol:
        raise InvalidStateError(
            f"{what} is not Hermitian: max deviation {herm_dev:.3e} > {herm_tol:.1e}"
        )
    trace = complex(matrix.trace())
    if abs(trace - 1.0) > trace_tol:
        raise InvalidStateError(
            f"{what} trace {trace:.12g} differs from 1 by more than {trace_tol:.1e}"
        )
    lowest = float(np.linalg.eigvalsh(matrix)[0])
    if lowest < eig_floor:
        raise InvalidStateError(
            f"{what} has eigenvalue {lowest:.3e} below floor {eig_floor:.1e}"
        )
    return matrix


def is_density_matrix(matrix: np.ndarray, **kwargs) -> bool:
    try:
        assert_density_matrix(matrix, **kwargs)
    except (ShapeError, InvalidStateError):
        return False
    return True


def tensor(qubit: np.ndarray, cavity: np.ndarray) -> np.ndarray:
    """Separable joint state ``qubit (x) cavity`` with both factors validated."""
    qubit = assert_density_matrix(qubit, what="qubit factor")
    cavity = assert_density_matrix(cavity, what="cavity factor")
    if qubit.shape != (2, 2):
        raise ShapeError(f"qubit factor must be 2x2, got {qubit.shape}")
    return np.kron(qubit, cavity)


def partial_trace_cavity(joint: np.ndarray) -> np.ndarray:
    """Reduced 2x2 qubit state of a joint qubit-cavity matrix."""
    joint = np.asarray(joint, dtype=complex)
    if joint.ndim != 2 or joint.shape[0] != joint.shape[1]:
        raise ShapeError(f"joint state must be square, got shape {joint.shape}")
    n = joint.shape[0]
    if n % 2 != 0:
        raise ShapeError(f"joint dimension {n} is odd; expected 2 x dim_cavity")
    d = n // 2
    return joint.reshape(2, d, 2, d).trace(axis1=1, axis2=3)


def expectation(op: np.ndarray, state: np.ndarray, *, real: bool = False):
    """``tr[state @ op]``; with ``real=True`` the imaginary residue must vanish."""
    op = np.asarray(op, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if op.shape != state.shape or op.ndim != 2:
        raise ShapeError(
            f"operator shape {op.shape} does not match state shape {state.shape}"
        )
    value = complex(np.trace(state @ op))
    if not real:
        return value
    if abs(value.imag) > 1e-10 * max(1.0, abs(value)):
        raise InvalidStateError(
            f"expectation value {value:.6g} has non-negligible imaginary part; "
            "operator is presumably not Hermitian"
        )
    return value.real
