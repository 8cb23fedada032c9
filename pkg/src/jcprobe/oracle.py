"""Exact t=0 derivatives and cavity moments, independent of time evolution.

``analytic_derivatives`` evaluates the first and second time derivatives of
the nine tomography series at t=0 from nested commutators with the
Hamiltonian, as plain matrix products. It never touches the propagator, so
this path shares only the operator constructors with the dynamics code and
serves as the ground truth that finite-difference estimates are checked
against.

``derivatives_from_moments`` produces the same two tensors from the closed
recovery relations and the cavity moments alone; agreement between the two
routes is the closure check exercised by the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .operators import PAULIS, ladder
from .states import CavityStateSpec, prepare_cavity_state, prepare_qubit_state

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class CavityMoments:
    """First and second moments of a single cavity mode.

    ``sum_mean`` and ``sq_diff`` are ``<b + b†>`` and ``<b² - b†²>``;
    ``diff_mean`` is ``<b - b†>`` (purely imaginary for any state).
    ``sum_sq`` and ``diff_sq`` are ``<(b + b†)²>`` and ``<(i(b - b†))²>``.
    """

    sum_mean: complex
    diff_mean: complex
    sum_sq: float
    diff_sq: float
    sq_diff: complex
    n_mean: float
    n_sq: float

    def to_json_dict(self) -> dict:
        return {
            "sum_mean": self.sum_mean.real,
            "diff_mean_imag": self.diff_mean.imag,
            "sum_sq": self.sum_sq,
            "diff_sq": self.diff_sq,
            "sq_diff_imag": self.sq_diff.imag,
            "n_mean": self.n_mean,
            "n_sq": self.n_sq,
        }


@dataclass(frozen=True)
class OracleReport:
    """Exact derivative tensors plus the cavity moments they encode."""

    d1: np.ndarray
    d2: np.ndarray
    moments: CavityMoments | None

    def to_json_dict(self) -> dict:
        return {
            "d1": self.d1.tolist(),
            "d2": self.d2.tolist(),
            "moments": None if self.moments is None else self.moments.to_json_dict(),
        }


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, abs(value)):
        raise ShapeError(f"{what} came out complex ({value:.6g}); check Hermiticity")
    return value.real


def cavity_moments(state: np.ndarray) -> CavityMoments:
    """Moments of a single-mode cavity density matrix by direct traces."""
    state = np.asarray(state, dtype=complex)
    if state.ndim != 2 or state.shape[0] != state.shape[1]:
        raise ShapeError(f"cavity state must be square, got shape {state.shape}")
    dim = state.shape[0]
    b = ladder(dim)
    bd = b.conj().T
    s = b + bd
    d = b - bd
    number = bd @ b

    def ev(op: np.ndarray) -> complex:
        return complex(np.trace(state @ op))

    return CavityMoments(
        sum_mean=ev(s),
        diff_mean=ev(d),
        sum_sq=_real(ev(s @ s), "<(b+b†)²>"),
        diff_sq=_real(-ev(d @ d), "<(i(b-b†))²>"),
        sq_diff=ev(b @ b - bd @ bd),
        n_mean=_real(ev(number), "<N>"),
        n_sq=_real(ev(number @ number), "<N²>"),
    )


def analytic_derivatives(
    H: np.ndarray,
    cavity: CavityStateSpec | np.ndarray,
    *,
    include_moments: bool = True,
) -> OracleReport:
    """Exact d1[i,k] and d2[i,k] from nested commutators with ``H``.

    ``d1[i,k] = tr[eta0_k · i[H, sigma_i]]`` and
    ``d2[i,k] = tr[eta0_k · i[H, i[H, sigma_i]]]`` with the separable
    initial state ``eta0_k = rho_k (x) rho_cavity``.

    ``include_moments=False`` skips the single-mode moment set, which is
    undefined when the cavity factor is itself a product of modes.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"Hamiltonian must be square, got shape {H.shape}")
    n = H.shape[0]
    if n % 2 != 0:
        raise ShapeError(f"joint dimension {n} is odd; expected 2 x dim_cavity")
    dim = n // 2

    if isinstance(cavity, np.ndarray):
        rho_c = np.asarray(cavity, dtype=complex)
    else:
        rho_c = prepare_cavity_state(cavity, dim)
    if rho_c.shape != (dim, dim):
        raise ShapeError(
            f"cavity state shape {rho_c.shape} does not match Hamiltonian dim {dim}"
        )

    eye_c = np.eye(dim, dtype=complex)
    etas = [np.kron(prepare_qubit_state(k), rho_c) for k in (1, 2, 3)]

    d1 = np.empty((3, 3))
    d2 = np.empty((3, 3))
    for i in range(3):
        sigma = np.kron(PAULIS[i], eye_c)
        comm1 = 1j * (H @ sigma - sigma @ H)
        comm2 = 1j * (H @ comm1 - comm1 @ H)
        for k in range(3):
            d1[i, k] = _real(complex(np.trace(etas[k] @ comm1)), f"d1[{i+1},{k+1}]")
            d2[i, k] = _real(complex(np.trace(etas[k] @ comm2)), f"d2[{i+1},{k+1}]")

    moments = cavity_moments(rho_c) if include_moments else None
    return OracleReport(d1=d1, d2=d2, moments=moments)


def derivatives_from_moments(
    a: float, omega: float, g: float, moments: CavityMoments
) -> tuple[np.ndarray, np.ndarray]:
    """Derivative tensors predicted by the closed recovery relations.

    Inverse direction of the estimator: given the Hamiltonian parameters
    and the cavity moments, write down what the t=0 derivatives must be.
    """
    sm = moments.sum_mean
    dm = moments.diff_mean
    d1c = np.zeros((3, 3), dtype=complex)
    d1c[0, 1] = -a
    d1c[1, 0] = a
    d1c[0, 2] = 1j * g * dm
    d1c[2, 0] = -1j * g * dm
    d1c[1, 2] = -g * sm
    d1c[2, 1] = g * sm

    d2c = np.zeros((3, 3), dtype=complex)
    d2c[0, 0] = -a * a - g * g * moments.diff_sq
    d2c[0, 1] = 1j * g * g * moments.sq_diff
    d2c[0, 2] = (a + omega) * g * sm
    d2c[1, 0] = 1j * g * g * moments.sq_diff
    d2c[1, 1] = -a * a - g * g * moments.sum_sq
    d2c[1, 2] = 1j * (a + omega) * g * dm
    d2c[2, 0] = (a - omega) * g * sm - 2 * g * g
    d2c[2, 1] = 1j * (a - omega) * g * dm - 2 * g * g
    d2c[2, 2] = -g * g * (moments.sum_sq + moments.diff_sq) - 2 * g * g

    d1 = np.array([[_real(complex(v), "d1 prediction") for v in row] for row in d1c])
    d2 = np.array([[_real(complex(v), "d2 prediction") for v in row] for row in d2c])
    return d1, d2
