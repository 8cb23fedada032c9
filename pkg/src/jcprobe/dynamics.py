"""Hamiltonian builders and exact closed (unitary) propagation.

Three generators are supported: the resonant excitation-exchange coupling
between qubit and mode, its dispersive (large-detuning) limit, and the
multi-mode generalization with one exchange term per mode. Propagation is
by Hermitian eigendecomposition, done once per Hamiltonian and reused for
every requested time, so trace, Hermiticity and the spectrum are preserved
to machine precision at any t.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityError,
    DetuningZeroError,
    InvalidDimensionError,
    InvalidHamiltonianError,
    InvalidParameterError,
    ShapeError,
)
from .operators import SIGMA_3, SIGMA_MINUS, SIGMA_PLUS, ladder

DEFAULT_DIM_CAP = 4096
DIM_CAP_ENV = "JC_PROBE_DIM_CAP"


def dim_cap() -> int:
    """Joint-dimension memory cap, overridable via the environment."""
    return int(os.environ.get(DIM_CAP_ENV, DEFAULT_DIM_CAP))


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class HamiltonianParams:
    """Physical constants of the resonant qubit-mode coupling."""

    a: float
    omega: float
    g: float
    dim_cavity: int

    def __post_init__(self):
        for name in ("a", "omega", "g"):
            _require_finite(name, getattr(self, name))
        if self.g < 0:
            raise InvalidParameterError(f"coupling g must be >= 0, got {self.g}")
        if self.dim_cavity < 2:
            raise InvalidDimensionError(
                f"cavity dimension must be >= 2, got {self.dim_cavity}"
            )


@dataclass(frozen=True)
class DispersiveParams:
    """Constants of the large-detuning limit; requires a != omega."""

    a: float
    omega: float
    g: float
    dim_cavity: int

    def __post_init__(self):
        for name in ("a", "omega", "g"):
            _require_finite(name, getattr(self, name))
        if self.g < 0:
            raise InvalidParameterError(f"coupling g must be >= 0, got {self.g}")
        if self.dim_cavity < 2:
            raise InvalidDimensionError(
                f"cavity dimension must be >= 2, got {self.dim_cavity}"
            )
        if self.delta == 0:
            raise DetuningZeroError("dispersive limit requires a != omega")

    @property
    def delta(self) -> float:
        return self.a - self.omega

    @property
    def dispersive_ratio(self) -> float:
        """g^2/|delta|; small values justify the dispersive form."""
        return self.g**2 / abs(self.delta)


@dataclass(frozen=True)
class ModeSpec:
    """One cavity mode: frequency, coupling to the qubit, truncation."""

    omega: float
    g: float
    dim: int

    def __post_init__(self):
        _require_finite("omega", self.omega)
        _require_finite("g", self.g)
        if self.g < 0:
            raise InvalidParameterError(f"coupling g must be >= 0, got {self.g}")
        if self.dim < 2:
            raise InvalidDimensionError(f"mode dimension must be >= 2, got {self.dim}")


@dataclass(frozen=True)
class MultimodeParams:
    a: float
    modes: tuple[ModeSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _require_finite("a", self.a)
        if not self.modes:
            raise InvalidParameterError("at least one cavity mode is required")

    @property
    def dim_total(self) -> int:
        total = 1
        for mode in self.modes:
            total *= mode.dim
        return total


def build_jc_hamiltonian(params: HamiltonianParams) -> np.ndarray:
    """``(a/2) sigma_3 + omega (N + 1/2) + g (b sigma_+ + b† sigma_-)``."""
    d = params.dim_cavity
    eye_q = np.eye(2, dtype=complex)
    eye_c = np.eye(d, dtype=complex)
    b = ladder(d)
    number = np.diag(np.arange(d)).astype(complex)
    return (
        0.5 * params.a * np.kron(SIGMA_3, eye_c)
        + params.omega * np.kron(eye_q, number + 0.5 * eye_c)
        + params.g * (np.kron(SIGMA_PLUS, b) + np.kron(SIGMA_MINUS, b.conj().T))
    )


def build_dispersive_hamiltonian(params: DispersiveParams) -> np.ndarray:
    """``omega (N + 1/2) + (a/2) sigma_3 + (g²/delta)(N + 1/2) sigma_3``.

    Diagonal in the sigma_3 (x) Fock basis; commutes with both N and
    sigma_3, so populations are frozen and only qubit phases evolve.
    """
    d = params.dim_cavity
    eye_q = np.eye(2, dtype=complex)
    eye_c = np.eye(d, dtype=complex)
    n_half = np.diag(np.arange(d)).astype(complex) + 0.5 * eye_c
    chi = params.g**2 / params.delta
    return (
        params.omega * np.kron(eye_q, n_half)
        + 0.5 * params.a * np.kron(SIGMA_3, eye_c)
        + chi * np.kron(SIGMA_3, n_half)
    )


def build_multimode_jc(params: MultimodeParams, *, cap: int | None = None) -> np.ndarray:
    """Sum of per-mode free terms and exchange couplings, one qubit shared."""
    cap = dim_cap() if cap is None else cap
    joint_dim = 2 * params.dim_total
    if joint_dim > cap:
        raise CapacityError(
            f"joint dimension {joint_dim} exceeds cap {cap}; "
            f"set {DIM_CAP_ENV} to raise it"
        )
    dims = [mode.dim for mode in params.modes]
    eye_q = np.eye(2, dtype=complex)

    def embed_mode(op: np.ndarray, index: int) -> np.ndarray:
        out = np.eye(1, dtype=complex)
        for j, d in enumerate(dims):
            out = np.kron(out, op if j == index else np.eye(d, dtype=complex))
        return out

    eye_c = embed_mode(np.eye(dims[0], dtype=complex), 0)
    H = 0.5 * params.a * np.kron(SIGMA_3, eye_c)
    for j, mode in enumerate(params.modes):
        b_j = embed_mode(ladder(mode.dim), j)
        number_j = embed_mode(np.diag(np.arange(mode.dim)).astype(complex), j)
        H = H + mode.omega * np.kron(eye_q, number_j + 0.5 * eye_c)
        H = H + mode.g * (np.kron(SIGMA_PLUS, b_j) + np.kron(SIGMA_MINUS, b_j.conj().T))
    return H


class Propagator:
    """Unitary evolution generated by one Hermitian eigendecomposition.

    The decomposition is computed once and shared; evaluations at distinct
    times are independent and thread-safe.
    """

    def __init__(self, H: np.ndarray):
        H = np.asarray(H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ShapeError(f"Hamiltonian must be square, got shape {H.shape}")
        scale = max(1.0, float(np.max(np.abs(H))))
        herm_dev = float(np.max(np.abs(H - H.conj().T)))
        if herm_dev > 1e-12 * scale:
            raise InvalidHamiltonianError(
                f"Hamiltonian is not Hermitian: max deviation {herm_dev:.3e}"
            )
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(H)
        self.dim = H.shape[0]

    def unitary(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self.eigenvalues * t)
        return (self.eigenvectors * phases) @ self.eigenvectors.conj().T

    def evolve(self, state0: np.ndarray, t: float) -> np.ndarray:
        state0 = np.asarray(state0, dtype=complex)
        if state0.shape != (self.dim, self.dim):
            raise ShapeError(
                f"state shape {state0.shape} does not match Hamiltonian dim {self.dim}"
            )
        u = self.unitary(t)
        return u @ state0 @ u.conj().T


def evolve(state0: np.ndarray, H: np.ndarray, t: float) -> np.ndarray:
    """One-off ``exp(-iHt) state0 exp(+iHt)``; use Propagator for many times."""
    return Propagator(H).evolve(state0, t)
