"""Initial-state preparation for the qubit and the cavity mode.

The qubit starts in one of the three Bloch-axis states ``(1 + sigma_k)/2``.
The cavity supports coherent, Fock, thermal and caller-supplied density
matrices; coherent amplitudes are renormalized after truncation so the
returned matrix has exactly unit trace, and a Poisson tail-mass guard
rejects truncations that would clip the state.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    InvalidPreparationError,
    InvalidStateError,
    ShapeError,
    TruncationInsufficientError,
)
from .operators import PAULIS, assert_density_matrix

DEFAULT_TAIL_TOL = 1e-10


def prepare_qubit_state(k: int) -> np.ndarray:
    """Density matrix ``(1 + sigma_k) / 2`` for preparation index k in {1,2,3}."""
    if k not in (1, 2, 3):
        raise InvalidPreparationError(f"qubit preparation index must be 1, 2 or 3, got {k}")
    return (np.eye(2, dtype=complex) + PAULIS[k - 1]) / 2


@dataclass(eq=False)
class CavityStateSpec:
    """Recipe for the initial cavity state.

    ``kind`` is one of ``coherent`` (amplitude ``alpha``), ``fock``
    (occupation ``n``), ``thermal`` (mean occupation ``nbar``) or
    ``custom`` (explicit density matrix).
    """

    kind: str
    alpha: complex = 0j
    n: int = 0
    nbar: float = 0.0
    matrix: np.ndarray | None = None

    @classmethod
    def coherent(cls, alpha: complex) -> "CavityStateSpec":
        return cls(kind="coherent", alpha=complex(alpha))

    @classmethod
    def fock(cls, n: int) -> "CavityStateSpec":
        if n < 0:
            raise InvalidStateError(f"Fock occupation must be non-negative, got {n}")
        return cls(kind="fock", n=int(n))

    @classmethod
    def thermal(cls, nbar: float) -> "CavityStateSpec":
        if nbar < 0:
            raise InvalidStateError(f"thermal occupation must be non-negative, got {nbar}")
        return cls(kind="thermal", nbar=float(nbar))

    @classmethod
    def custom(cls, matrix: np.ndarray) -> "CavityStateSpec":
        return cls(kind="custom", matrix=np.asarray(matrix, dtype=complex))

    @classmethod
    def parse(cls, text: str) -> "CavityStateSpec":
        """Parse the CLI/service string form, e.g. ``coherent:1``, ``fock:2``."""
        kind, sep, value = text.partition(":")
        kind = kind.strip().lower()
        try:
            if kind == "coherent":
                return cls.coherent(complex(value) if sep else 1.0)
            if kind == "fock":
                return cls.fock(int(value) if sep else 0)
            if kind == "thermal":
                return cls.thermal(float(value) if sep else 0.0)
        except (ValueError, InvalidStateError) as exc:
            raise ConfigError(f"bad cavity spec {text!r}: {exc}") from exc
        raise ConfigError(
            f"unknown cavity kind {kind!r}; expected coherent:<alpha>, fock:<n> or thermal:<nbar>"
        )

    def label(self) -> str:
        """String form that ``parse`` accepts back (custom states have none)."""
        if self.kind == "coherent":
            a = self.alpha
            if a.imag == 0:
                return f"coherent:{a.real:g}"
            return f"coherent:{a.real:g}{a.imag:+g}j"
        if self.kind == "fock":
            return f"fock:{self.n}"
        if self.kind == "thermal":
            return f"thermal:{self.nbar:g}"
        return "custom"


def _coherent_state(alpha: complex, dim: int, tail_tol: float) -> np.ndarray:
    lam = abs(alpha) ** 2
    # Poisson tail mass beyond the truncation must be negligible.
    p = math.exp(-lam)
    cumulative = p
    for n in range(1, dim):
        p *= lam / n
        cumulative += p
    tail = max(0.0, 1.0 - cumulative)
    if tail >= tail_tol:
        raise TruncationInsufficientError(
            f"coherent state |alpha|^2={lam:g} keeps tail mass {tail:.3e} outside "
            f"dim={dim}; allowed {tail_tol:.1e}"
        )
    amplitudes = np.zeros(dim, dtype=complex)
    amplitudes[0] = math.exp(-lam / 2)
    for n in range(1, dim):
        amplitudes[n] = amplitudes[n - 1] * alpha / math.sqrt(n)
    rho = np.outer(amplitudes, amplitudes.conj())
    return rho / rho.trace().real


def prepare_cavity_state(
    spec: CavityStateSpec, dim: int, *, tail_tol: float = DEFAULT_TAIL_TOL
) -> np.ndarray:
    """Build the ``dim x dim`` cavity density matrix described by ``spec``."""
    if dim < 2:
        raise ShapeError(f"cavity dimension must be >= 2, got {dim}")
    if spec.kind == "coherent":
        return _coherent_state(spec.alpha, dim, tail_tol)
    if spec.kind == "fock":
        if spec.n >= dim:
            raise TruncationInsufficientError(
                f"fock({spec.n}) does not fit in dim={dim}"
            )
        rho = np.zeros((dim, dim), dtype=complex)
        rho[spec.n, spec.n] = 1.0
        return rho
    if spec.kind == "thermal":
        if spec.nbar < 0:
            raise InvalidStateError(f"thermal occupation must be non-negative, got {spec.nbar}")
        ratio = spec.nbar / (spec.nbar + 1.0)
        weights = ratio ** np.arange(dim, dtype=float)
        return np.diag(weights / weights.sum()).astype(complex)
    if spec.kind == "custom":
        if spec.matrix is None:
            raise InvalidStateError("custom cavity spec carries no matrix")
        if spec.matrix.shape != (dim, dim):
            raise ShapeError(
                f"custom cavity matrix has shape {spec.matrix.shape}, expected {(dim, dim)}"
            )
        return assert_density_matrix(spec.matrix, what="custom cavity state").copy()
    raise InvalidStateError(f"unknown cavity state kind {spec.kind!r}")


def prepare_cavity_product(
    specs: list[CavityStateSpec],
    dims: list[int],
    *,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> np.ndarray:
    """Product state of several cavity modes, kron'ed in mode order."""
    if len(specs) != len(dims) or not specs:
        raise ShapeError("need one cavity spec per mode")
    rho = prepare_cavity_state(specs[0], dims[0], tail_tol=tail_tol)
    for spec, dim in zip(specs[1:], dims[1:]):
        rho = np.kron(rho, prepare_cavity_state(spec, dim, tail_tol=tail_tol))
    return rho
