"""Recovery of physical parameters from t=0 derivatives of the series.

Derivative tensors are indexed ``d[i-1, k-1]`` for Pauli index i and
preparation index k. With ``d1`` and ``d2`` the first and second t=0
derivatives, the inversion chain is

    a      = -d1[1,2]
    g          from  (d2[1,1] + d2[2,2] - d2[3,3] + 2 a^2) / 2  (>= 0 root)
    <x>    = -d1[2,3] / (sqrt(2) g)
    <p>    = -d1[1,3] / (sqrt(2) g)
    omega  = -d2[1,3] / d1[2,3] - a      (x route)
           =  d2[2,3] / d1[1,3] - a      (p route)
    V_xx   = (-a^2 - d2[2,2] - d1[2,3]^2) / (2 g^2)
    V_pp   = (-a^2 - d2[1,1] - d1[1,3]^2) / (2 g^2)
    V_xp   = (-d2[1,2] - d1[1,3] d1[2,3]) / (2 g^2)

(1-based indices above). Under dispersive dynamics with known a, g and
detuning, ``d1[2,1]`` and ``d2[1,1]`` invert to the mean and variance of
the photon number instead.

The sign of g is a gauge choice: flipping g together with both quadrature
means leaves every derivative unchanged, so the non-negative root is
taken and reported means follow that convention.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConfigError,
    CouplingTooSmallError,
    DetuningZeroError,
    GridIncompatibleError,
    InvalidStepError,
    NegativeRadicandError,
    OmegaUnidentifiableError,
)
from .tomography import TomographyRecord

DEFAULT_RADICAND_TOL = 1e-8
DEFAULT_NOISE_FLOOR = 1e-6

STENCILS = ("forward2", "central2")


def default_g_min(a: float) -> float:
    """Smallest coupling the mean/variance inversions will divide by."""
    return 1e-6 * max(1.0, abs(a))


@dataclass(frozen=True)
class DerivativeSet:
    """First and second t=0 derivatives of the nine series.

    ``d1_uncertainty``, when present, holds a per-entry scale for how far
    each first derivative may sit from its true value (stencil bias plus
    propagated noise). Exact (oracle-fed) sets leave it ``None``.
    """

    d1: np.ndarray
    d2: np.ndarray
    stencil: str
    delta: float
    d1_uncertainty: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "d1", np.asarray(self.d1, dtype=float))
        object.__setattr__(self, "d2", np.asarray(self.d2, dtype=float))
        if self.d1.shape != (3, 3) or self.d2.shape != (3, 3):
            raise ConfigError("derivative tensors must be 3x3")
        if not (np.all(np.isfinite(self.d1)) and np.all(np.isfinite(self.d2))):
            raise ConfigError("derivative tensors must be finite")
        if self.delta <= 0:
            raise InvalidStepError(f"step size must be positive, got {self.delta}")
        if self.d1_uncertainty is not None:
            object.__setattr__(
                self, "d1_uncertainty", np.asarray(self.d1_uncertainty, dtype=float)
            )


@dataclass(frozen=True)
class Residual:
    """One named consistency residual (signed)."""

    name: str
    value: float


@dataclass(frozen=True)
class EstimateReport:
    """Everything the inversion recovers, plus consistency diagnostics."""

    a_hat: float | None = None
    g_hat: float | None = None
    omega_hat: float | None = None
    x_mean: float | None = None
    p_mean: float | None = None
    v_xx: float | None = None
    v_pp: float | None = None
    v_xp: float | None = None
    n_mean: float | None = None
    n_var: float | None = None
    residuals: tuple[Residual, ...] = ()
    warnings: tuple[str, ...] = ()
    stencil: str = "forward2"
    delta: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "a_hat": self.a_hat,
            "g_hat": self.g_hat,
            "omega_hat": self.omega_hat,
            "x_mean": self.x_mean,
            "p_mean": self.p_mean,
            "v_xx": self.v_xx,
            "v_pp": self.v_pp,
            "v_xp": self.v_xp,
            "n_mean": self.n_mean,
            "n_var": self.n_var,
            "residuals": [{"name": r.name, "value": r.value} for r in self.residuals],
            "warnings": list(self.warnings),
            "stencil": self.stencil,
            "delta": self.delta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, data: dict) -> "EstimateReport":
        residuals = tuple(
            Residual(r["name"], r["value"]) for r in data.get("residuals", [])
        )
        return cls(
            a_hat=data.get("a_hat"),
            g_hat=data.get("g_hat"),
            omega_hat=data.get("omega_hat"),
            x_mean=data.get("x_mean"),
            p_mean=data.get("p_mean"),
            v_xx=data.get("v_xx"),
            v_pp=data.get("v_pp"),
            v_xp=data.get("v_xp"),
            n_mean=data.get("n_mean"),
            n_var=data.get("n_var"),
            residuals=residuals,
            warnings=tuple(data.get("warnings", [])),
            stencil=data.get("stencil", "forward2"),
            delta=data.get("delta", 0.0),
        )


def finite_difference_derivatives(
    record: TomographyRecord,
    stencil: str = "forward2",
    delta: float | None = None,
) -> DerivativeSet:
    """Second-order stencils applied to the nine series at t=0.

    ``forward2`` needs nodes 0, d, 2d, 3d and suits data that only exists
    for t >= 0; ``central2`` needs -d, 0, d and is only available when the
    record was generated with negative times on purpose.
    """
    if stencil not in STENCILS:
        raise ConfigError(f"unknown stencil {stencil!r}; expected one of {STENCILS}")
    if delta is None:
        delta = record.grid_delta
        if delta is None:
            raise GridIncompatibleError(
                "grid is not uniform and no explicit step size was given"
            )
    if delta <= 0:
        raise InvalidStepError(f"step size must be positive, got {delta}")

    def node(m: int) -> np.ndarray:
        try:
            return record.value_at(m * delta)
        except GridIncompatibleError as exc:
            raise GridIncompatibleError(
                f"stencil {stencil} needs a node at t={m * delta:g}: {exc}"
            ) from exc

    sigma = record.noise_sigma
    if stencil == "forward2":
        c0, c1, c2, c3 = node(0), node(1), node(2), node(3)
        d1 = (-3 * c0 + 4 * c1 - c2) / (2 * delta)
        d2 = (2 * c0 - 5 * c1 + 4 * c2 - c3) / delta**2
        # First-order third-derivative estimate -> stencil-bias scale of d1.
        d3_est = (-c0 + 3 * c1 - 3 * c2 + c3) / delta**3
        bias = (delta**2 / 3.0) * np.abs(d3_est)
        noise_std = sigma * math.sqrt(26.0) / (2 * delta)
    else:
        cm, c0, cp = node(-1), node(0), node(1)
        d1 = (cp - cm) / (2 * delta)
        d2 = (cp - 2 * c0 + cm) / delta**2
        try:
            cm2, cp2 = node(-2), node(2)
            d3_est = (cp2 - 2 * cp + 2 * cm - cm2) / (2 * delta**3)
            bias = (delta**2 / 6.0) * np.abs(d3_est)
        except GridIncompatibleError:
            # Minimal symmetric grid: fall back to a frequency-scale bound.
            scale_d2 = max(float(np.max(np.abs(d2))), 1e-12)
            freq = math.sqrt(scale_d2 / max(float(np.max(np.abs(d1))), 1.0))
            bias = np.full((3, 3), (delta**2 / 6.0) * scale_d2 * freq)
        noise_std = sigma * math.sqrt(2.0) / (2 * delta)
    return DerivativeSet(
        d1=d1,
        d2=d2,
        stencil=stencil,
        delta=float(delta),
        d1_uncertainty=bias + noise_std,
    )


def estimate_a(derivatives: DerivativeSet) -> float:
    """Qubit splitting from the slope of the sigma_1 series, preparation 2."""
    return -float(derivatives.d1[0, 1])


def estimate_g(
    derivatives: DerivativeSet,
    a: float,
    *,
    radicand_tol: float = DEFAULT_RADICAND_TOL,
) -> float:
    """Coupling from the three diagonal second derivatives (>= 0 root).

    A radicand below ``-radicand_tol`` means the derivative data is too
    noisy or too coarse to carry a real coupling; values inside
    ``[-radicand_tol, 0]`` are clamped to zero.
    """
    d2 = derivatives.d2
    radicand = 0.5 * (d2[0, 0] + d2[1, 1] - d2[2, 2] + 2 * a * a)
    if radicand < -radicand_tol:
        raise NegativeRadicandError(
            f"coupling radicand {radicand:.6g} is negative beyond tolerance "
            f"{radicand_tol:.1e}; noise or step size too large"
        )
    return math.sqrt(max(radicand, 0.0))


def estimate_quadrature_means(
    derivatives: DerivativeSet,
    g: float,
    *,
    g_min: float | None = None,
) -> tuple[float, float]:
    """Cavity quadrature means ``(<x>, <p>)``; needs a resolvable coupling."""
    g_min = DEFAULT_NOISE_FLOOR if g_min is None else g_min
    if g <= g_min:
        raise CouplingTooSmallError(
            f"coupling {g:.3e} at or below threshold {g_min:.3e}; quadrature means "
            "are unidentifiable (0/0)"
        )
    root2 = math.sqrt(2.0)
    x_mean = -float(derivatives.d1[1, 2]) / (root2 * g)
    p_mean = -float(derivatives.d1[0, 2]) / (root2 * g)
    return x_mean, p_mean


def _omega_routes(
    derivatives: DerivativeSet, a: float, noise_floor: float
) -> dict[str, float]:
    """Per-route frequency estimates keyed 'x' and 'p', usable routes only.

    A route divides by a first derivative proportional to a quadrature
    mean; it is usable when that denominator exceeds ten times its own
    floor (the caller-supplied noise floor, raised by the per-entry
    uncertainty estimate when the derivative set carries one).
    """
    d1, d2 = derivatives.d1, derivatives.d2
    unc = derivatives.d1_uncertainty

    def threshold(i: int, k: int) -> float:
        floor = noise_floor if unc is None else max(noise_floor, float(unc[i, k]))
        return 10.0 * floor

    routes: dict[str, float] = {}
    if abs(d1[1, 2]) > threshold(1, 2):
        routes["x"] = -d2[0, 2] / d1[1, 2] - a
    if abs(d1[0, 2]) > threshold(0, 2):
        routes["p"] = d2[1, 2] / d1[0, 2] - a
    return routes


def estimate_omega(
    derivatives: DerivativeSet,
    a: float,
    *,
    noise_floor: float = DEFAULT_NOISE_FLOOR,
) -> float:
    """Cavity frequency via whichever quadrature-mean route is usable.

    Both routes divide by a first derivative proportional to a quadrature
    mean, so states with ``<x> = <p> = 0`` (vacuum, Fock, thermal) leave
    the frequency unidentifiable and raise.
    """
    routes = _omega_routes(derivatives, a, noise_floor)
    if not routes:
        raise OmegaUnidentifiableError(
            "both quadrature means are below threshold; cavity frequency cannot "
            "be recovered from this record"
        )
    return sum(routes.values()) / len(routes)


@dataclass(frozen=True)
class VarianceMatrix:
    """Symmetric 2x2 centered second moments of the (x, p) quadratures."""

    v_xx: float
    v_pp: float
    v_xp: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.v_xx, self.v_xp], [self.v_xp, self.v_pp]])


def estimate_variance_matrix(
    derivatives: DerivativeSet,
    a: float,
    g: float,
    *,
    g_min: float | None = None,
) -> VarianceMatrix:
    """Variance matrix of the cavity state from the mixed second derivatives."""
    g_min = DEFAULT_NOISE_FLOOR if g_min is None else g_min
    if g <= g_min:
        raise CouplingTooSmallError(
            f"coupling {g:.3e} at or below threshold {g_min:.3e}; variance matrix "
            "is unidentifiable"
        )
    d1, d2 = derivatives.d1, derivatives.d2
    two_g_sq = 2 * g * g
    v_xx = (-a * a - d2[1, 1] - d1[1, 2] ** 2) / two_g_sq
    v_pp = (-a * a - d2[0, 0] - d1[0, 2] ** 2) / two_g_sq
    v_xp = (-d2[0, 1] - d1[0, 2] * d1[1, 2]) / two_g_sq
    return VarianceMatrix(v_xx=float(v_xx), v_pp=float(v_pp), v_xp=float(v_xp))


def estimate_photon_statistics(
    derivatives: DerivativeSet,
    a: float,
    g: float,
    delta_detuning: float,
    *,
    g_min: float | None = None,
) -> tuple[float, float]:
    """Mean and variance of the photon number under dispersive dynamics.

    Assumes the record was generated in the dispersive regime and that a,
    g and the detuning are already known from a resonant-run estimate.
    """
    if delta_detuning == 0:
        raise DetuningZeroError("photon statistics require a nonzero detuning")
    g_min = default_g_min(a) if g_min is None else g_min
    if g <= g_min:
        raise CouplingTooSmallError(
            f"coupling {g:.3e} at or below threshold {g_min:.3e}; photon statistics "
            "are unidentifiable"
        )
    kappa = 2 * g * g / delta_detuning
    shift_mean = float(derivatives.d1[1, 0])
    shift_sq = -float(derivatives.d2[0, 0])
    n_mean = (shift_mean - a) / kappa - 0.5
    bracket = (kappa * kappa + 2 * a * kappa) * n_mean + a * a + kappa * kappa / 4 + a * kappa
    n_sq = (shift_sq - bracket) / (kappa * kappa)
    return float(n_mean), float(n_sq - n_mean * n_mean)


def consistency_check(
    derivatives: DerivativeSet,
    report: EstimateReport,
    *,
    noise_floor: float = DEFAULT_NOISE_FLOOR,
) -> list[Residual]:
    """Signed residuals of every redundant relation not used for estimation.

    Includes antisymmetry of the first-derivative tensor, equality of the
    two mixed second derivatives, the two relations tying d2[3,1] and
    d2[3,2] to the recovered parameters, and the spread between the two
    frequency routes when both are usable.
    """
    d1, d2 = derivatives.d1, derivatives.d2
    residuals = [
        Residual("d1_antisymmetry_12", float(d1[0, 1] + d1[1, 0])),
        Residual("d1_antisymmetry_13", float(d1[0, 2] + d1[2, 0])),
        Residual("d1_antisymmetry_23", float(d1[1, 2] + d1[2, 1])),
        Residual("d1_diagonal_1", float(d1[0, 0])),
        Residual("d1_diagonal_2", float(d1[1, 1])),
        Residual("d1_diagonal_3", float(d1[2, 2])),
        Residual("d2_cross_symmetry_12", float(d2[1, 0] - d2[0, 1])),
    ]
    a, g, omega = report.a_hat, report.g_hat, report.omega_hat
    if a is not None and g is not None and omega is not None:
        residuals.append(
            Residual(
                "d2_31_relation",
                float(d2[2, 0] + (a - omega) * d1[1, 2] + 2 * g * g),
            )
        )
        residuals.append(
            Residual(
                "d2_32_relation",
                float(d2[2, 1] - (a - omega) * d1[0, 2] + 2 * g * g),
            )
        )
    if a is not None:
        routes = _omega_routes(derivatives, a, noise_floor)
        if len(routes) == 2:
            residuals.append(
                Residual("omega_route_spread", routes["x"] - routes["p"])
            )
    return residuals


def estimate_report(
    record: TomographyRecord,
    *,
    stencil: str = "forward2",
    delta: float | None = None,
    dispersive: bool = False,
    known_a: float | None = None,
    known_g: float | None = None,
    known_omega: float | None = None,
    radicand_tol: float = DEFAULT_RADICAND_TOL,
    noise_floor: float = DEFAULT_NOISE_FLOOR,
) -> EstimateReport:
    """Full estimation chain on one record.

    In the default (resonant) mode the chain recovers a, g, the quadrature
    means, omega where identifiable, and the variance matrix. In
    dispersive mode the resonant estimators do not apply; a, g and omega
    must be known (passed in or found in the record's generator metadata)
    and the record yields the photon-number statistics instead.
    """
    derivatives = finite_difference_derivatives(record, stencil=stencil, delta=delta)
    generator = record.meta.get("generator", {})

    def fallback(known: float | None, key: str) -> float | None:
        if known is not None:
            return known
        value = generator.get(key)
        return float(value) if isinstance(value, (int, float)) else None

    warnings: list[str] = []

    if dispersive:
        a = fallback(known_a, "a")
        g = fallback(known_g, "g")
        omega = fallback(known_omega, "omega")
        if a is None or g is None or omega is None:
            raise ConfigError(
                "dispersive estimation needs known a, g and omega (pass them or "
                "use a record with generator metadata)"
            )
        n_mean, n_var = estimate_photon_statistics(
            derivatives, a, g, a - omega, g_min=default_g_min(a)
        )
        warnings.append(
            "dispersive mode: a_hat, g_hat, omega_hat are the supplied values, "
            "not estimates from this record"
        )
        report = EstimateReport(
            a_hat=a,
            g_hat=g,
            omega_hat=omega,
            n_mean=n_mean,
            n_var=n_var,
            warnings=tuple(warnings),
            stencil=derivatives.stencil,
            delta=derivatives.delta,
        )
        return replace(
            report,
            residuals=tuple(consistency_check(derivatives, report, noise_floor=noise_floor)),
        )

    a = estimate_a(derivatives)
    g = estimate_g(derivatives, a, radicand_tol=radicand_tol)
    g_min = default_g_min(a)
    x_mean, p_mean = estimate_quadrature_means(derivatives, g, g_min=g_min)
    variance = estimate_variance_matrix(derivatives, a, g, g_min=g_min)
    if variance.v_xx <= 0 or variance.v_pp <= 0:
        warnings.append(
            f"nonphysical variance diagonal (v_xx={variance.v_xx:.6g}, "
            f"v_pp={variance.v_pp:.6g}); noise likely dominates"
        )
    omega: float | None
    try:
        omega = estimate_omega(derivatives, a, noise_floor=noise_floor)
    except OmegaUnidentifiableError as exc:
        omega = None
        warnings.append(f"omega unidentifiable: {exc}")

    report = EstimateReport(
        a_hat=a,
        g_hat=g,
        omega_hat=omega,
        x_mean=x_mean,
        p_mean=p_mean,
        v_xx=variance.v_xx,
        v_pp=variance.v_pp,
        v_xp=variance.v_xp,
        warnings=tuple(warnings),
        stencil=derivatives.stencil,
        delta=derivatives.delta,
    )
    return replace(
        report,
        residuals=tuple(consistency_check(derivatives, report, noise_floor=noise_floor)),
    )
