"""Run orchestration shared by the CLI and the HTTP service.

A ``SimulationConfig`` pins everything a run needs; the functions here
turn it into records, reports, step-size sweeps and oracle cross-checks.
Both front ends stay thin by delegating to this module, so a sweep row
and a one-off estimate of the same configuration are bit-identical.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import (
    DispersiveParams,
    HamiltonianParams,
    ModeSpec,
    MultimodeParams,
    build_dispersive_hamiltonian,
    build_jc_hamiltonian,
    build_multimode_jc,
    dim_cap,
)
from .errors import CapacityError, ConfigError, JcprobeError
from .estimator import EstimateReport, estimate_report, finite_difference_derivatives
from .oracle import analytic_derivatives, cavity_moments
from .states import CavityStateSpec, prepare_cavity_product, prepare_cavity_state
from .tomography import (
    NoiseSpec,
    TomographyRecord,
    add_noise,
    generate_time_series,
    symmetric_grid,
    uniform_grid,
)

KINDS = ("jc", "dispersive", "multimode")


@dataclass(frozen=True)
class SimulationConfig:
    """One simulated experiment: generator, cavity state, grid, noise."""

    kind: str = "jc"
    a: float = 1.0
    omega: float = 1.0
    g: float = 1.0
    dim: int = 400
    modes: tuple[ModeSpec, ...] = ()
    cavity: CavityStateSpec = field(default_factory=lambda: CavityStateSpec.coherent(1.0))
    delta: float = 0.01
    steps: int = 8
    include_negative: bool = False
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown simulation kind {self.kind!r}; expected {KINDS}")
        if self.kind == "multimode" and not self.modes:
            raise ConfigError("multimode simulation needs at least one mode")
        if self.delta <= 0:
            raise ConfigError(f"grid spacing must be positive, got {self.delta}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")


def _check_capacity(joint_dim: int) -> None:
    cap = dim_cap()
    if joint_dim > cap:
        raise CapacityError(
            f"joint dimension {joint_dim} exceeds cap {cap}; "
            "set JC_PROBE_DIM_CAP to raise it"
        )


def build_generator(config: SimulationConfig) -> tuple[np.ndarray, np.ndarray, dict]:
    """Hamiltonian, cavity density matrix and generator metadata for a config."""
    if config.kind == "multimode":
        params = MultimodeParams(a=config.a, modes=config.modes)
        _check_capacity(2 * params.dim_total)
        H = build_multimode_jc(params)
        specs = [config.cavity] * len(config.modes)
        rho_c = prepare_cavity_product(specs, [m.dim for m in config.modes])
        meta = {
            "kind": "multimode",
            "a": config.a,
            "omega": [m.omega for m in config.modes],
            "g": [m.g for m in config.modes],
            "dim": [m.dim for m in config.modes],
            "cavity": config.cavity.label(),
        }
        return H, rho_c, meta

    _check_capacity(2 * config.dim)
    if config.kind == "dispersive":
        params = DispersiveParams(
            a=config.a, omega=config.omega, g=config.g, dim_cavity=config.dim
        )
        H = build_dispersive_hamiltonian(params)
        meta = {
            "kind": "dispersive",
            "a": config.a,
            "omega": config.omega,
            "g": config.g,
            "dim": config.dim,
            "cavity": config.cavity.label(),
            "delta_detuning": params.delta,
            "dispersive_ratio": params.dispersive_ratio,
        }
    else:
        jc = HamiltonianParams(
            a=config.a, omega=config.omega, g=config.g, dim_cavity=config.dim
        )
        H = build_jc_hamiltonian(jc)
        meta = {
            "kind": "jc",
            "a": config.a,
            "omega": config.omega,
            "g": config.g,
            "dim": config.dim,
            "cavity": config.cavity.label(),
        }
    rho_c = prepare_cavity_state(config.cavity, config.dim)
    return H, rho_c, meta


def run_simulate(config: SimulationConfig) -> TomographyRecord:
    """Generate the nine series for the configured experiment."""
    H, rho_c, generator_meta = build_generator(config)
    if config.include_negative:
        times = symmetric_grid(config.delta, config.steps)
    else:
        times = uniform_grid(config.delta, config.steps)
    record = generate_time_series(H, rho_c, times, generator_meta=generator_meta)
    return add_noise(record, config.noise)


@dataclass(frozen=True)
class EstimateOptions:
    stencil: str = "forward2"
    delta: float | None = None
    dispersive: bool = False
    known_a: float | None = None
    known_g: float | None = None
    known_omega: float | None = None
    radicand_tol: float = 1e-8
    noise_floor: float = 1e-6


def run_estimate(record: TomographyRecord, options: EstimateOptions) -> EstimateReport:
    return estimate_report(
        record,
        stencil=options.stencil,
        delta=options.delta,
        dispersive=options.dispersive,
        known_a=options.known_a,
        known_g=options.known_g,
        known_omega=options.known_omega,
        radicand_tol=options.radicand_tol,
        noise_floor=options.noise_floor,
    )


@dataclass(frozen=True)
class TruthValues:
    """Reference values a sweep measures its relative errors against."""

    a: float | None = None
    g: float | None = None
    omega: float | None = None
    x_mean: float | None = None
    p_mean: float | None = None
    v_xx: float | None = None
    v_pp: float | None = None
    v_xp: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "a": self.a,
            "g": self.g,
            "omega": self.omega,
            "x_mean": self.x_mean,
            "p_mean": self.p_mean,
            "v_xx": self.v_xx,
            "v_pp": self.v_pp,
            "v_xp": self.v_xp,
        }


def truth_values(config: SimulationConfig) -> TruthValues:
    """Exact targets for the configured generator, from the moment oracle."""
    if config.kind == "multimode":
        g_eff = math.sqrt(sum(m.g**2 for m in config.modes))
        omegas = {m.omega for m in config.modes}
        return TruthValues(
            a=config.a,
            g=g_eff,
            omega=omegas.pop() if len(omegas) == 1 else None,
        )
    rho_c = prepare_cavity_state(config.cavity, config.dim)
    m = cavity_moments(rho_c)
    root2 = math.sqrt(2.0)
    x_mean = m.sum_mean.real / root2
    p_mean = (m.diff_mean / 1j).real / root2
    return TruthValues(
        a=config.a,
        g=config.g,
        omega=config.omega,
        x_mean=x_mean,
        p_mean=p_mean,
        v_xx=(m.sum_sq - m.sum_mean.real**2) / 2,
        v_pp=(m.diff_sq - (m.diff_mean / 1j).real ** 2) / 2,
        v_xp=((m.sum_mean * m.diff_mean - m.sq_diff) * 0.5j).real,
    )


def relative_error(estimate: float | None, truth: float | None) -> float:
    """Relative error, absolute where the truth is zero; NaN when undefined."""
    if estimate is None or truth is None:
        return math.nan
    if truth == 0:
        return abs(estimate)
    return abs(estimate - truth) / abs(truth)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    report: EstimateReport | None
    status: str
    reason: str

    def errors_against(self, truth: TruthValues) -> dict[str, float]:
        r = self.report
        if r is None:
            return {k: math.nan for k in ("a", "g", "omega", "v_xx", "v_pp", "v_xp")}
        return {
            "a": relative_error(r.a_hat, truth.a),
            "g": relative_error(r.g_hat, truth.g),
            "omega": relative_error(r.omega_hat, truth.omega),
            "v_xx": relative_error(r.v_xx, truth.v_xx),
            "v_pp": relative_error(r.v_pp, truth.v_pp),
            "v_xp": relative_error(r.v_xp, truth.v_xp),
        }


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    truth: TruthValues

    SWEEP_COLUMNS = (
        "delta,a_hat,g_hat,omega_hat,v_xx,v_pp,v_xp,"
        "err_a,err_g,err_omega,err_v_xx,err_v_pp,err_v_xp,status,reason"
    )

    def to_csv(self) -> str:
        def fmt(x) -> str:
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return "nan"
            return format(float(x), ".17g")

        lines = [self.SWEEP_COLUMNS]
        for row in self.rows:
            r = row.report
            errors = row.errors_against(self.truth)
            fields = [fmt(row.delta)]
            fields += [
                fmt(getattr(r, name) if r is not None else None)
                for name in ("a_hat", "g_hat", "omega_hat", "v_xx", "v_pp", "v_xp")
            ]
            fields += [fmt(errors[k]) for k in ("a", "g", "omega", "v_xx", "v_pp", "v_xp")]
            fields += [row.status, '"%s"' % row.reason.replace('"', "'")]
            lines.append(",".join(fields))
        return "\n".join(lines) + "\n"


def _sweep_record(
    config: SimulationConfig, delta: float, stencil: str, subsample_base: TomographyRecord | None
) -> TomographyRecord:
    if subsample_base is not None:
        return subsample_base
    if stencil == "central2":
        cfg = replace(config, delta=delta, steps=1, include_negative=True)
    else:
        cfg = replace(config, delta=delta, steps=4, include_negative=False)
    return run_simulate(cfg)


def run_sweep(
    config: SimulationConfig,
    deltas: list[float],
    *,
    stencil: str = "forward2",
    subsample: bool = False,
    workers: int = 1,
    options: EstimateOptions | None = None,
) -> SweepResult:
    """Estimate once per step size; failures become NaN rows with a reason.

    By default each step size regenerates its own series, mirroring an
    experiment where the sampling interval is a physical choice. With
    ``subsample=True`` one dense grid at the smallest step is generated
    and coarser stencils reuse its nodes, which requires every delta to be
    an integer multiple of the smallest one.
    """
    if not deltas:
        raise ConfigError("sweep needs at least one step size")
    if any(d <= 0 for d in deltas):
        raise ConfigError("sweep step sizes must be positive")
    options = options or EstimateOptions(stencil=stencil)
    if options.stencil != stencil:
        options = replace(options, stencil=stencil)

    base: TomographyRecord | None = None
    if subsample:
        d_min, d_max = min(deltas), max(deltas)
        for d in deltas:
            ratio = d / d_min
            if abs(ratio - round(ratio)) > 1e-9:
                raise ConfigError(
                    "subsampled sweep needs every delta to be an integer multiple "
                    f"of the smallest one; {d:g} / {d_min:g} is not"
                )
        if stencil == "central2":
            cfg = replace(
                config,
                delta=d_min,
                steps=int(round(d_max / d_min)),
                include_negative=True,
            )
        else:
            cfg = replace(
                config,
                delta=d_min,
                steps=int(round(3 * d_max / d_min)) + 1,
                include_negative=False,
            )
        base = run_simulate(cfg)

    def one(delta: float) -> SweepRow:
        try:
            record = _sweep_record(config, delta, stencil, base)
            report = run_estimate(record, replace(options, delta=delta))
            return SweepRow(delta=delta, report=report, status="ok", reason="")
        except JcprobeError as exc:
            return SweepRow(
                delta=delta,
                report=None,
                status="error",
                reason=f"{type(exc).__name__}: {exc}",
            )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(one, deltas))
    else:
        rows = tuple(one(d) for d in deltas)
    return SweepResult(rows=rows, truth=truth_values(config))


@dataclass(frozen=True)
class OracleCheckResult:
    """Side-by-side exact vs finite-difference derivative tensors."""

    delta: float
    stencil: str
    d1_exact: np.ndarray
    d2_exact: np.ndarray
    d1_fd: np.ndarray
    d2_fd: np.ndarray
    max_dev_d1: float
    max_dev_d2: float
    bound_d1: float
    bound_d2: float
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "delta": self.delta,
            "stencil": self.stencil,
            "d1_exact": self.d1_exact.tolist(),
            "d2_exact": self.d2_exact.tolist(),
            "d1_fd": self.d1_fd.tolist(),
            "d2_fd": self.d2_fd.tolist(),
            "max_dev_d1": self.max_dev_d1,
            "max_dev_d2": self.max_dev_d2,
            "bound_d1": self.bound_d1,
            "bound_d2": self.bound_d2,
            "passed": self.passed,
        }


def run_oracle_check(
    config: SimulationConfig,
    *,
    delta: float | None = None,
    stencil: str = "forward2",
) -> OracleCheckResult:
    """Compare stencil derivatives against the commutator oracle.

    The acceptance bound is heuristic: deviations must stay below
    ``10 delta^2`` times a next-order derivative scale estimated from the
    exact tensors themselves (their magnitude times a squared frequency
    scale). The factor-of-ten slack absorbs the unknown stencil constant.
    """
    delta = config.delta if delta is None else delta
    H, rho_c, generator_meta = build_generator(config)
    oracle = analytic_derivatives(H, rho_c, include_moments=config.kind != "multimode")

    if stencil == "central2":
        times = symmetric_grid(delta, 1)
    else:
        times = uniform_grid(delta, 4)
    record = generate_time_series(H, rho_c, times, generator_meta=generator_meta)
    fd = finite_difference_derivatives(record, stencil=stencil, delta=delta)

    scale_d1 = max(float(np.max(np.abs(oracle.d1))), 1e-9)
    scale_d2 = max(float(np.max(np.abs(oracle.d2))), 1e-9)
    freq_sq = scale_d2 / max(scale_d1, 1.0)
    bound_d1 = 10.0 * delta**2 * scale_d1 * freq_sq
    bound_d2 = 10.0 * delta**2 * scale_d2 * freq_sq
    max_dev_d1 = float(np.max(np.abs(fd.d1 - oracle.d1)))
    max_dev_d2 = float(np.max(np.abs(fd.d2 - oracle.d2)))
    return OracleCheckResult(
        delta=delta,
        stencil=stencil,
        d1_exact=oracle.d1,
        d2_exact=oracle.d2,
        d1_fd=fd.d1,
        d2_fd=fd.d2,
        max_dev_d1=max_dev_d1,
        max_dev_d2=max_dev_d2,
        bound_d1=bound_d1,
        bound_d2=bound_d2,
        passed=max_dev_d1 <= bound_d1 and max_dev_d2 <= bound_d2,
    )
