"""Tomography time series: generation, noise, and file interchange.

A record holds the nine series ``c[i][k](t)`` (Pauli index i, preparation
index k) on one shared time grid, plus provenance metadata. Two file
formats are supported and round-trip losslessly:

* CSV with header ``time,c11,c12,c13,c21,c22,c23,c31,c32,c33`` where the
  digit pair is (i, k); metadata rides in a leading ``# meta: {...}``
  comment line; values are written with 17 significant digits so parsing
  returns the exact doubles.
* JSON with keys ``times`` (list), ``series`` (3x3 nested lists indexed
  [i][k][t]) and ``meta`` (object).

These files are the interchange boundary between the core, the CLI and
the HTTP service.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    GridIncompatibleError,
    InvalidNoiseSpecError,
    InvalidStateError,
    RecordFormatError,
    ShapeError,
)
from .operators import PAULIS, partial_trace_cavity
from .states import CavityStateSpec, prepare_cavity_state, prepare_qubit_state
from .dynamics import Propagator

CSV_COLUMNS = ["time"] + [f"c{i}{k}" for i in (1, 2, 3) for k in (1, 2, 3)]

_IMAG_TOL = 1e-10
_VALIDATION_FLOOR = 1e-9


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive i.i.d. Gaussian perturbation per data point, or none."""

    kind: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "additive-gaussian"):
            raise InvalidNoiseSpecError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidNoiseSpecError(f"noise sigma must be >= 0, got {self.sigma}")
        if self.kind == "none" and self.sigma != 0:
            raise InvalidNoiseSpecError("noise kind 'none' cannot carry a sigma")

    @classmethod
    def gaussian(cls, sigma: float, seed: int = 0) -> "NoiseSpec":
        return cls(kind="additive-gaussian", sigma=sigma, seed=seed)


def uniform_grid(delta: float, points: int) -> np.ndarray:
    """``0, delta, ..., (points-1) delta``."""
    if delta <= 0:
        raise ShapeError(f"grid spacing must be positive, got {delta}")
    if points < 1:
        raise ShapeError(f"grid needs at least one point, got {points}")
    return delta * np.arange(points, dtype=float)


def symmetric_grid(delta: float, steps_each_side: int) -> np.ndarray:
    """``-n delta, ..., 0, ..., n delta``; the explicit-request form that
    makes central stencils available on synthetic data."""
    if delta <= 0:
        raise ShapeError(f"grid spacing must be positive, got {delta}")
    if steps_each_side < 1:
        raise ShapeError("symmetric grid needs at least one step on each side")
    return delta * np.arange(-steps_each_side, steps_each_side + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class TomographyRecord:
    """Nine tomography series on one time grid, immutable after assembly."""

    times: np.ndarray
    series: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "series", np.asarray(self.series, dtype=float))
        self.validate()

    def validate(self) -> None:
        times, series = self.times, self.series
        if times.ndim != 1 or len(times) < 1:
            raise InvalidStateError("time grid must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0):
            raise InvalidStateError("time grid must be strictly ascending")
        if series.shape != (3, 3, len(times)):
            raise InvalidStateError(
                f"series shape {series.shape} does not match grid of {len(times)} points"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(series))):
            raise InvalidStateError("record contains non-finite values")
        j0 = self.t0_index
        tol = max(8 * self.noise_sigma, _VALIDATION_FLOOR)
        start = series[:, :, j0]
        if np.max(np.abs(start - np.eye(3))) > tol:
            raise InvalidStateError(
                "series at t=0 must equal the identity within the noise amplitude"
            )
        if np.max(np.abs(series)) > 1.0 + tol:
            raise InvalidStateError(
                "series exceed the Bloch bound |c| <= 1 beyond the noise amplitude"
            )

    @property
    def t0_index(self) -> int:
        j = int(np.argmin(np.abs(self.times)))
        if abs(self.times[j]) > 1e-12:
            raise InvalidStateError("time grid must contain t=0")
        return j

    @property
    def noise_sigma(self) -> float:
        noise = self.meta.get("noise", {})
        return float(noise.get("sigma", 0.0)) if noise.get("kind") != "none" else 0.0

    @property
    def grid_delta(self) -> float | None:
        """Uniform spacing, from metadata when present else from the grid."""
        grid_meta = self.meta.get("grid", {})
        if "delta" in grid_meta and grid_meta["delta"] is not None:
            return float(grid_meta["delta"])
        diffs = np.diff(self.times)
        if len(diffs) == 0:
            return None
        if np.max(np.abs(diffs - diffs[0])) > 1e-9 * max(1.0, diffs[0]):
            return None
        return float(diffs[0])

    def value_at(self, t: float) -> np.ndarray:
        """The 3x3 slice c[i,k] at grid time ``t`` (exact node lookup)."""
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > max(1e-9 * max(1.0, abs(t)), 1e-12):
            raise GridIncompatibleError(f"grid has no node at t={t:g}")
        return self.series[:, :, j]

    def series_for(self, i: int, k: int) -> np.ndarray:
        """One series by 1-based Pauli index i and preparation index k."""
        return self.series[i - 1, k - 1]

    def equals_exactly(self, other: "TomographyRecord") -> bool:
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.series, other.series)
            and self.meta == other.meta
        )

    def to_json_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "series": self.series.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TomographyRecord":
        try:
            times = data["times"]
            series = data["series"]
            meta = data.get("meta", {})
        except (KeyError, TypeError) as exc:
            raise RecordFormatError(f"record JSON missing field: {exc}") from exc
        arr = np.asarray(series, dtype=float)
        if arr.ndim != 3 or arr.shape[:2] != (3, 3):
            raise RecordFormatError(
                f"series must be a 3x3xT nested list, got shape {arr.shape}"
            )
        if arr.shape[2] != len(times):
            raise RecordFormatError(
                f"series length {arr.shape[2]} does not match grid of {len(times)} points"
            )
        return cls(times=np.asarray(times, dtype=float), series=arr, meta=meta)


def generate_time_series(
    H: np.ndarray,
    cavity: CavityStateSpec | np.ndarray,
    times: np.ndarray,
    *,
    generator_meta: dict | None = None,
) -> TomographyRecord:
    """Evolve the three preparations under ``H`` and read out the series.

    For each preparation k the separable initial state
    ``rho_k (x) rho_cavity`` is propagated to every grid time; the series
    value is the Pauli expectation of the reduced qubit state. Imaginary
    residues above 1e-10 abort, since they mean the evolution went
    non-Hermitian.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError(f"Hamiltonian must be square, got shape {H.shape}")
    if H.shape[0] % 2 != 0:
        raise ShapeError(f"joint dimension {H.shape[0]} is odd")
    dim = H.shape[0] // 2

    if isinstance(cavity, np.ndarray):
        rho_c = np.asarray(cavity, dtype=complex)
    else:
        rho_c = prepare_cavity_state(cavity, dim)
    if rho_c.shape != (dim, dim):
        raise ShapeError(
            f"cavity state shape {rho_c.shape} does not match Hamiltonian dim {dim}"
        )

    times = np.asarray(times, dtype=float)
    propagator = Propagator(H)
    etas = [np.kron(prepare_qubit_state(k), rho_c) for k in (1, 2, 3)]

    series = np.empty((3, 3, len(times)))
    for j, t in enumerate(times):
        u = propagator.unitary(t)
        u_dag = u.conj().T
        for k0, eta in enumerate(etas):
            reduced = partial_trace_cavity(u @ eta @ u_dag)
            for i0, pauli in enumerate(PAULIS):
                value = complex(np.trace(reduced @ pauli))
                if abs(value.imag) > _IMAG_TOL:
                    raise InvalidStateError(
                        f"series c{i0+1}{k0+1} at t={t:g} has imaginary residue "
                        f"{value.imag:.3e}"
                    )
                series[i0, k0, j] = value.real

    diffs = np.diff(times)
    uniform = len(diffs) > 0 and np.max(np.abs(diffs - diffs[0])) <= 1e-9 * max(
        1.0, abs(diffs[0])
    )
    meta = {
        "grid": {
            "delta": float(diffs[0]) if uniform else None,
            "points": int(len(times)),
            "includes_negative": bool(times[0] < 0),
        },
        "generator": dict(generator_meta or {}),
        "noise": {"kind": "none"},
    }
    return TomographyRecord(times=times, series=series, meta=meta)


def add_noise(record: TomographyRecord, spec: NoiseSpec) -> TomographyRecord:
    """Seeded Gaussian perturbation of every data point; no-op for sigma 0."""
    if spec.kind == "none" or spec.sigma == 0.0:
        return record
    rng = np.random.default_rng(spec.seed)
    noisy = record.series + rng.normal(0.0, spec.sigma, record.series.shape)
    meta = dict(record.meta)
    meta["noise"] = {"kind": spec.kind, "sigma": spec.sigma, "seed": spec.seed}
    return TomographyRecord(times=record.times.copy(), series=noisy, meta=meta)


def _format_from_path(path: str, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown record format {fmt!r}")
        return fmt
    lower = str(path).lower()
    if lower.endswith(".csv"):
        return "csv"
    if lower.endswith(".json"):
        return "json"
    raise ConfigError(f"cannot infer record format from path {path!r}; pass csv or json")


def write_record(record: TomographyRecord, path: str, fmt: str | None = None) -> None:
    fmt = _format_from_path(path, fmt)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record.to_json_dict(), fh, indent=1)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# meta: " + json.dumps(record.meta, sort_keys=True) + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for j, t in enumerate(record.times):
            values = [_fmt(t)] + [
                _fmt(record.series[i, k, j]) for i in range(3) for k in range(3)
            ]
            fh.write(",".join(values) + "\n")


def _read_csv(path: str) -> TomographyRecord:
    meta: dict = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("meta:"):
                    try:
                        meta = json.loads(body[len("meta:"):])
                    except json.JSONDecodeError as exc:
                        raise RecordFormatError(
                            f"{path}:{lineno}: malformed meta JSON: {exc}"
                        ) from exc
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                missing = [c for c in CSV_COLUMNS if c not in header]
                extra = [c for c in header if c not in CSV_COLUMNS]
                if missing or extra:
                    raise RecordFormatError(
                        f"{path}:{lineno}: bad header; missing columns {missing}, "
                        f"unexpected columns {extra}"
                    )
                continue
            parts = line.split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise RecordFormatError(
                    f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise RecordFormatError(f"{path}:{lineno}: {exc}") from exc
    if header is None:
        raise RecordFormatError(f"{path}: no header line found")
    if not rows:
        raise RecordFormatError(f"{path}: no data rows found")
    order = [header.index(c) for c in CSV_COLUMNS]
    data = np.asarray(rows, dtype=float)[:, order]
    times = data[:, 0]
    series = data[:, 1:].T.reshape(3, 3, len(times))
    return TomographyRecord(times=times, series=series, meta=meta)


def read_record(path: str, fmt: str | None = None) -> TomographyRecord:
    fmt = _format_from_path(path, fmt)
    if fmt == "csv":
        return _read_csv(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"{path}: malformed JSON: {exc}") from exc
    return TomographyRecord.from_json_dict(data)
