"""Command-line front end: a thin client over the run pipeline.

Subcommands
-----------
simulate      generate a tomography record and write it to CSV or JSON
estimate      read a record, run the estimation chain, write a JSON report
sweep         repeat simulate+estimate over a list of step sizes (CSV out)
oracle-check  compare stencil derivatives against the exact commutator route

Exit codes: 0 success, 1 oracle-check bound exceeded, 2 parse/config,
3 physics precondition, 4 estimation failure, 5 I/O. A JSON config file
passed via --config overrides the command-line flags.
"""

import argparse
import json
import sys

from .dynamics import ModeSpec
from .errors import ConfigError, EXIT_IO, JcprobeError
from .pipeline import (
    EstimateOptions,
    SimulationConfig,
    run_estimate,
    run_oracle_check,
    run_simulate,
    run_sweep,
)
from .states import CavityStateSpec
from .tomography import NoiseSpec, read_record, write_record


def _float_list(value) -> list[float]:
    # Config-file overrides may supply numbers or lists instead of strings.
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {value!r}: {exc}") from exc


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", default="1", help="qubit splitting (default 1)")
    parser.add_argument(
        "--omega", default="1", help="cavity frequency; comma list with --modes"
    )
    parser.add_argument(
        "--g", default="1", help="coupling strength; comma list with --modes"
    )
    parser.add_argument(
        "--cavity",
        default="coherent:1",
        help="initial cavity state: coherent:<alpha>|fock:<n>|thermal:<nbar>",
    )
    parser.add_argument(
        "--dim", default="400", help="Fock truncation; comma list with --modes"
    )
    parser.add_argument("--delta", type=float, default=0.01, help="grid spacing")
    parser.add_argument("--steps", type=int, default=8, help="grid points (from t=0)")
    parser.add_argument(
        "--negative-times",
        action="store_true",
        help="extend the grid to negative times (enables central2)",
    )
    parser.add_argument("--noise-sigma", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--dispersive", action="store_true", help="use the dispersive generator"
    )
    parser.add_argument(
        "--modes", type=int, default=0, help="number of cavity modes (multimode run)"
    )


def _sim_config(args: argparse.Namespace) -> SimulationConfig:
    cavity = CavityStateSpec.parse(args.cavity)
    noise = (
        NoiseSpec.gaussian(args.noise_sigma, args.seed)
        if args.noise_sigma > 0
        else NoiseSpec()
    )
    a_values = _float_list(args.a)
    if len(a_values) != 1:
        raise ConfigError("--a takes a single value")
    a = a_values[0]

    if args.modes and args.modes > 1:
        omegas = _float_list(args.omega)
        gs = _float_list(args.g)
        dims = [int(v) for v in _float_list(args.dim)]
        n = args.modes
        if len(omegas) == 1:
            omegas *= n
        if len(dims) == 1:
            dims *= n
        if len(gs) != n or len(omegas) != n or len(dims) != n:
            raise ConfigError(
                f"--modes {n} needs {n} comma-separated values for --g "
                "(and --omega/--dim unless single)"
            )
        modes = tuple(
            ModeSpec(omega=w, g=g, dim=d) for w, g, d in zip(omegas, gs, dims)
        )
        return SimulationConfig(
            kind="multimode",
            a=a,
            modes=modes,
            cavity=cavity,
            delta=args.delta,
            steps=args.steps,
            include_negative=args.negative_times,
            noise=noise,
        )

    omegas = _float_list(args.omega)
    gs = _float_list(args.g)
    dims = _float_list(args.dim)
    if len(omegas) != 1 or len(gs) != 1 or len(dims) != 1:
        raise ConfigError("--omega/--g/--dim take single values unless --modes is set")
    return SimulationConfig(
        kind="dispersive" if args.dispersive else "jc",
        a=a,
        omega=omegas[0],
        g=gs[0],
        dim=int(dims[0]),
        cavity=cavity,
        delta=args.delta,
        steps=args.steps,
        include_negative=args.negative_times,
        noise=noise,
    )


def _apply_config_file(args: argparse.Namespace) -> None:
    # Per the run-config contract, file entries override flag values.
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {args.config}: malformed JSON: {exc}") from exc
    if not isinstance(overrides, dict):
        raise ConfigError(f"config file {args.config}: expected a JSON object")
    for key, value in overrides.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"config file {args.config}: unknown field {key!r}")
        setattr(args, attr, value)


def _print_report(report) -> None:
    print(f"  stencil={report.stencil} delta={report.delta:g}")
    rows = [
        ("a_hat", report.a_hat),
        ("g_hat", report.g_hat),
        ("omega_hat", report.omega_hat),
        ("x_mean", report.x_mean),
        ("p_mean", report.p_mean),
        ("v_xx", report.v_xx),
        ("v_pp", report.v_pp),
        ("v_xp", report.v_xp),
        ("n_mean", report.n_mean),
        ("n_var", report.n_var),
    ]
    for name, value in rows:
        if value is not None:
            print(f"  {name:<10} {value: .10g}")
    if report.residuals:
        worst = max(abs(r.value) for r in report.residuals)
        print(f"  residuals  {len(report.residuals)} checks, max |value| = {worst:.3e}")
    for warning in report.warnings:
        print(f"  warning: {warning}")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _sim_config(args)
    record = run_simulate(config)
    write_record(record, args.out, args.format)
    grid = record.meta.get("grid", {})
    gen = record.meta.get("generator", {})
    print(
        f"wrote {args.out}: {grid.get('points')} points, delta={grid.get('delta')}, "
        f"kind={gen.get('kind')}, dim={gen.get('dim')}, cavity={gen.get('cavity')}"
    )
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    record = read_record(args.record, args.format)
    options = EstimateOptions(
        stencil=args.stencil,
        delta=args.delta,
        dispersive=args.dispersive,
        known_a=args.known_a,
        known_g=args.known_g,
        known_omega=args.known_omega,
    )
    report = run_estimate(record, options)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    print(f"estimate of {args.record}:")
    _print_report(report)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _sim_config(args)
    deltas = _float_list(args.deltas)
    result = run_sweep(
        config,
        deltas,
        stencil=args.stencil,
        subsample=args.subsample,
        workers=args.workers,
    )
    csv_text = result.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out}: {len(result.rows)} rows")
    else:
        print(csv_text, end="")
    failures = [row for row in result.rows if row.status != "ok"]
    for row in failures:
        print(f"  delta={row.delta:g}: {row.reason}", file=sys.stderr)
    return 0


def cmd_oracle_check(args: argparse.Namespace) -> int:
    config = _sim_config(args)
    result = run_oracle_check(config, delta=args.delta, stencil=args.stencil)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result.to_json_dict(), fh, indent=1)
            fh.write("\n")
    print(f"oracle check at delta={result.delta:g}, stencil={result.stencil}")
    for name, exact, fd in (
        ("d1", result.d1_exact, result.d1_fd),
        ("d2", result.d2_exact, result.d2_fd),
    ):
        print(f"  {name} exact:")
        for row in exact:
            print("    " + "  ".join(f"{v: .8f}" for v in row))
        print(f"  {name} finite-difference:")
        for row in fd:
            print("    " + "  ".join(f"{v: .8f}" for v in row))
    print(
        f"  max deviation d1: {result.max_dev_d1:.3e} (bound {result.bound_d1:.3e})"
    )
    print(
        f"  max deviation d2: {result.max_dev_d2:.3e} (bound {result.bound_d2:.3e})"
    )
    print(f"  {'PASS' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jcprobe",
        description="Simulate a qubit-cavity system and recover its parameters "
        "from qubit tomography time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a tomography record")
    _add_sim_flags(p_sim)
    p_sim.add_argument("--out", required=True, help="output record path (.csv or .json)")
    p_sim.add_argument("--format", choices=("csv", "json"), default=None)
    p_sim.add_argument("--config", help="JSON file whose entries override flags")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate parameters from a record")
    p_est.add_argument("record", help="record file (.csv or .json)")
    p_est.add_argument("--format", choices=("csv", "json"), default=None)
    p_est.add_argument("--stencil", choices=("forward2", "central2"), default="forward2")
    p_est.add_argument("--delta", type=float, default=None)
    p_est.add_argument("--dispersive", action="store_true")
    p_est.add_argument(
        "--a", dest="known_a", type=float, default=None,
        help="known qubit splitting (dispersive mode; record metadata otherwise)",
    )
    p_est.add_argument("--g", dest="known_g", type=float, default=None)
    p_est.add_argument("--omega", dest="known_omega", type=float, default=None)
    p_est.add_argument("--out", help="write the JSON report here")
    p_est.add_argument("--config", help="JSON file whose entries override flags")
    p_est.set_defaults(func=cmd_estimate)

    p_sweep = sub.add_parser("sweep", help="estimate across step sizes")
    _add_sim_flags(p_sweep)
    p_sweep.add_argument("--deltas", required=True, help="comma-separated step sizes")
    p_sweep.add_argument(
        "--stencil", choices=("forward2", "central2"), default="forward2"
    )
    p_sweep.add_argument(
        "--subsample",
        action="store_true",
        help="reuse one dense grid instead of regenerating per delta",
    )
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", help="output CSV path (stdout when omitted)")
    p_sweep.add_argument("--config", help="JSON file whose entries override flags")
    p_sweep.set_defaults(func=cmd_sweep)

    p_oc = sub.add_parser(
        "oracle-check", help="compare stencil derivatives to the exact route"
    )
    _add_sim_flags(p_oc)
    p_oc.add_argument(
        "--stencil", choices=("forward2", "central2"), default="forward2"
    )
    p_oc.add_argument("--out", help="write the comparison JSON here")
    p_oc.add_argument("--config", help="JSON file whose entries override flags")
    p_oc.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except JcprobeError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
