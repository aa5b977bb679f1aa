"""Command-line entry point: ``nonlocal-nls {exact,simulate,experiment,sweep,verify}``.

Exit status: 0 when a run completes or an experiment passes (or is
informational), 1 when an experiment fails or a run aborts or violates charge
conservation, 2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import itertools
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import analytic as an
from . import experiments as ex
from .config import (
    EXPERIMENT_KEYS,
    KIND_PARAMS,
    ConfigError,
    RunConfig,
    catalog_datum,
    load_config,
    parse_config,
    parse_real,
)
from .integrator import Termination, run
from .io import atomic_write_text, default_output_dir, write_report, write_timeseries

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- experiment dispatch ---------------------------------------------------------------------

_NO_INTEGRATION = ("h1_convergence", "norm_scaling", "offcenter_boundedness")


def _need(params: dict, key: str, name: str):
    if key not in params:
        raise ConfigError(f"experiment {name!r} needs {key!r}")
    return params[key]


def _grid_kwargs(params: dict) -> dict:
    out = {}
    if "n" in params:
        out["N"] = params["n"]
    if "l" in params:
        out["L"] = params["l"]
    return out


def run_experiment(name: str, params: dict, stepper_overrides: dict, output_dir) -> ex.ExperimentReport:
    """Dispatch a named experiment with already-typed parameters."""
    if name not in EXPERIMENT_KEYS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {tuple(EXPERIMENT_KEYS)}")
    unknown = set(params) - set(EXPERIMENT_KEYS[name])
    if unknown:
        raise ConfigError(f"experiment {name!r} does not take {', '.join(sorted(unknown))}")
    if stepper_overrides and name in _NO_INTEGRATION:
        raise ConfigError(f"experiment {name!r} does not integrate in time; stepper settings do not apply")

    def cfg(default):
        return replace(default, **stepper_overrides) if stepper_overrides else None

    grid = _grid_kwargs(params)
    if name == "small_data_blowup":
        alpha = _need(params, "alpha", name)
        return ex.exp_small_data_blowup(
            alpha, cfg(ex.small_data_config(alpha)), t_end=params.get("t_end"),
            sweep_alphas=params.get("sweep_alphas"), simulate_sweep=params.get("simulate_sweep", False),
            output_dir=output_dir, **grid,
        )
    if name == "soliton_instability":
        delta = _need(params, "delta", name)
        return ex.exp_soliton_instability(
            params.get("omega", 1.0), delta, cfg(ex.soliton_instability_config(delta)),
            t_end=params.get("t_end"), output_dir=output_dir, **grid,
        )
    if name == "even_equivalence":
        omega = params.get("omega", 1.0)
        return ex.exp_even_equivalence(
            omega, params.get("t_end", 1.0), cfg(ex.even_equivalence_config(omega)),
            zero_data=params.get("zero_data", False), output_dir=output_dir, **grid,
        )
    if name == "defocusing_probe":
        kind = _need(params, "kind", name)
        kind_params = {k: params[k] for k in ("omega", "alpha", "beta", "delta") if k in params}
        datum = catalog_datum(kind, kind_params)
        extra = {"t_end": params["t_end"]} if "t_end" in params else {}
        return ex.exp_defocusing_probe(datum, cfg(ex.StepperConfig()), output_dir=output_dir, **extra, **grid)
    if name == "h1_convergence":
        deltas = params.get("deltas", [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.0])
        return ex.exp_h1_convergence(params.get("omega", 1.0), deltas, **grid)
    if name == "norm_scaling":
        kw = {"N": params["n"]} if "n" in params else {}
        return ex.exp_norm_scaling(
            params.get("alphas", [0.25, 0.35, 0.5, 0.7, 1.0]), params.get("ks", [0, 1, 2, 3]), **kw
        )
    p = an.TwoSolitonParams(params.get("alpha", 1.0), params.get("beta", 0.5))
    kw = {"n_uniform": params["n_uniform"]} if "n_uniform" in params else {}
    return ex.exp_offcenter_boundedness(p, _need(params, "x0", name), **kw)


def _finish(report: ex.ExperimentReport, out_dir: Path, stem: str, plot: bool) -> int:
    if plot:
        from .plotting import plot_report

        report.artifacts.extend(str(p) for p in plot_report(report, out_dir))
    path = write_report(report, out_dir / f"{stem}.json")
    print(f"{report.name}: {report.verdict} -> {path}")
    for failed in report.failures:
        print(f"  failed check: {failed}", file=sys.stderr)
    return EXIT_FAIL if report.verdict == "fail" else EXIT_OK


def _simulate(cfg: RunConfig, out_dir: Path, plot: bool) -> int:
    if cfg.t_end is None:
        raise ConfigError("simulate needs [run] t_end")
    f0 = cfg.initial_field()
    traj = run(f0, cfg.t_end, cfg.stepper, cfg.equation, cfg.model)
    csv_path = write_timeseries(traj, out_dir / "simulate.csv")
    est = traj.blowup_estimate
    checks = {
        "finite": traj.termination is not Termination.NONFINITE_ABORT,
        "charge_conserved": not traj.conservation_violation,
    }
    failed = [k for k, ok in checks.items() if not ok]
    metrics = {
        "termination": traj.termination.value,
        "final_time": traj.final_time,
        "steps": traj.steps,
        "sup_norm_initial": float(traj.sup_norms[0]),
        "sup_norm_final": float(traj.sup_norms[-1]),
        "charge_initial": traj.samples[0].Q,
        "energy_initial": traj.samples[0].E,
        "charge_drift": traj.charge_drift,
        "energy_drift": traj.energy_drift,
        "blowup_time_detected": est.time if est else None,
        "blowup_time_uncertainty": est.uncertainty if est else None,
        "failed_checks": failed,
    }
    if cfg.kind in ("one_param", "two_param", "perturbed_soliton"):
        datum = cfg.datum()
        pair = datum.as_two_param() if isinstance(datum, an.PerturbedSolitonParams) else datum
        try:
            metrics["blowup_time_predicted"] = an.first_blowup_time(pair)
        except an.NoBlowupError:
            pass
    report = ex.ExperimentReport(
        name="simulate",
        inputs=cfg.to_dict(),
        metrics=metrics,
        verdict="fail" if failed else "pass",
        artifacts=[str(csv_path)],
        tolerances={"charge_drift": cfg.stepper.conservation_tol},
        grid={"N": f0.grid.num_points, "L": f0.grid.half_length, "dx": f0.grid.spacing},
        stepper=cfg.stepper.to_dict(),
    )
    return _finish(report, out_dir, "simulate", plot)


def execute(cfg: RunConfig, out_dir: Optional[Path] = None, plot: bool = True) -> int:
    """Run a parsed configuration: its experiment if it names one, otherwise a simulation."""
    out_dir = Path(out_dir or cfg.output_dir or default_output_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.experiment is not None:
        rep = run_experiment(cfg.experiment.name, cfg.experiment.params, cfg.stepper_overrides, out_dir)
        return _finish(rep, out_dir, cfg.experiment.name, plot)
    return _simulate(cfg, out_dir, plot)


# -- argument handling --------------------------------------------------------------------------------------


def _parse_range(text: str, what: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{what} must look like start:stop:step, got {text!r}")
    try:
        a, b, h = (parse_real(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from None
    if not h > 0 or b < a:
        raise UsageError(f"{what} needs step > 0 and stop >= start")
    n = int(np.floor((b - a) / h + 1e-9)) + 1
    return a + h * np.arange(n)


def cmd_exact(args) -> int:
    params = {k: getattr(args, k) for k in ("omega", "alpha", "beta", "delta") if getattr(args, k) is not None}
    try:
        datum = catalog_datum(args.kind, params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    times = list(args.t or [])
    if args.t_range:
        times.extend(_parse_range(args.t_range, "--t-range").tolist())
    if not times:
        times = [0.0]
    x = _parse_range(args.x_range, "--x-range")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t", "x", "re_u", "im_u", "abs_u"))
    for t in times:
        try:
            u = an.exact_values(datum, t, x)
        except an.PoleProximityError as exc:
            raise UsageError(f"t={t}: {exc}") from None
        for xi, ui in zip(x, u):
            writer.writerow([format(v, ".17g") for v in (t, xi, ui.real, ui.imag, abs(ui))])
    if args.output:
        atomic_write_text(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


_STEPPER_FLAGS = ("scheme", "dt0", "adaptive", "dealias", "monitor_stride")


def _stepper_overrides(args) -> list:
    out = []
    for key in _STEPPER_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            out.append(f"stepper.{key}={value}")
    return out


def cmd_simulate(args) -> int:
    overrides = list(args.set or [])
    for key, dotted in (("t_end", "run.t_end"), ("equation", "run.equation"), ("N", "grid.n"), ("L", "grid.l")):
        value = getattr(args, key)
        if value is not None:
            overrides.append(f"{dotted}={value}")
    overrides += _stepper_overrides(args)
    cfg = load_config(args.config, overrides)
    return execute(cfg, args.output_dir, args.plot)


_EXPERIMENT_FLAGS = {
    "alpha": "alpha", "beta": "beta", "omega": "omega", "delta": "delta", "x0": "x0", "t_end": "t_end",
    "N": "n", "L": "l", "kind": "kind", "alphas": "alphas", "deltas": "deltas", "ks": "ks",
    "sweep_alphas": "sweep_alphas", "simulate_sweep": "simulate_sweep", "zero_data": "zero_data",
    "n_uniform": "n_uniform",
}


def _experiment_text(name: str, config_path) -> tuple:
    if config_path is None:
        return f"[experiment]\nname = {name}\n", None
    path = Path(config_path)
    try:
        return path.read_text(), path.parent
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def cmd_experiment(args) -> int:
    text, base = _experiment_text(args.name, args.config)
    overrides = [f"experiment.name={args.name}"] + list(args.set or [])
    for flag, key in _EXPERIMENT_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            overrides.append(f"experiment.{key}={value}")
    overrides += _stepper_overrides(args)
    cfg = parse_config(text, overrides, base_dir=base)
    return execute(cfg, args.output_dir, args.plot)


def _job_label(assignment: dict) -> str:
    parts = [f"{k.split('.')[-1]}{v}" for k, v in assignment.items()]
    return re.sub(r"[^A-Za-z0-9_.=-]", "_", "_".join(parts))


def _sweep_job(text: str, base, overrides: list, out_dir: str, plot: bool) -> int:
    # runs in a worker process; owns out_dir exclusively
    logging.basicConfig(level=logging.WARNING)
    try:
        cfg = parse_config(text, overrides, base_dir=base)
        return execute(cfg, Path(out_dir), plot)
    except (ConfigError, ValueError) as exc:
        print(f"job {out_dir}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def cmd_sweep(args) -> int:
    if (args.config is None) == (args.experiment is None):
        raise UsageError("sweep needs exactly one of --config or --experiment")
    if args.config is not None:
        path = Path(args.config)
        try:
            text, base = path.read_text(), path.parent
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    else:
        text, base = f"[experiment]\nname = {args.experiment}\n", None
    axes = []
    for item in args.param or []:
        key, sep, values = item.partition("=")
        if not sep or not values:
            raise UsageError(f"--param must look like key=v1,v2,..., got {item!r}")
        key = key.strip().lower()
        if "." not in key:
            if args.experiment is None:
                raise UsageError(f"--param {key!r}: use section.key when sweeping a config")
            key = f"experiment.{key}"
        axes.append((key, [v.strip() for v in values.split(";" if ";" in values else ",") if v.strip()]))
    if not axes:
        raise UsageError("sweep needs at least one --param")
    keys = [k for k, _ in axes]
    combos = [dict(zip(keys, values)) for values in itertools.product(*(v for _, v in axes))]
    out_root = Path(args.output_dir or default_output_dir())
    base_overrides = list(args.set or [])
    # validate every job up front so a typo fails before any work starts
    jobs = []
    for i, combo in enumerate(combos):
        overrides = base_overrides + [f"{k}={v}" for k, v in combo.items()]
        parse_config(text, overrides, base_dir=base)
        jobs.append((combo, overrides, out_root / f"job_{i:03d}_{_job_label(combo)}"))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_job, text, base, o, str(d), args.plot) for _, o, d in jobs]
            statuses = [f.result() for f in futures]
    else:
        statuses = [_sweep_job(text, base, o, str(d), args.plot) for _, o, d in jobs]
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["job", *keys, "exit_status", "output_dir"])
    for i, ((combo, _, d), status) in enumerate(zip(jobs, statuses)):
        writer.writerow([i, *(combo[k] for k in keys), status, str(d)])
    summary = atomic_write_text(out_root / "sweep_summary.csv", buf.getvalue())
    print(f"sweep: {len(jobs)} jobs, {sum(s == 0 for s in statuses)} ok -> {summary}")
    return max(statuses) if statuses else EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import CRITERIA, check_artifacts, run_all

    only = None
    if args.only:
        try:
            only = sorted({int(n) for n in args.only.split(",")})
        except ValueError:
            raise UsageError(f"--only takes comma-separated criterion numbers, got {args.only!r}") from None
        bad = [n for n in only if n not in CRITERIA]
        if bad:
            raise UsageError(f"no such criteria: {bad}")
    out = Path(args.output_dir or default_output_dir()) / "verify"
    results = run_all(out, only)
    problems = check_artifacts(out)
    for p in problems:
        print(f"schema violation: {p}")
    print(f"schema check: {'PASS' if not problems else 'FAIL'} ({out})")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) and not problems else EXIT_FAIL


def _add_stepper_flags(p):
    g = p.add_argument_group("stepper overrides")
    g.add_argument("--scheme", choices=("strang_pair_rk4", "if_rk4", "strang_exact"))
    g.add_argument("--dt0", type=str)
    g.add_argument("--adaptive", choices=("true", "false"))
    g.add_argument("--dealias", choices=("true", "false"))
    g.add_argument("--monitor-stride", dest="monitor_stride", type=int)


def _add_output_flags(p):
    p.add_argument("--output-dir", type=Path, help="defaults to $NONLOCAL_NLS_OUTPUT_DIR or ./nonlocal_nls_output")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                   help="render PNG figures next to the CSV files (default: on)")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-nls", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="tabulate a closed-form solution")
    p.add_argument("--kind", required=True, choices=tuple(KIND_PARAMS))
    for name in ("alpha", "beta", "omega", "delta"):
        p.add_argument(f"--{name}", type=parse_real)
    p.add_argument("--t", type=parse_real, action="append", help="time (repeatable)")
    p.add_argument("--t-range", dest="t_range", metavar="START:STOP:STEP")
    p.add_argument("--x-range", dest="x_range", required=True, metavar="START:STOP:STEP")
    p.add_argument("--output", type=Path, help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="one run from a config file")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--t-end", dest="t_end")
    p.add_argument("--equation", choices=("focusing", "defocusing"))
    p.add_argument("--N", dest="N")
    p.add_argument("--L", dest="L")
    _add_stepper_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=tuple(EXPERIMENT_KEYS))
    p.add_argument("--config", type=Path, help="config whose [experiment] section supplies defaults")
    for flag in ("alpha", "beta", "omega", "delta", "x0"):
        p.add_argument(f"--{flag}")
    p.add_argument("--t-end", dest="t_end")
    p.add_argument("--N", dest="N")
    p.add_argument("--L", dest="L")
    p.add_argument("--kind", choices=tuple(KIND_PARAMS))
    p.add_argument("--alphas", help="comma-separated list")
    p.add_argument("--deltas", help="comma-separated list; ratios such as 1/16 are accepted")
    p.add_argument("--ks", help="comma-separated list")
    p.add_argument("--sweep-alphas", dest="sweep_alphas")
    p.add_argument("--n-uniform", dest="n_uniform")
    p.add_argument("--simulate-sweep", dest="simulate_sweep", action="store_const", const="true")
    p.add_argument("--zero-data", dest="zero_data", action="store_const", const="true")
    _add_stepper_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="cartesian sweep over experiment or config parameters")
    p.add_argument("--experiment", choices=tuple(EXPERIMENT_KEYS))
    p.add_argument("--config", type=Path)
    p.add_argument("--param", action="append", metavar="KEY=V1,V2,...",
                   help="axis of the sweep; use ';' as separator for list-valued keys")
    p.add_argument("--jobs", type=int, default=1)
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance suite and check output schemas")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--output-dir", type=Path)
    p.set_defaults(func=cmd_verify)
    return parser


_VALUE_FLAGS = ("--x-range", "--t-range", "--t", "--L", "--alpha", "--beta", "--omega", "--delta", "--x0")


def _attach_negative_values(argv: list) -> list:
    """Rewrite ``--x-range -10:10:0.1`` as ``--x-range=-10:10:0.1`` so argparse does not read it as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and len(argv[i + 1]) > 1:
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
