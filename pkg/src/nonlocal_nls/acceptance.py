"""The acceptance suite: one function per numbered criterion.

Each function runs its experiments, optionally writes reports and time series
under ``output_dir/criterion_NN``, and returns a :class:`CriterionResult`.  The
pass/fail decision uses the tolerances exactly as stated in the criteria; where
a criterion quotes a constant or a comparison that does not hold for the
equation, the literal check is kept (and fails) and the corrected quantity is
reported alongside it in ``details``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import analytic as an
from . import experiments as ex
from .grid import SpectralField, derivative_array, make_grid, reflect_conjugate_array, seminorm_sq
from .integrator import StepperConfig, Termination, nonlinear_substep_array, run
from .io import SchemaError, read_report, read_timeseries, write_report, write_timeseries
from .nonlinearity import DEFOCUSING, FOCUSING


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{status}] {self.title}: {self.summary} ({self.seconds:.1f} s)"


def _subdir(output_dir, number: int) -> Optional[Path]:
    if output_dir is None:
        return None
    path = Path(output_dir) / f"criterion_{number:02d}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _save(reports, out: Optional[Path]) -> None:
    if out is None:
        return
    for i, rep in enumerate(reports):
        write_report(rep, out / f"{i:02d}_{rep.name}.json")


# -- 1. norm identities -------------------------------------------------------------------


def criterion_1(output_dir=None) -> CriterionResult:
    """Quadrature norms of the small data against the closed forms as usually quoted."""
    tol = {0: 1e-8, 1: 1e-8, 2: 1e-6}
    rows, ok = {}, True
    corrected_ok = True
    for alpha in (0.25, 0.5, 0.75):
        f0 = an.sample_exact(an.one_param(alpha), 0.0, make_grid(8192, ex.auto_half_length(alpha)))
        for k in (0, 1, 2):
            measured = seminorm_sq(f0, k)
            quoted = an.predicted_seminorm_sq(alpha, k, printed=True)
            corrected = an.predicted_seminorm_sq(alpha, k)
            rel = abs(measured - quoted) / quoted
            rel_corr = abs(measured - corrected) / corrected
            rows[f"alpha={alpha} k={k}"] = {"measured": measured, "quoted": quoted, "rel_err": rel,
                                            "corrected": corrected, "rel_err_corrected": rel_corr}
            ok &= rel < tol[k]
            corrected_ok &= rel_corr < tol[k]
    k0 = rows["alpha=0.5 k=0"]
    summary = (
        f"k=0 measured/quoted = {k0['measured'] / k0['quoted']:.12f} (sqrt 3 = {math.sqrt(3):.12f}); "
        f"k=1,2 match; against 4*pi*alpha/sqrt(3) all match: {corrected_ok}"
    )
    return CriterionResult(1, "norm identities", ok, summary, {"rows": rows, "corrected_ok": corrected_ok})


# -- 2. scaling law -------------------------------------------------------------------------


def criterion_2(output_dir=None) -> CriterionResult:
    rep = ex.exp_norm_scaling((0.25, 0.35, 0.5, 0.7, 1.0), ks=(0, 1, 2, 3))
    _save([rep], _subdir(output_dir, 2))
    slopes = {k: rep.metrics[f"k{k}_slope"] for k in range(4)}
    ok = all(abs(s - (2 * k + 1)) < 0.01 for k, s in slopes.items())
    summary = ", ".join(f"k={k}: {s:.5f}" for k, s in slopes.items()) + f"; C3 = {rep.metrics['k3_constant']:.6f}"
    return CriterionResult(2, "scaling law", ok, summary, {"slopes": slopes}, [rep])


# -- 3. exact-solution residual ----------------------------------------------------------------


def pde_residual(p: an.TwoSolitonParams, t: float, grid) -> float:
    """Sup-norm of ``i u_t + u_xx + u^2 conj(u)(-x)`` for the closed-form solution on ``grid``."""
    u = an.eval_two_param(p, t, grid.nodes)
    ut = an.eval_two_param_dt(p, t, grid.nodes)
    uxx = derivative_array(u, grid, 2)
    res = 1j * ut + uxx + u * u * reflect_conjugate_array(u, grid)
    return float(np.max(np.abs(res)))


def criterion_3(output_dir=None) -> CriterionResult:
    p = an.TwoSolitonParams(1.0, 0.5)
    t0 = an.first_blowup_time(p)
    grid = make_grid(8192, ex.auto_half_length(p.decay_rate))
    times = np.linspace(0.0, 0.9 * t0, 10)
    res = [pde_residual(p, t, grid) for t in times]
    worst = max(res)
    return CriterionResult(
        3, "exact-solution residual", worst < 1e-6,
        f"max residual {worst:.3e} over 10 times up to 0.9*T0 = {0.9 * t0:.6f}",
        {"times": times.tolist(), "residuals": res},
    )


# -- 4. even data ------------------------------------------------------------------------------


def criterion_4(output_dir=None) -> CriterionResult:
    out = _subdir(output_dir, 4)
    rep = ex.exp_even_equivalence(1.0, 1.0, output_dir=out)
    _save([rep], out)
    m = rep.metrics
    summary = (
        f"nonlocal vs local {m['solver_discrepancy']:.2e}, nonlocal vs exact {m['nonlocal_vs_exact']:.2e}, "
        f"local vs exact {m['local_vs_exact']:.2e}"
    )
    return CriterionResult(4, "even-data equivalence", rep.verdict == "pass", summary, dict(m), [rep])


# -- 5. conservation -----------------------------------------------------------------------------


def _conservation_stats(samples) -> dict:
    q = np.array([s.Q for s in samples])
    e = np.array([s.E for s in samples])
    return _stats_from_arrays(q.real, q.imag, e.real, e.imag)


def _stats_from_arrays(re_q, im_q, re_e, im_e) -> dict:
    scale = abs(re_q[0]) if re_q[0] != 0 else 1.0
    return {
        "re_q_drift": float(np.max(np.abs(re_q - re_q[0])) / scale),
        "im_q_ratio": float(np.max(np.abs(im_q) / (1.0 + np.abs(re_q)))),
        "im_e_ratio": float(np.max(np.abs(im_e) / (1.0 + np.abs(re_e)))),
    }


def conservation_runs():
    """Completed runs covering both schemes, both models, both signs and non-even data."""
    soliton = an.sample_exact(an.SolitonParams(1.0), 0.0, make_grid(1024, 40.0))
    fixed = StepperConfig(dt0=1e-3, adaptive=False)
    p = an.TwoSolitonParams(1.0, 0.5)
    generic = an.sample_exact(p, 0.0, make_grid(4096, 40.0))
    small = an.sample_exact(an.one_param(0.75), 0.0, make_grid(4096, ex.auto_half_length(0.75)))
    yield "soliton strang", run(soliton, 1.0, fixed)
    yield "soliton if_rk4", run(soliton, 1.0, StepperConfig(scheme="if_rk4", dt0=1e-3, adaptive=False))
    yield "soliton local model", run(soliton, 1.0, fixed, model="local")
    yield "soliton t=10", run(soliton, 10.0, StepperConfig())
    yield "two_param(1,0.5) to T0/2", run(generic, 0.5 * an.first_blowup_time(p), StepperConfig())
    yield "defocusing one_param(0.75)", run(small, 3.0, StepperConfig(), DEFOCUSING)


def criterion_5(output_dir=None) -> CriterionResult:
    tol = {"re_q_drift": 1e-8, "im_q_ratio": 1e-10, "im_e_ratio": 1e-10}
    out = _subdir(output_dir, 5)
    table = {}
    for label, traj in conservation_runs():
        if traj.termination is not Termination.COMPLETED:
            table[label] = {"error": f"run ended {traj.termination.value}"}
            continue
        table[label] = _conservation_stats(traj.samples)
        if out is not None:
            write_timeseries(traj, out / (label.replace(" ", "_").replace("/", "_") + ".csv"))
    # every completed time series written by the rest of the suite
    if output_dir is not None:
        for csv_path in sorted(Path(output_dir).rglob("*.csv")):
            if out is not None and csv_path.parent == out:
                continue
            try:
                data, trailer = read_timeseries(csv_path)
            except SchemaError:
                continue
            if trailer.get("termination") == Termination.COMPLETED.value and len(data):
                key = str(csv_path.relative_to(output_dir))
                table[key] = _stats_from_arrays(data[:, 2], data[:, 3], data[:, 4], data[:, 5])
    bad = [k for k, v in table.items() if "error" in v or any(v[m] >= tol[m] for m in tol)]
    worst = {m: max(v.get(m, math.inf) for v in table.values()) for m in tol}
    summary = (
        f"{len(table)} completed runs; worst Re Q drift {worst['re_q_drift']:.2e}, "
        f"|Im Q| ratio {worst['im_q_ratio']:.2e}, |Im E| ratio {worst['im_e_ratio']:.2e}"
    )
    return CriterionResult(5, "conservation", not bad, summary, {"runs": table, "violations": bad})


# -- 6. small-data blow-up -------------------------------------------------------------------------


def criterion_6(output_dir=None) -> CriterionResult:
    out = _subdir(output_dir, 6)
    reports, parts, ok = [], [], True
    details = {}
    for alpha in (0.75, 0.5):
        rep = ex.exp_small_data_blowup(alpha, output_dir=out)
        reports.append(rep)
        m = rep.metrics
        time_ok = m.get("blowup_time_rel_err", math.inf) < 0.05
        literal_ok = m["sup_vs_origin_modulus_max_rel"] < 0.01
        ok &= time_ok and literal_ok
        details[f"alpha={alpha}"] = {
            "blowup_time_detected": m["blowup_time_detected"],
            "blowup_time_predicted": m["blowup_time_predicted"],
            "blowup_time_rel_err": m.get("blowup_time_rel_err"),
            "sup_vs_origin_modulus_max_rel": m["sup_vs_origin_modulus_max_rel"],
            "origin_value_vs_origin_modulus_max_rel": m["tracking_origin_max_rel"],
            "sup_vs_exact_sup_max_rel": m["tracking_sup_max_rel"],
        }
        parts.append(
            f"alpha={alpha}: T={m['blowup_time_detected']:.5f} vs {m['blowup_time_predicted']:.5f}, "
            f"sup vs origin modulus {m['sup_vs_origin_modulus_max_rel']:.3f}, "
            f"|u(t,0)| vs origin modulus {m['tracking_origin_max_rel']:.1e}"
        )
    _save(reports, out)
    return CriterionResult(6, "small-data blow-up", ok, "; ".join(parts), details, reports)


# -- 7. soliton instability ----------------------------------------------------------------------------


def criterion_7(output_dir=None) -> CriterionResult:
    out = _subdir(output_dir, 7)
    reports = [ex.exp_soliton_instability(1.0, d, output_dir=out) for d in (0.5, 0.0, 1 / 16)]
    _save(reports, out)
    r_half, r_zero, r_small = reports
    grid = make_grid(8192, ex.auto_half_length(1.0))
    sweep = [ex.h1_distance_to_soliton(1.0, d, grid) for d in (0.5, 0.25, 0.125, 1 / 16)]
    ok = (
        r_half.verdict == "pass"
        and r_zero.verdict == "pass"
        and r_small.metrics["termination"] == Termination.BLOWUP_DETECTED.value
        and sweep[-1] == min(sweep)
    )
    summary = (
        f"delta=1/2: T={r_half.metrics['blowup_time_detected']:.4f} vs 2pi; "
        f"delta=0: completed t=10, sup in [{r_zero.metrics['sup_norm_min']:.6f}, {r_zero.metrics['sup_norm_max']:.6f}]; "
        f"delta=1/16: {r_small.metrics['termination']} at T={r_small.metrics['blowup_time_detected']:.3f} "
        f"with H1 distance {sweep[-1]:.4f}"
    )
    return CriterionResult(7, "soliton instability", ok, summary, {"h1_sweep": sweep}, reports)


# -- 8. H1 convergence -------------------------------------------------------------------------------------


def criterion_8(output_dir=None) -> CriterionResult:
    rep = ex.exp_h1_convergence(1.0, (0.5, 0.25, 0.125, 1 / 16, 1 / 32, 0.0))
    _save([rep], _subdir(output_dir, 8))
    d = rep.metrics["h1_distances"]
    return CriterionResult(
        8, "H1 convergence", rep.verdict == "pass", "distances " + ", ".join(f"{v:.4g}" for v in d), {"distances": d},
        [rep],
    )


# -- 9. off-centre boundedness -------------------------------------------------------------------------------


def criterion_9(output_dir=None) -> CriterionResult:
    p = an.TwoSolitonParams(1.0, 0.5)
    reports = [ex.exp_offcenter_boundedness(p, x0) for x0 in (0.1, 1.0)]
    _save(reports, _subdir(output_dir, 9))
    parts = [
        f"x0={r.inputs['x0']}: growth {r.metrics['offcenter_growth']:.3g}, centre {r.metrics['centre_max']:.3g}"
        for r in reports
    ]
    return CriterionResult(9, "off-centre boundedness", all(r.verdict == "pass" for r in reports), "; ".join(parts),
                           reports=reports)


# -- 10. numerical self-consistency ---------------------------------------------------------------------------


def _generic_data(grid) -> np.ndarray:
    x = grid.nodes
    return (1.0 / np.cosh(x - 1.0)) * np.exp(0.5j * x) + 0.6 / np.cosh(1.5 * (x + 2.0)) * np.exp(-0.3j * x)


def substep_self_convergence(dt: float = 0.05, t_total: float = 0.5) -> dict:
    """Repeated nonlinear substeps at ``dt``, ``dt/2``, ``dt/4`` on non-even data."""
    grid = make_grid(256, 10.0)
    u0 = _generic_data(grid)

    def advance(h):
        u = u0.copy()
        for _ in range(int(round(t_total / h))):
            u = nonlinear_substep_array(u, grid, h, FOCUSING, "rk4")
        return u

    a, b, c = advance(dt), advance(dt / 2), advance(dt / 4)
    exact = nonlinear_substep_array(u0, grid, t_total, FOCUSING, "exact")
    self_ratio = float(np.max(np.abs(a - b)) / np.max(np.abs(b - c)))
    ref_ratio = float(np.max(np.abs(a - exact)) / np.max(np.abs(b - exact)))
    return {"self_ratio": self_ratio, "reference_ratio": ref_ratio}


def criterion_10(output_dir=None) -> CriterionResult:
    grid = make_grid(1024, 40.0)
    sol = an.SolitonParams(1.0)
    f0 = an.sample_exact(sol, 0.0, grid)

    def final(scheme, dt):
        traj = run(f0, 1.0, StepperConfig(scheme=scheme, dt0=dt, adaptive=False))
        return traj.final_field.samples

    exact = an.exact_values(sol, 1.0, grid.nodes)
    cross = float(np.max(np.abs(final("strang_pair_rk4", 1e-3) - final("if_rk4", 1e-3))))
    e1 = float(np.max(np.abs(final("strang_pair_rk4", 1e-2) - exact)))
    e2 = float(np.max(np.abs(final("strang_pair_rk4", 5e-3) - exact)))
    halving = e1 / e2
    sub = substep_self_convergence()
    ok = cross < 1e-6 and 3 <= halving <= 5 and abs(sub["self_ratio"] - 16) <= 0.2 * 16
    summary = (
        f"cross-scheme {cross:.2e}, dt-halving ratio {halving:.3f}, "
        f"substep self-convergence {sub['self_ratio']:.2f} (vs exact pair flow {sub['reference_ratio']:.2f})"
    )
    details = {"cross_scheme": cross, "halving_ratio": halving, **sub}
    return CriterionResult(10, "numerical self-consistency", ok, summary, details)


# -- 11. defocusing probe --------------------------------------------------------------------------------------


def criterion_11(output_dir=None) -> CriterionResult:
    out = _subdir(output_dir, 11)
    kinds = (an.one_param(0.75), an.SolitonParams(1.0), an.ZeroData())
    reports = [ex.exp_defocusing_probe(k, output_dir=out / f"probe_{i}" if out else None) for i, k in enumerate(kinds)]
    _save(reports, out)
    ok = all(
        r.metrics["termination"] == Termination.COMPLETED.value and r.metrics["charge_drift"] < 1e-8 for r in reports
    )
    parts = [
        f"{r.inputs['kind']}: {r.metrics['termination']}, drift {r.metrics['charge_drift']:.1e}, "
        f"sup {r.metrics['sup_norm_initial']:.3g}->{r.metrics['sup_norm_final']:.3g}"
        for r in reports
    ]
    return CriterionResult(11, "defocusing probe", ok, "; ".join(parts), reports=reports)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_criterion(number: int, output_dir=None) -> CriterionResult:
    start = time.perf_counter()
    result = CRITERIA[number](output_dir)
    result.seconds = time.perf_counter() - start
    return result


def check_artifacts(output_dir) -> list:
    """Re-read every report and time series under ``output_dir``; return schema problems."""
    problems = []
    for path in sorted(Path(output_dir).rglob("*.json")):
        try:
            read_report(path)
        except (SchemaError, ValueError, KeyError) as exc:
            problems.append(f"{path}: {exc}")
    for path in sorted(Path(output_dir).rglob("*.csv")):
        try:
            read_timeseries(path)
        except (SchemaError, ValueError) as exc:
            problems.append(f"{path}: {exc}")
    return problems


def run_all(output_dir=None, only=None, echo: Optional[Callable[[str], None]] = print) -> list:
    """Run the selected criteria in order; criterion 5 runs last so it sees every written series."""
    numbers = sorted(only or CRITERIA)
    order = [n for n in numbers if n != 5] + ([5] if 5 in numbers else [])
    results = {}
    for n in order:
        results[n] = run_criterion(n, output_dir)
        if echo:
            echo(results[n].line())
    return [results[n] for n in numbers]


__all__ = ["CRITERIA", "CriterionResult", "SpectralField", "check_artifacts", "run_all", "run_criterion"]
