"""Figures rendered from written artifacts (never from in-memory solver state).

Every figure is a PNG written next to the file it was drawn from, so a report
directory stays self-contained.  The non-interactive Agg backend is selected
on import.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_timeseries  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_timeseries(csv_path, out_path=None) -> Path:
    """Sup-norm, its reciprocal and the charge drift of one trajectory CSV."""
    csv_path = Path(csv_path)
    out_path = Path(out_path) if out_path else csv_path.with_suffix(".png")
    data, trailer = read_timeseries(csv_path)
    t, sup, re_q = data[:, 0], data[:, 1], data[:, 2]
    est = trailer.get("blowup_estimate", "none")

    fig, (ax_sup, ax_inv, ax_q) = plt.subplots(3, 1, figsize=(6.4, 7.2), sharex=True)
    ax_sup.semilogy(t, np.maximum(sup, 1e-300))
    ax_sup.set_ylabel("sup |u|")
    ax_sup.set_title(f"{csv_path.stem} ({trailer.get('termination', '?')})", fontsize=9)

    with np.errstate(divide="ignore"):
        ax_inv.plot(t, np.where(sup > 0, 1.0 / sup, np.nan))
    ax_inv.set_ylabel("1 / sup |u|")
    if est != "none":
        t_star = float(est)
        for ax in (ax_sup, ax_inv):
            ax.axvline(t_star, color="tab:red", ls="--", lw=1)
        ax_inv.annotate(f"T* = {t_star:.6g}", (t_star, 0), xytext=(-70, 10), textcoords="offset points", fontsize=8)
        ax_inv.set_ylim(bottom=0)

    scale = abs(re_q[0]) if re_q[0] != 0 else 1.0
    ax_q.plot(t, (re_q - re_q[0]) / scale)
    ax_q.set_ylabel("rel. drift Re Q")
    ax_q.set_xlabel("t")
    return _save(fig, out_path)


def plot_norm_scaling(report, out_path) -> Path:
    m = report.metrics
    alphas = np.asarray(report.inputs["alphas"])
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for k in report.inputs["ks"]:
        ax.loglog(alphas, m[f"k{k}_seminorm_sq"], "o-", label=f"k={k}, slope {m[f'k{k}_slope']:.4f}")
    ax.set_xlabel("alpha")
    ax.set_ylabel("squared seminorm of order k")
    ax.legend(fontsize=8)
    return _save(fig, Path(out_path))


def plot_h1_convergence(report, out_path) -> Path:
    deltas = np.asarray(report.inputs["deltas"])
    dist = np.asarray(report.metrics["h1_distances"], dtype=float)
    keep = deltas > 0
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.loglog(deltas[keep], dist[keep], "o-")
    ax.set_xlabel("delta")
    ax.set_ylabel("H1 distance to the soliton")
    return _save(fig, Path(out_path))


def plot_report(report, output_dir) -> list:
    """Render every figure a report supports and return the written paths."""
    output_dir = Path(output_dir)
    written = [plot_timeseries(a) for a in report.artifacts if str(a).endswith(".csv")]
    if report.name == "norm_scaling":
        written.append(plot_norm_scaling(report, output_dir / "norm_scaling.png"))
    elif report.name == "h1_convergence":
        written.append(plot_h1_convergence(report, output_dir / "h1_convergence.png"))
    return written
