"""Figures written next to command-line reports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evidence import ReleaseOutcome, ville_threshold  # noqa: E402
from .gain import GainTrace, StepwiseFeasibleSummary  # noqa: E402
from .pool import PoolDiagnostic  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_pool_diagnostic(diagnostics: Mapping[str, PoolDiagnostic], path) -> Path:
    """Empirical CDF of held-out p-values for each candidate pool, with the diagonal."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot([0, 1], [0, 1], color="grey", lw=1, ls=":", label="diagonal")
        for name, diag in diagnostics.items():
            p = np.sort(np.asarray(diag.p_values))
            u = np.concatenate([[0.0], p, [1.0]])
            F = np.concatenate([[0.0], np.arange(1, p.size + 1) / p.size, [1.0]])
            ax.step(u, F, where="post", label=f"{name} ({'pass' if diag.passed else 'fail'})")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_xlabel("u")
        ax.set_ylabel("fraction of held-out p-values <= u")
        ax.legend(loc="upper left")
        return _save(fig, path)


def plot_wealth(outcomes: Mapping[str, ReleaseOutcome], alpha: float, path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, out in outcomes.items():
            steps = np.arange(1, len(out.wealth_trace) + 1)
            (line,) = ax.plot(steps, out.wealth_trace, marker="o", ms=3, label=name)
            if out.released:
                ax.plot([out.release_step], [out.wealth_trace[out.release_step - 1]], marker="*",
                        ms=12, color=line.get_color(), ls="")
        ax.axhline(ville_threshold(alpha), color="k", ls="--", lw=1, label=f"1/alpha = {1 / alpha:g}")
        ax.set_yscale("log")
        ax.set_xlabel("step t")
        ax.set_ylabel("wealth E_t")
        ax.legend()
        return _save(fig, path)


def plot_gain_traces(traces: Sequence[GainTrace], path, max_panels: int = 6) -> Path:
    """Observed gain (solid), correct-candidate gain (dashed), required gain (dotted)."""
    traces = list(traces)[:max_panels]
    ncols = min(3, max(1, len(traces)))
    nrows = int(np.ceil(len(traces) / ncols)) or 1
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(nrows, ncols, figsize=(4.0 * ncols, 3.2 * nrows), squeeze=False)
        for ax in axes.flat[len(traces):]:
            ax.set_visible(False)
        for ax, tr in zip(axes.flat, traces):
            t = np.arange(1, len(tr.g) + 1)
            ax.plot(t, tr.g, "-", color="C0", label="G_t")
            ax.plot(t, tr.g_plus, "--", color="C2", label="G_t+")
            ax.plot(t, tr.a, ":", color="k", label="A_t")
            if tr.release_step is not None:
                ax.plot([tr.release_step], [tr.g[tr.release_step - 1]], "o", color="C3", ms=7)
            ax.set_title(tr.task_id)
            ax.set_xlabel("step t")
        axes.flat[0].legend(loc="upper left")
        return _save(fig, path)


def plot_feasible_summary(summary: StepwiseFeasibleSummary, path) -> Path:
    t = np.arange(1, summary.steps + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, summary.cum_yz, "-o", ms=3, label="cumulative mean correct gain")
        ax.plot(t, summary.a, ":", color="k", label="required gain A_t")
        ax.set_xlabel("step t")
        ax.set_ylabel("gain")
        ax.legend()
        return _save(fig, path)


def plot_cohort(report, path) -> Path:
    """Grouped bars: false-release rate on F0 and release rate on F1 per method row."""
    labels = [r.method if r.alpha is None else f"{r.method}\n{r.alpha:g}" for r in report.rows]
    f0 = [r.f0_false_release_rate or 0.0 for r in report.rows]
    f1 = [r.f1_release_rate or 0.0 for r in report.rows]
    x = np.arange(len(labels))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(labels)), 4.0))
        ax.bar(x - 0.2, f0, 0.4, label="F0 false-release rate", color="C3")
        ax.bar(x + 0.2, f1, 0.4, label="F1 release rate", color="C0")
        ax.set_xticks(x, labels)
        ax.set_ylim(0, 1)
        ax.legend()
        return _save(fig, path)
