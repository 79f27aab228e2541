"""Calibrated-gain diagnostics for feasible-side release."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .calibrate import tail_p_value
from .errors import BadAlpha, EmptyInput, MissingLabel
from .evidence import BettingCalibrator, run_wrapper
from .pool import ReferencePool
from .trajectory import Trajectory


def step_gain(cal: BettingCalibrator, p: float) -> float:
    """Log-gain of p-value ``p`` over the least favourable value ``p = 1``."""
    return cal.log(p) - cal.log_f1


def max_step_gain(cal: BettingCalibrator, n: int) -> float:
    return step_gain(cal, 1.0 / (n + 1))


def required_gain(cal: BettingCalibrator, alpha: float, t: int) -> float:
    """Cumulative gain needed for wealth to reach ``1/alpha`` by step ``t``."""
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1), got {alpha!r}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    return -math.log(alpha) - t * cal.log_f1


def power_margin(b_t: float, a_t: float) -> float:
    return b_t - a_t


@dataclass(frozen=True)
class GainTrace:
    task_id: str
    z: tuple[float, ...]
    g: tuple[float, ...]
    g_plus: tuple[float, ...]
    a: tuple[float, ...]
    margin: float
    margin_plus: float
    z_max: float
    crosses: bool
    release_step: int | None
    release_agrees: bool
    correct: tuple[bool, ...] = ()

    @property
    def g_total(self) -> float:
        return self.g[-1]

    @property
    def g_plus_total(self) -> float:
        return self.g_plus[-1]


def gain_decomposition(stream: Trajectory, pool: ReferencePool, cal: BettingCalibrator,
                       alpha: float, t_max: int | None = None) -> GainTrace:
    """Observed and correct-candidate cumulative gains along one labelled trajectory.

    Also re-runs the wrapper and records in ``release_agrees`` whether its
    decision agrees with the crossing test ``G_t >= A_t`` for some ``t``.
    """
    if not stream.labeled:
        raise MissingLabel(f"task {stream.task_id!r} has steps without a correctness label")
    horizon = len(stream) if t_max is None else min(len(stream), t_max)
    steps = stream.steps[:horizon]
    z, g, gp, a = [], [], [], []
    g_run = gp_run = 0.0
    for t, st in enumerate(steps, start=1):
        zt = step_gain(cal, tail_p_value(pool, st.score).value)
        g_run += zt
        gp_run += zt if st.correct else 0.0
        z.append(zt)
        g.append(g_run)
        gp.append(gp_run)
        a.append(required_gain(cal, alpha, t))
    diffs = [gi - ai for gi, ai in zip(g, a)]
    margin = max(diffs)
    margin_plus = max(gi - ai for gi, ai in zip(gp, a))
    crossing = next((t for t, d in enumerate(diffs, start=1) if d >= 0), None)
    outcome = run_wrapper(stream, pool, cal, alpha, t_max=horizon)
    agrees = (crossing is not None) == outcome.released and crossing == outcome.release_step
    return GainTrace(stream.task_id, tuple(z), tuple(g), tuple(gp), tuple(a), margin, margin_plus,
                     max_step_gain(cal, pool.n), crossing is not None, outcome.release_step, agrees,
                     tuple(bool(st.correct) for st in steps))


@dataclass
class _StepTotals:
    """Per-step sums; merging two cohorts is elementwise addition."""

    n_tasks: list[int] = field(default_factory=list)
    n_correct: list[int] = field(default_factory=list)
    z_correct: list[float] = field(default_factory=list)

    def _grow(self, length: int) -> None:
        while len(self.n_tasks) < length:
            self.n_tasks.append(0)
            self.n_correct.append(0)
            self.z_correct.append(0.0)

    def add(self, z: Sequence[float], correct: Sequence[bool]) -> None:
        self._grow(len(z))
        for i, (zi, yi) in enumerate(zip(z, correct)):
            self.n_tasks[i] += 1
            if yi:
                self.n_correct[i] += 1
                self.z_correct[i] += zi

    def __add__(self, other: "_StepTotals") -> "_StepTotals":
        out = _StepTotals()
        out._grow(max(len(self.n_tasks), len(other.n_tasks)))
        for src in (self, other):
            for i in range(len(src.n_tasks)):
                out.n_tasks[i] += src.n_tasks[i]
                out.n_correct[i] += src.n_correct[i]
                out.z_correct[i] += src.z_correct[i]
        return out


@dataclass(frozen=True)
class StepwiseFeasibleSummary:
    """Table of per-step feasible-side gain averages.

    ``zbar_hat[t]`` is ``None`` at steps where no task has a correct candidate.
    """

    n_tasks: tuple[int, ...]
    pi_hat: tuple[float, ...]
    zbar_hat: tuple[float | None, ...]
    yz_hat: tuple[float, ...]
    cum_yz: tuple[float, ...]
    a: tuple[float, ...]
    z_max: float

    @property
    def steps(self) -> int:
        return len(self.pi_hat)


def stepwise_feasible_summary(streams: Sequence[Trajectory], pool: ReferencePool,
                              cal: BettingCalibrator, alpha: float,
                              t_max: int | None = None) -> StepwiseFeasibleSummary:
    if len(streams) == 0:
        raise EmptyInput("no trajectories supplied")
    totals = _StepTotals()
    for traj in streams:
        if not traj.labeled:
            raise MissingLabel(f"task {traj.task_id!r} has steps without a correctness label")
        steps = traj.steps if t_max is None else traj.steps[:t_max]
        z = [step_gain(cal, tail_p_value(pool, st.score).value) for st in steps]
        totals.add(z, [bool(st.correct) for st in steps])
    pi, zbar, yz, cum, a = [], [], [], [], []
    running = 0.0
    for i, n in enumerate(totals.n_tasks):
        k = totals.n_correct[i]
        pi.append(k / n)
        zbar.append(totals.z_correct[i] / k if k else None)
        yz.append(totals.z_correct[i] / n)
        running += yz[-1]
        cum.append(running)
        a.append(required_gain(cal, alpha, i + 1))
    return StepwiseFeasibleSummary(tuple(totals.n_tasks), tuple(pi), tuple(zbar), tuple(yz),
                                   tuple(cum), tuple(a), max_step_gain(cal, pool.n))
