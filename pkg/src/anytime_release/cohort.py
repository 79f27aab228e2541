"""Cohort-level release metrics split by empirical feasibility."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Sequence

from .baselines import entropy_rule, first_p_rule, stability_rule
from .errors import BadConfig, MalformedRecord, UnlabeledTrajectory
from .evidence import DEFAULT_T_MAX, BettingCalibrator, ReleaseOutcome, run_wrapper
from .pool import ReferencePool
from .report import dumps_machine, render_table
from .trajectory import Trajectory

METHODS = ("first_p", "ours", "entropy", "stability")
ALPHA_METHODS = ("first_p", "ours")
METHOD_LABELS = {"first_p": "First_p", "ours": "Ours", "entropy": "Entropy", "stability": "Stability"}


@dataclass(frozen=True)
class CohortRow:
    """Metrics of one method (and level, when it has one) over a cohort.

    On the infeasible group every release is an error, so its release rate
    and false-release rate coincide. Means over release steps and the
    failure rate among releases are ``None`` when nothing was released.
    """

    method: str
    alpha: float | None
    n0: int
    n1: int
    f0_released: int
    f0_false_release_rate: float | None
    f0_mean_release_step: float | None
    f1_released: int
    f1_release_rate: float | None
    f1_failure_given_release: float | None
    f1_mean_release_step: float | None

    @property
    def f0_release_rate(self) -> float | None:
        return self.f0_false_release_rate


@dataclass(frozen=True)
class CohortReport:
    rows: tuple[CohortRow, ...]
    t_max: int
    n_test: int | None = None
    entropy_threshold: float | None = None

    def row(self, method: str, alpha: float | None = None) -> CohortRow:
        for r in self.rows:
            if r.method == method and r.alpha == alpha:
                return r
        raise KeyError((method, alpha))


def run_method(method: str, traj: Trajectory, pool: ReferencePool, cal: BettingCalibrator,
               alpha: float | None, t_max: int, n_test: int,
               entropy_threshold: float | None) -> ReleaseOutcome:
    if method == "ours":
        return run_wrapper(traj, pool, cal, alpha, t_max)
    if method == "first_p":
        return first_p_rule(traj, pool, alpha, t_max)
    if method == "entropy":
        if entropy_threshold is None:
            raise BadConfig("the entropy rule needs an entropy threshold")
        return entropy_rule(traj, entropy_threshold, t_max)
    if method == "stability":
        return stability_rule(traj, n_test, t_max)
    raise BadConfig(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _ratio(num: int, den: int) -> float | None:
    return float(Fraction(num, den)) if den else None


def _summarise(method, alpha, outcomes: Sequence[tuple[Trajectory, ReleaseOutcome]]) -> CohortRow:
    f0 = [(t, o) for t, o in outcomes if not t.feasible]
    f1 = [(t, o) for t, o in outcomes if t.feasible]
    r0 = [o.release_step for _, o in f0 if o.released]
    r1 = [(t, o.release_step) for t, o in f1 if o.released]
    failures = None
    if r1:
        labels = [t.steps[step - 1].correct for t, step in r1]
        if all(y is not None for y in labels):
            failures = sum(1 for y in labels if not y)
    return CohortRow(
        method=method,
        alpha=alpha,
        n0=len(f0),
        n1=len(f1),
        f0_released=len(r0),
        f0_false_release_rate=_ratio(len(r0), len(f0)),
        f0_mean_release_step=_ratio(sum(r0), len(r0)),
        f1_released=len(r1),
        f1_release_rate=_ratio(len(r1), len(f1)),
        f1_failure_given_release=None if failures is None else _ratio(failures, len(r1)),
        f1_mean_release_step=_ratio(sum(s for _, s in r1), len(r1)),
    )


def evaluate_cohort(trajectories: Sequence[Trajectory], methods: Sequence[str],
                    pool: ReferencePool, cal: BettingCalibrator, alphas: Sequence[float],
                    t_max: int = DEFAULT_T_MAX, n_test: int = 30,
                    entropy_threshold: float | None = None) -> CohortReport:
    """Run every method on every trajectory and aggregate by feasibility group.

    Methods that take a level get one row per entry of ``alphas``; the
    entropy and stability rules get a single row with ``alpha = None``.
    """
    for traj in trajectories:
        if traj.feasible is None:
            raise UnlabeledTrajectory(f"task {traj.task_id!r} has no feasibility label")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise BadConfig(f"unknown method(s) {unknown}; choose from {', '.join(METHODS)}")
    alphas = sorted(set(float(a) for a in alphas), reverse=True)
    rows = []
    for method in [m for m in METHODS if m in methods]:
        levels = alphas if method in ALPHA_METHODS else [None]
        for alpha in levels:
            outcomes = [(t, run_method(method, t, pool, cal, alpha, t_max, n_test, entropy_threshold))
                        for t in trajectories]
            rows.append(_summarise(method, alpha, outcomes))
    return CohortReport(tuple(rows), t_max, n_test if "stability" in methods else None,
                        entropy_threshold if "entropy" in methods else None)


TABLE_HEADERS = ("Method", "alpha", "F0 n", "F0 false-release", "F0 release step",
                 "F1 n", "F1 release rate", "F1 failure|release", "F1 release step")


def report_to_dict(report: CohortReport) -> dict:
    return {
        "t_max": report.t_max,
        "n_test": report.n_test,
        "entropy_threshold": report.entropy_threshold,
        "rows": [asdict(r) for r in report.rows],
    }


def report_from_dict(doc: dict) -> CohortReport:
    try:
        names = {f.name for f in fields(CohortRow)}
        rows = tuple(CohortRow(**{k: r[k] for k in names}) for r in doc["rows"])
        return CohortReport(rows, doc["t_max"], doc.get("n_test"), doc.get("entropy_threshold"))
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(f"malformed cohort report: {exc}") from exc


def load_report(text: str) -> CohortReport:
    try:
        return report_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"malformed cohort report: {exc}") from exc


def emit_report(report: CohortReport, format: str = "table") -> str:
    if format == "machine":
        return dumps_machine(report_to_dict(report))
    if format != "table":
        raise BadConfig(f"unknown format {format!r}")
    n0 = report.rows[0].n0 if report.rows else 0
    n1 = report.rows[0].n1 if report.rows else 0
    body = []
    for r in report.rows:
        row = [METHOD_LABELS.get(r.method, r.method), r.alpha, r.n0, r.f0_false_release_rate,
               r.f0_mean_release_step, r.n1]
        if n1:
            row += [r.f1_release_rate, r.f1_failure_given_release, r.f1_mean_release_step]
        body.append(row)
    headers = TABLE_HEADERS if n1 else TABLE_HEADERS[:6]
    title = f"F0 (n={n0}) / F1 (n={n1}), T_max={report.t_max}\n"
    return title + render_table(headers, body)
