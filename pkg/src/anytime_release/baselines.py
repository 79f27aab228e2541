"""Comparison stopping rules: one-step p threshold, entropy threshold, score stability."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .calibrate import tail_p_value
from .errors import BadAlpha, EmptyDistribution, EmptyInput, MissingEntropy, NegativeMass
from .evidence import ABSTAINED, DEFAULT_T_MAX, RELEASED, ReleaseOutcome
from .pool import ReferencePool
from .trajectory import StreamLike, as_trajectory, stream_scores

STABILITY_LEVEL = 0.8
# 1.0 - 0.967 sits right next to 1/30 in binary floating point
STABILITY_TIE_SLACK = 1e-12


def _outcome(tau: int | None, method: str, p_trace=()) -> ReleaseOutcome:
    return ReleaseOutcome(RELEASED if tau is not None else ABSTAINED, tau,
                          p_trace=tuple(p_trace), method=method)


def first_p_rule(stream: StreamLike, pool: ReferencePool, alpha: float,
                 t_max: int = DEFAULT_T_MAX) -> ReleaseOutcome:
    """Release at the first step whose calibrated p-value is at most ``alpha``.

    The comparison is exact on the rational p-grid.
    """
    if not 0.0 < alpha <= 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1], got {alpha!r}")
    scores = stream_scores(stream)[:t_max]
    ps = []
    for t, s in enumerate(scores, start=1):
        cp = tail_p_value(pool, s)
        ps.append(cp.value)
        if cp.at_most(alpha):
            return _outcome(t, "first_p", ps)
    return _outcome(None, "first_p", ps)


def entropy_threshold_from_bank(correct_bank_entropies: Sequence[float]) -> float:
    """Mean of per-candidate entropies over correctly generated bank candidates."""
    values = [float(h) for h in correct_bank_entropies]
    if not values:
        raise EmptyInput("no bank entropies supplied")
    return math.fsum(values) / len(values)


def entropy_rule(stream: StreamLike, h: float, t_max: int = DEFAULT_T_MAX) -> ReleaseOutcome:
    traj = as_trajectory(stream)
    entropies = traj.entropies[:t_max]
    if any(e is None for e in entropies):
        raise MissingEntropy(f"task {traj.task_id!r} has steps without an entropy value")
    for t, e in enumerate(entropies, start=1):
        if e <= h:
            return _outcome(t, "entropy")
    return _outcome(None, "entropy")


def mean_token_entropy(step_distributions: Sequence[Sequence[float]]) -> float:
    """Average Shannon entropy (nats) over token positions.

    Each row is a top-K predictive distribution; rows are renormalised and
    ``0 log 0`` is taken as 0.
    """
    if len(step_distributions) == 0:
        raise EmptyDistribution("no token positions supplied")
    total = 0.0
    for row in step_distributions:
        pi = np.asarray(row, dtype=float)
        if pi.size == 0:
            raise EmptyDistribution("empty token distribution")
        if np.any(pi < 0):
            raise NegativeMass("token distribution has negative mass")
        mass = pi.sum()
        if not mass > 0:
            raise EmptyDistribution("token distribution has zero total mass")
        pi = pi / mass
        pi = pi[pi > 0]
        total += float(-(pi * np.log(pi)).sum())
    return total / len(step_distributions)


def stability_rule(stream: StreamLike, n_test: int = 30, t_max: int = DEFAULT_T_MAX,
                   level: float = STABILITY_LEVEL) -> ReleaseOutcome:
    """Release once two consecutive scores differ by at most one visible test.

    Needs ``S_t >= level`` as well, so it can never fire at ``t = 1``.
    """
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test!r}")
    scores = stream_scores(stream)[:t_max]
    tol = 1.0 / n_test + STABILITY_TIE_SLACK
    for t in range(2, len(scores) + 1):
        prev, cur = scores[t - 2], scores[t - 1]
        if max(prev, cur) - min(prev, cur) <= tol and cur >= level:
            return _outcome(t, "stability")
    return _outcome(None, "stability")
