"""Hard-negative reference pools: construction, diagnostics and the pool file."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .calibrate import tail_p_value
from .errors import (
    EmptyHeldout,
    EmptyInput,
    IoFailure,
    MalformedPoolFile,
    NoNegatives,
    NonFiniteScore,
)

DEFAULT_GRID = (0.05, 0.10, 0.20)


@dataclass(frozen=True)
class ScoredCandidate:
    task_id: str
    score: float
    adjudication: int

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise NonFiniteScore(f"candidate {self.task_id!r} has score {self.score!r}")
        if self.adjudication not in (0, 1):
            raise ValueError(f"adjudication must be 0 or 1, got {self.adjudication!r}")


@dataclass(frozen=True)
class UpperTailRule:
    """Keep the upper ``100 q %`` of incorrect-candidate scores."""

    q: float = 0.55

    def __post_init__(self):
        if not (0.0 < self.q <= 1.0):
            raise ValueError(f"q must lie in (0, 1], got {self.q!r}")


@dataclass(frozen=True)
class ReferencePool:
    """Immutable multiset of hard-negative scores, sorted descending.

    Use :meth:`from_scores` to build one from unsorted input.
    """

    scores: tuple[float, ...]
    rule: UpperTailRule = field(default_factory=lambda: UpperTailRule(1.0))
    meta: Mapping[str, Any] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        scores = tuple(float(s) for s in self.scores)
        if not scores:
            raise EmptyInput("a reference pool needs at least one score")
        if not all(math.isfinite(s) for s in scores):
            raise NonFiniteScore("reference pool scores must be finite")
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be sorted non-increasing; use ReferencePool.from_scores")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "meta", dict(self.meta))
        # ascending negated copy for bisect
        object.__setattr__(self, "_neg", tuple(-s for s in scores))

    @classmethod
    def from_scores(cls, scores: Iterable[float], rule: UpperTailRule | None = None,
                    meta: Mapping[str, Any] | None = None) -> "ReferencePool":
        return cls(tuple(sorted((float(s) for s in scores), reverse=True)),
                   rule or UpperTailRule(1.0), dict(meta or {}))

    @property
    def n(self) -> int:
        return len(self.scores)

    def count_at_least(self, score: float) -> int:
        """Number of pool scores ``>= score``."""
        return bisect.bisect_right(self._neg, -score)

    def counts_at_least(self, scores) -> np.ndarray:
        """Vectorised :meth:`count_at_least` over an array of scores."""
        neg = np.asarray(self._neg)
        return np.searchsorted(neg, -np.asarray(scores, dtype=float), side="right")


@dataclass(frozen=True)
class PoolDiagnostic:
    grid: tuple[float, ...]
    ecdf: tuple[float, ...]
    mean_p: float
    passed: bool
    slack: float
    p_values: tuple[float, ...] = ()


def collect_hard_negatives(candidates: Sequence[ScoredCandidate],
                           rule: UpperTailRule,
                           meta: Mapping[str, Any] | None = None) -> ReferencePool:
    """Build a reference pool from adjudicated offline candidates.

    Only incorrect candidates (``adjudication == 0``) are kept. With ``N``
    incorrect scores, the cutoff is the ``ceil(q N)``-th largest of them and
    every incorrect score at or above the cutoff is retained, so ties at the
    cutoff can make the pool larger than ``ceil(q N)``.
    """
    if len(candidates) == 0:
        raise EmptyInput("no candidates supplied")
    for c in candidates:
        if not math.isfinite(c.score):
            raise NonFiniteScore(f"candidate {c.task_id!r} has score {c.score!r}")
    incorrect = sorted((float(c.score) for c in candidates if c.adjudication == 0), reverse=True)
    if not incorrect:
        raise NoNegatives("every candidate is adjudicated correct")
    k = math.ceil(rule.q * len(incorrect))
    cutoff = incorrect[k - 1]
    kept = [s for s in incorrect if s >= cutoff]
    info = {"n_incorrect": len(incorrect), "cutoff": cutoff}
    info.update(meta or {})
    return ReferencePool(tuple(kept), rule, info)


def pool_diagnostic(pool: ReferencePool, heldout_scores: Sequence[float],
                    grid: Sequence[float] = DEFAULT_GRID, slack: float = 0.0) -> PoolDiagnostic:
    """Empirical CDF of held-out p-values, checked against the diagonal."""
    if len(heldout_scores) == 0:
        raise EmptyHeldout("no held-out scores supplied")
    grid = tuple(sorted(float(u) for u in grid))
    if any(not 0.0 <= u <= 1.0 for u in grid):
        raise ValueError("grid levels must lie in [0, 1]")
    if slack < 0:
        raise ValueError("slack must be non-negative")
    cps = [tail_p_value(pool, s) for s in heldout_scores]
    m = len(cps)
    ecdf = tuple(sum(cp.at_most(u) for cp in cps) / m for u in grid)
    passed = all(F <= u + slack for u, F in zip(grid, ecdf))
    p_values = tuple(cp.value for cp in cps)
    return PoolDiagnostic(grid, ecdf, float(np.mean(p_values)), passed, float(slack), p_values)


def pool_to_dict(pool: ReferencePool) -> dict:
    return {"scores": list(pool.scores), "rule": {"q": pool.rule.q}, "meta": dict(pool.meta)}


def pool_from_dict(doc: Any) -> ReferencePool:
    if not isinstance(doc, dict):
        raise MalformedPoolFile("pool document must be an object")
    for key in ("scores", "rule", "meta"):
        if key not in doc:
            raise MalformedPoolFile(f"pool document lacks field {key!r}")
    scores, rule, meta = doc["scores"], doc["rule"], doc["meta"]
    if not isinstance(scores, list) or not scores:
        raise MalformedPoolFile("'scores' must be a non-empty array")
    if not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in scores):
        raise MalformedPoolFile("'scores' must contain only numbers")
    if not all(math.isfinite(s) for s in scores):
        raise MalformedPoolFile("'scores' contains a non-finite value")
    if not isinstance(rule, dict) or "q" not in rule:
        raise MalformedPoolFile("'rule' must be an object with field 'q'")
    if not isinstance(meta, dict) or not all(isinstance(k, str) for k in meta):
        raise MalformedPoolFile("'meta' must be an object with string keys")
    try:
        tail_rule = UpperTailRule(float(rule["q"]))
    except (TypeError, ValueError) as exc:
        raise MalformedPoolFile(f"bad rule: {exc}") from exc
    return ReferencePool.from_scores(scores, tail_rule, meta)


def save_pool(pool: ReferencePool, destination) -> None:
    text = json.dumps(pool_to_dict(pool), indent=2, allow_nan=False)
    try:
        Path(destination).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write pool to {destination}: {exc}") from exc


def load_pool(source) -> ReferencePool:
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read pool from {source}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedPoolFile(f"{source}: {exc}") from exc
    return pool_from_dict(doc)
