"""Rank calibration of online verifier scores against a reference pool."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from .errors import NonFiniteScore

if TYPE_CHECKING:
    from .pool import ReferencePool


@dataclass(frozen=True)
class CalibratedP:
    """Upper-tail p-value ``(1 + ge_count) / (n + 1)``.

    ``ge_count`` counts pool scores greater than *or equal to* the online
    score, so ties count against the candidate.
    """

    ge_count: int
    n: int

    def __post_init__(self):
        if not 0 <= self.ge_count <= self.n:
            raise ValueError(f"ge_count={self.ge_count} outside [0, {self.n}]")

    @property
    def fraction(self) -> Fraction:
        return Fraction(1 + self.ge_count, self.n + 1)

    @property
    def value(self) -> float:
        return float(self.fraction)

    def __float__(self) -> float:
        return self.value

    def at_most(self, level: float) -> bool:
        """Exact test of ``p <= level`` with ``level`` read as its decimal literal."""
        return self.fraction <= as_fraction(level)


def as_fraction(x: float) -> Fraction:
    # A user-facing 0.2 means 1/5, not the nearest binary double.
    return Fraction(repr(float(x)))


def tail_p_value(pool: ReferencePool, score: float) -> CalibratedP:
    """Empirical upper-tail p-value of ``score`` against ``pool``.

    Parameters
    ----------
    pool : ReferencePool
        Fixed hard-negative reference pool.
    score : float
        Online verifier score; must be finite.

    Returns
    -------
    CalibratedP
        Carries the exact rank count, so threshold comparisons can be done
        without floating-point rounding.
    """
    score = float(score)
    if not math.isfinite(score):
        raise NonFiniteScore(f"score must be finite, got {score!r}")
    return CalibratedP(pool.count_at_least(score), pool.n)


def p_floor(pool: ReferencePool) -> float:
    """Smallest attainable p-value, ``1 / (n + 1)``."""
    return 1.0 / (pool.n + 1)
