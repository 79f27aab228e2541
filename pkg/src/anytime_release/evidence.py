"""Truncated power betting, log-domain wealth, and the threshold release rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .calibrate import CalibratedP, tail_p_value
from .errors import BadAlpha, BadEta, BadInput, BadTrunc, EmptyStream, NonPositiveEValue
from .pool import ReferencePool
from .trajectory import StreamLike, stream_scores

DEFAULT_ETA = 0.7
DEFAULT_TRUNC = 10.0
DEFAULT_ALPHA = 0.10
DEFAULT_T_MAX = 10

RELEASED = "released"
ABSTAINED = "abstained"


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise BadAlpha(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class BettingCalibrator:
    """p-to-e calibrator ``f(u) = c * min(u**-eta, M)`` with unit integral on [0, 1]."""

    eta: float
    trunc: float
    norm: float

    def __call__(self, u: float) -> float:
        return evaluate_calibrator(self, u)

    def log(self, u: float) -> float:
        """``log f(u)``, computed without forming ``u**-eta``."""
        _check_level(u)
        return math.log(self.norm) + min(-self.eta * math.log(u), math.log(self.trunc))

    @property
    def log_f1(self) -> float:
        return math.log(self.norm)


def _check_level(u: float) -> None:
    if not (0.0 < u <= 1.0):
        raise BadInput(f"calibrator argument must lie in (0, 1], got {u!r}")


def normalising_constant(eta: float, trunc: float) -> float:
    # integral of min(u^-eta, M): M on [0, M^(-1/eta)], u^-eta above it
    integral = trunc ** (1.0 - 1.0 / eta) + (1.0 - trunc ** (-(1.0 - eta) / eta)) / (1.0 - eta)
    return 1.0 / integral


def calibrator_new(eta: float = DEFAULT_ETA, trunc: float = DEFAULT_TRUNC) -> BettingCalibrator:
    eta, trunc = float(eta), float(trunc)
    if not 0.0 < eta < 1.0:
        raise BadEta(f"eta must lie in (0, 1), got {eta!r}")
    if not (trunc >= 1.0 and math.isfinite(trunc)):
        raise BadTrunc(f"truncation level must be a finite value >= 1, got {trunc!r}")
    return BettingCalibrator(eta, trunc, normalising_constant(eta, trunc))


def evaluate_calibrator(cal: BettingCalibrator, u: float) -> float:
    _check_level(u)
    return cal.norm * min(u ** (-cal.eta), cal.trunc)


def ville_threshold(alpha: float) -> float:
    """Release threshold ``1 / alpha`` on the wealth scale."""
    return 1.0 / _check_alpha(alpha)


@dataclass(frozen=True)
class WealthState:
    log_wealth: float = 0.0
    step: int = 0
    released_at: int | None = None

    @property
    def wealth(self) -> float:
        return math.exp(self.log_wealth)


def wealth_update(state: WealthState, e_value: float, alpha: float | None = None) -> WealthState:
    """Multiply wealth by ``e_value``.

    When ``alpha`` is given, the first step at which wealth reaches
    ``1 / alpha`` is recorded in ``released_at`` and never overwritten.
    """
    if not (e_value > 0 and math.isfinite(e_value)):
        raise NonPositiveEValue(f"e-value must be positive and finite, got {e_value!r}")
    return _advance(state, math.log(e_value), alpha)


def _advance(state: WealthState, log_e: float, alpha: float | None) -> WealthState:
    log_w = state.log_wealth + log_e
    step = state.step + 1
    released = state.released_at
    if released is None and alpha is not None and log_w >= -math.log(alpha):
        released = step
    return replace(state, log_wealth=log_w, step=step, released_at=released)


@dataclass(frozen=True)
class ReleaseOutcome:
    """Result of running a stopping rule over one trajectory.

    Traces stop at the release step unless the run was asked to continue.
    ``wealth_trace`` is empty for rules that do not accumulate wealth.
    """

    decision: str
    release_step: int | None
    wealth_trace: tuple[float, ...] = ()
    p_trace: tuple[float, ...] = ()
    log_wealth_trace: tuple[float, ...] = ()
    method: str = "ours"

    @property
    def released(self) -> bool:
        return self.decision == RELEASED


def _calibrator_at(cal, t: int) -> BettingCalibrator:
    if isinstance(cal, BettingCalibrator):
        return cal
    return cal[t - 1]


def run_wrapper(stream: StreamLike, pool: ReferencePool,
                cal: BettingCalibrator | Sequence[BettingCalibrator] | None = None,
                alpha: float = DEFAULT_ALPHA, t_max: int = DEFAULT_T_MAX,
                continue_after_release: bool = False) -> ReleaseOutcome:
    """Always-valid release wrapper over one score stream.

    Each score is rank-calibrated against ``pool``, turned into an e-value
    by ``cal`` and multiplied into the wealth. The wrapper releases at the
    first step whose wealth is at least ``1 / alpha`` and abstains when the
    horizon ``min(len(stream), t_max)`` ends first.

    ``cal`` may also be a sequence of calibrators, one per step, fixed in
    advance. With ``continue_after_release`` the traces run to the horizon
    while the decision still reflects the first crossing.
    """
    alpha = _check_alpha(alpha)
    if t_max < 1:
        raise BadInput(f"t_max must be >= 1, got {t_max!r}")
    scores = stream_scores(stream)
    cal = calibrator_new() if cal is None else cal
    horizon = min(len(scores), int(t_max))
    state = WealthState()
    ps, logs = [], []
    for t in range(1, horizon + 1):
        cp = tail_p_value(pool, scores[t - 1])
        state = _advance(state, _calibrator_at(cal, t).log(cp.value), alpha)
        ps.append(cp.value)
        logs.append(state.log_wealth)
        if state.released_at is not None and not continue_after_release:
            break
    tau = state.released_at
    return ReleaseOutcome(
        RELEASED if tau is not None else ABSTAINED,
        tau,
        tuple(math.exp(x) for x in logs),
        tuple(ps),
        tuple(logs),
    )


def calibrated_trace(stream: StreamLike, pool: ReferencePool) -> list[CalibratedP]:
    scores = stream_scores(stream)
    if not scores:
        raise EmptyStream("stream has no steps")
    return [tail_p_value(pool, s) for s in scores]
