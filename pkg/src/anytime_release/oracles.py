"""Closed-form theory bounds and the Monte Carlo / enumeration harnesses checking them.

Seeding contract: replication ``i`` of a run with root seed ``s`` draws from
``SeedSequence(s, spawn_key=(1, i))`` and the simulated pool from
``SeedSequence(s, spawn_key=(0,))``. Results therefore do not depend on how
replications are chunked or spread over worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import BadC, BadConfig, BadDistribution, BadInput, BadZMax, DegenerateInputs, TooLarge
from .evidence import BettingCalibrator, calibrator_new, ville_threshold
from .gain import max_step_gain, required_gain, step_gain
from .pool import ReferencePool

SE_SLACK = 3.0
MAX_OUTCOMES = 20


# ---------------------------------------------------------------- closed forms

def rout_upper_bound(q: float, pi0: float, alpha: float, beta: float) -> float:
    """Bound on the release-conditional failure rate.

    ``q`` is the failure rate among releases on feasible tasks, ``pi0`` the
    infeasible fraction, ``alpha`` the false-release level and ``beta`` the
    feasible-side release probability.
    """
    for name, v in (("q", q), ("pi0", pi0), ("beta", beta)):
        if not 0.0 <= v <= 1.0:
            raise BadInput(f"{name} must lie in [0, 1], got {v!r}")
    if not 0.0 < alpha <= 1.0:
        raise BadInput(f"alpha must lie in (0, 1], got {alpha!r}")
    infeasible = pi0 * alpha
    denom = infeasible + (1.0 - pi0) * beta
    if denom == 0.0:
        raise DegenerateInputs("both release channels have zero mass")
    return q + (1.0 - q) * infeasible / denom


def naive_stopping_lower_bound(c_seq: Sequence[float], horizon: int) -> float:
    """Lower bound ``1 - exp(-sum c_t)`` on crossing probability of a repeated one-step test."""
    if horizon > len(c_seq):
        raise BadInput(f"horizon {horizon} exceeds the {len(c_seq)} supplied per-step rates")
    cs = [float(c) for c in c_seq[:horizon]]
    if any(not 0.0 <= c <= 1.0 for c in cs):
        raise BadC("per-step crossing probabilities must lie in [0, 1]")
    return -math.expm1(-math.fsum(cs))


def power_lower_bound(b_t: float, a_t: float, z_max: float, horizon: int) -> float:
    if not z_max > 0:
        raise BadZMax(f"z_max must be positive, got {z_max!r}")
    if horizon < 1:
        raise BadInput(f"horizon must be >= 1, got {horizon!r}")
    delta = b_t - a_t
    if delta <= 0:
        return 0.0
    return -math.expm1(-2.0 * delta * delta / (horizon * z_max * z_max))


def drift_upper_bound(alpha: float, trunc: float, eps: float, horizon: int) -> float:
    """False-release level under per-step calibration drift of total variation ``eps``."""
    if not 0.0 < alpha < 1.0:
        raise BadInput(f"alpha must lie in (0, 1), got {alpha!r}")
    if trunc < 0 or eps < 0 or horizon < 0:
        raise BadInput("trunc, eps and horizon must be non-negative")
    return alpha * (1.0 + trunc * eps) ** horizon


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class BoundReport:
    """Empirical estimate checked against a theoretical bound.

    ``direction`` is ``"upper"`` when the bound caps the estimate and
    ``"lower"`` when it floors it; ``satisfied`` allows SE_SLACK standard errors.
    """

    name: str
    empirical: float
    stderr: float
    bound: float
    direction: str
    satisfied: bool
    reps: int
    extra: dict[str, Any] = field(default_factory=dict)


def proportion_stderr(p_hat: float, reps: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / reps)


def _report(name, hits: int, reps: int, bound: float, direction: str, **extra) -> BoundReport:
    p_hat = hits / reps
    se = proportion_stderr(p_hat, reps)
    if direction == "upper":
        ok = p_hat <= bound + SE_SLACK * se
    else:
        ok = p_hat >= bound - SE_SLACK * se
    return BoundReport(name, p_hat, se, bound, direction, bool(ok), reps, dict(extra, hits=hits))


# ---------------------------------------------------------------- score laws

@dataclass(frozen=True)
class ScoreLaw:
    """Named score distribution: ``uniform``, ``beta:a,b``, ``empirical`` or ``point:x``."""

    kind: str
    params: tuple[float, ...] = ()

    @classmethod
    def parse(cls, text: "str | ScoreLaw") -> "ScoreLaw":
        if isinstance(text, ScoreLaw):
            return text
        name, _, rest = str(text).partition(":")
        name = name.strip().lower()
        try:
            params = tuple(float(x) for x in rest.split(",")) if rest else ()
        except ValueError as exc:
            raise BadConfig(f"bad score law {text!r}") from exc
        expected = {"uniform": 0, "empirical": 0, "beta": 2, "point": 1}
        if name not in expected or len(params) != expected[name]:
            raise BadConfig(f"unknown score law {text!r}; use uniform, beta:a,b, empirical or point:x")
        if name == "beta" and not all(p > 0 for p in params):
            raise BadConfig("beta parameters must be positive")
        return cls(name, params)

    def sample(self, rng: np.random.Generator, size, pool: ReferencePool | None = None) -> np.ndarray:
        if self.kind == "uniform":
            return rng.random(size)
        if self.kind == "beta":
            return rng.beta(self.params[0], self.params[1], size)
        if self.kind == "point":
            return np.full(size, self.params[0])
        if pool is None:
            raise BadConfig("the empirical law needs a reference pool")
        return np.asarray(pool.scores)[rng.integers(0, pool.n, size)]

    def __str__(self):
        if not self.params:
            return self.kind
        return f"{self.kind}:{','.join(repr(p) for p in self.params)}"


@dataclass(frozen=True)
class NullSimConfig:
    n_pool: int = 200
    pool_law: str = "uniform"
    stream_law: str = "empirical"
    horizon: int = 10
    reps: int = 10_000
    seed: int = 0
    drift_eps: float = 0.0
    alpha: float = 0.10

    def __post_init__(self):
        if self.reps < 1:
            raise BadConfig("reps must be >= 1")
        if self.horizon < 1:
            raise BadConfig("horizon must be >= 1")
        if self.n_pool < 1:
            raise BadConfig("n_pool must be >= 1")
        if not 0.0 <= self.drift_eps <= 1.0:
            raise BadConfig("drift_eps must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise BadConfig("alpha must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise BadConfig("seed must be a 64-bit unsigned integer")
        ScoreLaw.parse(self.pool_law)
        ScoreLaw.parse(self.stream_law)


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, rep))))


def pool_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))


def draw_pool(cfg: NullSimConfig) -> ReferencePool:
    law = ScoreLaw.parse(cfg.pool_law)
    if law.kind == "empirical":
        raise BadConfig("the pool law cannot itself be empirical")
    scores = law.sample(pool_rng(cfg.seed), cfg.n_pool)
    return ReferencePool.from_scores(scores.tolist(), meta={"pool_law": str(law), "seed": cfg.seed})


# ---------------------------------------------------------------- batched wrapper

def batch_log_wealth(scores: np.ndarray, pool: ReferencePool, cal: BettingCalibrator) -> np.ndarray:
    """Running log-wealth for a (reps, T) array of score streams."""
    counts = pool.counts_at_least(scores)
    p = (1.0 + counts) / (pool.n + 1.0)
    log_e = math.log(cal.norm) + np.minimum(-cal.eta * np.log(p), math.log(cal.trunc))
    return np.cumsum(log_e, axis=1)


def batch_release_steps(scores: np.ndarray, pool: ReferencePool, cal: BettingCalibrator,
                        alpha: float) -> np.ndarray:
    """First step (1-based) with wealth >= 1/alpha per row; 0 when never."""
    log_w = batch_log_wealth(np.atleast_2d(scores), pool, cal)
    hit = log_w >= -math.log(alpha)
    first = hit.argmax(axis=1) + 1
    return np.where(hit.any(axis=1), first, 0)


def _map_chunks(fn, reps: int, workers: int, chunk: int = 2048):
    bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
    if workers <= 1:
        parts = [fn(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda b: fn(*b), bounds))
    return np.concatenate(parts)


def contaminant_score(law: ScoreLaw, pool: ReferencePool) -> float:
    """A score above both the pool maximum and the support of ``law``."""
    support_max = {"uniform": 1.0, "beta": 1.0, "empirical": pool.scores[0]}.get(
        law.kind, law.params[0] if law.params else pool.scores[0])
    return max(pool.scores[0], support_max) + 1.0


def null_streams(cfg: NullSimConfig, pool: ReferencePool, lo: int, hi: int) -> np.ndarray:
    """Score streams for replications ``lo..hi-1``.

    With probability ``drift_eps`` per step a score is replaced by a point
    mass above the pool maximum, so each step's law sits at total variation
    exactly ``drift_eps`` from the base law.
    """
    law = ScoreLaw.parse(cfg.stream_law)
    contaminant = contaminant_score(law, pool)
    out = np.empty((hi - lo, cfg.horizon))
    for row, rep in enumerate(range(lo, hi)):
        rng = replication_rng(cfg.seed, rep)
        base = law.sample(rng, cfg.horizon, pool)
        if cfg.drift_eps > 0:
            drifted = rng.random(cfg.horizon) < cfg.drift_eps
            base = np.where(drifted, contaminant, base)
        out[row] = base
    return out


def simulate_null(cfg: NullSimConfig, cal: BettingCalibrator | None = None,
                  pool_override: ReferencePool | None = None, workers: int = 1) -> BoundReport:
    """Release frequency of the wrapper on simulated infeasible streams.

    The bound is ``alpha`` without drift and ``alpha (1 + M eps)^T`` with it.
    """
    cal = cal or calibrator_new()
    pool = pool_override if pool_override is not None else draw_pool(cfg)

    def chunk(lo, hi):
        return batch_release_steps(null_streams(cfg, pool, lo, hi), pool, cal, cfg.alpha)

    steps = _map_chunks(chunk, cfg.reps, workers)
    hits = int((steps > 0).sum())
    if cfg.drift_eps > 0:
        bound = drift_upper_bound(cfg.alpha, cal.trunc, cfg.drift_eps, cfg.horizon)
        name = "drift"
    else:
        bound = cfg.alpha
        name = "ville"
    return _report(name, hits, cfg.reps, bound, "upper", alpha=cfg.alpha, horizon=cfg.horizon,
                   drift_eps=cfg.drift_eps, n_pool=pool.n, seed=cfg.seed,
                   threshold=ville_threshold(cfg.alpha))


def simulate_naive(cfg: NullSimConfig, per_step_hit: float, workers: int = 1) -> BoundReport:
    """Crossing frequency of a one-step test that fires with probability ``c`` per step."""
    c = float(per_step_hit)
    if not 0.0 <= c <= 1.0:
        raise BadConfig(f"per-step crossing probability must lie in [0, 1], got {c!r}")
    T = cfg.horizon

    def chunk(lo, hi):
        crossed = np.empty(hi - lo, dtype=bool)
        for row, rep in enumerate(range(lo, hi)):
            crossed[row] = bool((replication_rng(cfg.seed, rep).random(T) < c).any())
        return crossed

    hits = int(_map_chunks(chunk, cfg.reps, workers).sum())
    bound = naive_stopping_lower_bound([c] * T, T)
    exact = -math.expm1(T * math.log1p(-c)) if c < 1 else 1.0
    return _report("naive", hits, cfg.reps, bound, "lower", per_step_hit=c, horizon=T, exact=exact)


def simulate_feasible(pool: ReferencePool, cal: BettingCalibrator, alpha: float, horizon: int,
                      reps: int, seed: int, correct_prob: float, correct_score: float,
                      incorrect_score: float, workers: int = 1) -> BoundReport:
    """Release frequency on feasible streams with i.i.d. correct steps.

    Correct steps carry ``correct_score`` and incorrect ones
    ``incorrect_score``. When the incorrect score calibrates to ``p = 1``
    the supplied correct-candidate gain is exactly
    ``horizon * correct_prob * Z(correct_score)``.
    """
    if not 0.0 <= correct_prob <= 1.0:
        raise BadConfig("correct_prob must lie in [0, 1]")
    if reps < 1 or horizon < 1:
        raise BadConfig("reps and horizon must be >= 1")

    def chunk(lo, hi):
        rows = np.empty((hi - lo, horizon))
        for row, rep in enumerate(range(lo, hi)):
            correct = replication_rng(seed, rep).random(horizon) < correct_prob
            rows[row] = np.where(correct, correct_score, incorrect_score)
        return batch_release_steps(rows, pool, cal, alpha)

    steps = _map_chunks(chunk, reps, workers)
    z_correct = step_gain(cal, (1 + pool.count_at_least(correct_score)) / (pool.n + 1))
    z_incorrect = step_gain(cal, (1 + pool.count_at_least(incorrect_score)) / (pool.n + 1))
    b_t = horizon * correct_prob * z_correct
    a_t = required_gain(cal, alpha, horizon)
    z_max = max_step_gain(cal, pool.n)
    bound = power_lower_bound(b_t, a_t, z_max, horizon)
    return _report("power", int((steps > 0).sum()), reps, bound, "lower", b_t=b_t, a_t=a_t,
                   z_max=z_max, z_incorrect=z_incorrect, horizon=horizon, correct_prob=correct_prob)


def simulate_super_uniformity(n_pool: int = 200, reps: int = 100_000,
                              grid: Sequence[float] | None = None, seed: int = 0,
                              chunk: int = 4096) -> list[BoundReport]:
    """Frequency of ``p <= u`` for a fresh uniform pool and one uniform online score.

    Each replication draws its own pool, so the check targets the marginal
    guarantee over pool and online draw together. Chunk ``j`` draws from
    ``SeedSequence(seed, spawn_key=(2, j))``.
    """
    if n_pool < 1 or reps < 1:
        raise BadConfig("n_pool and reps must be >= 1")
    grid = [k / 100 for k in range(1, 100)] if grid is None else [float(u) for u in grid]
    ps = []
    for j, lo in enumerate(range(0, reps, chunk)):
        m = min(chunk, reps - lo)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(2, j))))
        draws = rng.random((m, n_pool + 1))
        ge = (draws[:, :n_pool] >= draws[:, n_pool:]).sum(axis=1)
        ps.append((1.0 + ge) / (n_pool + 1.0))
    p = np.concatenate(ps)
    return [_report(f"super_uniformity@{u:g}", int((p <= u).sum()), reps, u, "upper", u=u, n_pool=n_pool)
            for u in grid]


# ---------------------------------------------------------------- observable separation

def total_variation(p0: Sequence[float], p1: Sequence[float]) -> float:
    return 0.5 * float(np.abs(np.asarray(p1, float) - np.asarray(p0, float)).sum())


def _check_distribution(p, k: int, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape != (k,):
        raise BadDistribution(f"{name} must have one entry per outcome ({k})")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
        raise BadDistribution(f"{name} must be a probability vector")
    return arr


def tv_separation_check(transcripts: Sequence[Any], p0: Sequence[float],
                        p1: Sequence[float], tol: float = 1e-12) -> BoundReport:
    """Check ``P1(D=1) <= P0(D=1) + TV`` for every deterministic rule ``D``.

    All ``2^k`` subsets of the ``k`` outcomes are enumerated as release sets.
    ``empirical`` is the largest gap ``P1(D) - P0(D)`` found; it equals the
    total variation, so the tightest slack is zero.
    """
    k = len(transcripts)
    if k > MAX_OUTCOMES:
        raise TooLarge(f"{k} outcomes exceeds the enumeration limit of {MAX_OUTCOMES}")
    if k == 0:
        raise BadDistribution("need at least one outcome")
    a0 = _check_distribution(p0, k, "p0")
    a1 = _check_distribution(p1, k, "p1")
    tv = total_variation(a0, a1)
    diff = a1 - a0
    bits = np.arange(k)
    best, best_mask, violations = -math.inf, 0, 0
    n_rules = 1 << k
    step = 1 << 16
    for lo in range(0, n_rules, step):
        masks = np.arange(lo, min(lo + step, n_rules))
        member = (masks[:, None] >> bits) & 1
        gap = member @ diff
        violations += int((gap > tv + tol).sum())
        i = int(gap.argmax())
        if gap[i] > best:
            best, best_mask = float(gap[i]), int(masks[i])
    release_set = [transcripts[j] for j in range(k) if best_mask >> j & 1]
    return BoundReport("tv_separation", best, 0.0, tv, "upper", violations == 0, n_rules,
                       {"tv": tv, "slack": tv - best, "violations": violations,
                        "tightest_rule": release_set})
