"""Shared fixtures.

The reference per-trajectory numbers depend only on rank counts against the
selected pool, so a synthetic bank on the 1/30 visible-test grid is enough
to reproduce them. The bank below has 309 incorrect scores whose upper-tail
families have sizes 127/150/170/207/238/309 for q = .35/.45/.55/.65/.75/.85
(ties included), and its q = 0.55 pool has 24 scores at 30/30, 36 at or
above 29/30 and 50 at or above 26/30.
"""

import pytest

from anytime_release import ReferencePool, ScoredCandidate, Trajectory, UpperTailRule, calibrator_new
from anytime_release.pool import collect_hard_negatives

# visible tests passed (out of 30) -> number of incorrect bank candidates
BANK_COUNTS = {30: 24, 29: 12, 28: 6, 27: 4, 26: 4, 25: 77, 24: 23, 23: 20, 22: 37, 21: 31, 20: 71}

# held-out incorrect steps for the select-stage diagnostic (88 steps)
HELDOUT_COUNTS = {30: 10, 29: 13, 27: 13, 25: 2, 19: 50}

FAMILY_SIZES = {0.35: 127, 0.45: 150, 0.55: 170, 0.65: 207, 0.75: 238, 0.85: 309, 1.0: 309}


def grid_score(k: int) -> float:
    return k / 30


def expand(counts):
    return [grid_score(k) for k, m in sorted(counts.items(), reverse=True) for _ in range(m)]


@pytest.fixture(scope="session")
def bank_candidates():
    scores = expand(BANK_COUNTS)
    return [ScoredCandidate(f"bank/{i}", s, 0) for i, s in enumerate(scores)] + [
        ScoredCandidate("bank/correct-0", 1.0, 1),
        ScoredCandidate("bank/correct-1", 0.9, 1),
    ]


@pytest.fixture(scope="session")
def top55(bank_candidates) -> ReferencePool:
    return collect_hard_negatives(bank_candidates, UpperTailRule(0.55))


@pytest.fixture(scope="session")
def heldout_scores():
    return expand(HELDOUT_COUNTS)


@pytest.fixture(scope="session")
def cal():
    return calibrator_new(0.7, 10.0)


S_867, S_967, S_1 = grid_score(26), grid_score(29), 1.0


@pytest.fixture(scope="session")
def mbpp74() -> Trajectory:
    return Trajectory.from_scores("Mbpp/74", [S_967] * 10, [False] * 10)


@pytest.fixture(scope="session")
def mbpp598() -> Trajectory:
    return Trajectory.from_scores("Mbpp/598", [S_867] + [S_1] * 9, [False] + [True] * 9)


MBPP643_CORRECT = [True, False, False, False, True, False, True, False, True, True]


@pytest.fixture(scope="session")
def mbpp643() -> Trajectory:
    scores = [S_1 if y else S_967 for y in MBPP643_CORRECT]
    return Trajectory.from_scores("Mbpp/643", scores, MBPP643_CORRECT)
