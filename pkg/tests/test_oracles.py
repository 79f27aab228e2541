import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anytime_release import ReferencePool, calibrator_new, run_wrapper
from anytime_release.errors import (BadC, BadConfig, BadDistribution, BadInput, BadZMax,
                                    DegenerateInputs, TooLarge)
from anytime_release.oracles import (NullSimConfig, ScoreLaw, batch_log_wealth, batch_release_steps,
                                     contaminant_score, draw_pool, drift_upper_bound,
                                     naive_stopping_lower_bound, null_streams, power_lower_bound,
                                     rout_upper_bound, simulate_feasible, simulate_naive, simulate_null,
                                     simulate_super_uniformity, total_variation, tv_separation_check)

from brute import best_rule_gap


class TestClosedForms:
    def test_rout_reduces_to_q_without_infeasible_tasks(self):
        assert rout_upper_bound(0.2, 0.0, 0.1, 0.5) == pytest.approx(0.2)

    def test_rout_value(self):
        # q + (1-q) * pi0 alpha / (pi0 alpha + (1-pi0) beta)
        assert rout_upper_bound(0.1, 0.5, 0.1, 0.9) == pytest.approx(0.1 + 0.9 * 0.05 / 0.5)

    def test_rout_degenerate(self):
        with pytest.raises(DegenerateInputs):
            rout_upper_bound(0.1, 0.0, 0.1, 0.0)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0.001, 1), st.floats(0.001, 1))
    def test_rout_in_unit_interval(self, q, pi0, alpha, beta):
        b = rout_upper_bound(q, pi0, alpha, beta)
        assert q - 1e-12 <= b <= 1 + 1e-12

    def test_naive_value(self):
        assert naive_stopping_lower_bound([0.05] * 100, 100) == pytest.approx(1 - math.exp(-5), abs=1e-15)

    def test_naive_errors(self):
        with pytest.raises(BadC):
            naive_stopping_lower_bound([1.5], 1)
        with pytest.raises(BadInput):
            naive_stopping_lower_bound([0.1], 2)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_naive_below_exact(self, cs):
        exact = 1 - math.prod(1 - c for c in cs)
        assert naive_stopping_lower_bound(cs, len(cs)) <= exact + 1e-12

    def test_power(self):
        assert power_lower_bound(1.0, 2.0, 1.0, 10) == 0.0
        assert power_lower_bound(12.113, 11.318, math.log(10), 10) == pytest.approx(
            1 - math.exp(-2 * 0.795 ** 2 / (10 * math.log(10) ** 2)), abs=1e-4)
        with pytest.raises(BadZMax):
            power_lower_bound(1, 0, 0, 10)

    def test_drift(self):
        assert drift_upper_bound(0.1, 10, 0.02, 10) == pytest.approx(0.1 * 1.2 ** 10)
        assert drift_upper_bound(0.1, 10, 0.0, 10) == 0.1
        assert drift_upper_bound(0.1, 10, 0.02, 0) == 0.1


class TestScoreLaw:
    @pytest.mark.parametrize("text, kind, params", [("uniform", "uniform", ()), ("beta:2,5", "beta", (2.0, 5.0)),
                                                    ("empirical", "empirical", ()), ("point:0.3", "point", (0.3,))])
    def test_parse(self, text, kind, params):
        law = ScoreLaw.parse(text)
        assert (law.kind, law.params) == (kind, params)
        assert ScoreLaw.parse(str(law)) == law

    @pytest.mark.parametrize("text", ["normal", "beta:1", "beta:-1,2", "point:x", "uniform:3"])
    def test_bad(self, text):
        with pytest.raises(BadConfig):
            ScoreLaw.parse(text)

    def test_empirical_needs_pool(self):
        with pytest.raises(BadConfig):
            ScoreLaw.parse("empirical").sample(np.random.default_rng(0), 3)


class TestBatch:
    @given(st.lists(st.integers(0, 10), min_size=1, max_size=12),
           st.lists(st.lists(st.integers(0, 11), min_size=5, max_size=5), min_size=1, max_size=6),
           st.sampled_from([0.05, 0.1, 0.3]))
    @settings(max_examples=150)
    def test_matches_scalar_wrapper(self, pool_raw, rows, alpha):
        pool = ReferencePool.from_scores([k / 10 for k in pool_raw])
        cal = calibrator_new()
        scores = np.array(rows, dtype=float) / 10
        log_w = batch_log_wealth(scores, pool, cal)
        steps = batch_release_steps(scores, pool, cal, alpha)
        for i, row in enumerate(scores):
            out = run_wrapper(row.tolist(), pool, cal, alpha, 5, continue_after_release=True)
            assert log_w[i] == pytest.approx(out.log_wealth_trace, abs=1e-12)
            assert steps[i] == (out.release_step or 0)


class TestSimulators:
    def test_null_deterministic_across_workers(self):
        cfg = NullSimConfig(reps=5000, seed=7)
        one = simulate_null(cfg, workers=1)
        four = simulate_null(cfg, workers=4)
        assert one.extra["hits"] == four.extra["hits"]
        assert one.satisfied and one.bound == 0.1

    def test_null_seed_changes_result(self):
        a = null_streams(NullSimConfig(reps=10, seed=1), draw_pool(NullSimConfig(seed=1)), 0, 10)
        b = null_streams(NullSimConfig(reps=10, seed=2), draw_pool(NullSimConfig(seed=1)), 0, 10)
        assert not np.array_equal(a, b)

    def test_chunks_are_prefix_stable(self):
        cfg = NullSimConfig(reps=20, seed=3)
        pool = draw_pool(cfg)
        whole = null_streams(cfg, pool, 0, 20)
        assert np.array_equal(whole[5:12], null_streams(cfg, pool, 5, 12))

    def test_contamination_has_exact_tv(self):
        cfg = NullSimConfig(reps=1, drift_eps=0.3, stream_law="uniform")
        pool = draw_pool(cfg)
        c = contaminant_score(ScoreLaw.parse("uniform"), pool)
        assert c > 1.0 and c > pool.scores[0]
        # mixture (1-eps) U + eps delta_c against U: TV = eps since c is outside U's support
        many = NullSimConfig(reps=2000, horizon=10, drift_eps=0.3, stream_law="uniform", seed=5)
        s = null_streams(many, pool, 0, 2000)
        rate = float((s == c).mean())
        assert abs(rate - 0.3) < 4 * math.sqrt(0.3 * 0.7 / s.size)

    def test_drift_report(self):
        rep = simulate_null(NullSimConfig(reps=3000, drift_eps=0.05, seed=1))
        assert rep.name == "drift"
        assert rep.bound == pytest.approx(0.1 * 1.5 ** 10)
        assert rep.satisfied

    def test_naive(self):
        rep = simulate_naive(NullSimConfig(reps=3000, horizon=20, seed=2), 0.1)
        assert rep.direction == "lower" and rep.satisfied
        assert rep.extra["exact"] == pytest.approx(1 - 0.9 ** 20)
        with pytest.raises(BadConfig):
            simulate_naive(NullSimConfig(reps=10), 1.5)

    def test_feasible(self, top55, cal):
        rep = simulate_feasible(top55, cal, 0.1, 10, 2000, 0, 0.9, 1.0, 0.0)
        assert rep.extra["z_incorrect"] == 0.0
        assert rep.extra["b_t"] == pytest.approx(10 * 0.9 * 1.34595, abs=1e-4)
        assert rep.satisfied

    def test_super_uniformity_small(self):
        reps = simulate_super_uniformity(n_pool=20, reps=20000, grid=[0.1, 0.5, 0.9], seed=4)
        assert all(r.satisfied for r in reps)
        # the p-grid is k/21; P(p <= 0.5) = floor(10.5)/21
        assert reps[1].empirical == pytest.approx(10 / 21, abs=4 * reps[1].stderr + 1e-3)

    @pytest.mark.parametrize("kwargs", [dict(reps=0), dict(horizon=0), dict(drift_eps=1.5),
                                        dict(alpha=1.0), dict(pool_law="nope"), dict(seed=-1)])
    def test_bad_config(self, kwargs):
        with pytest.raises(BadConfig):
            NullSimConfig(**kwargs)


class TestSeparation:
    def test_two_outcomes(self):
        rep = tv_separation_check(["a", "b"], [0.8, 0.2], [0.3, 0.7])
        assert rep.extra["tv"] == pytest.approx(0.5)
        assert rep.empirical == pytest.approx(0.5)
        assert rep.extra["tightest_rule"] == ["b"]
        assert rep.satisfied and rep.reps == 4

    def test_identical_distributions(self):
        rep = tv_separation_check(["a", "b", "c"], [0.2, 0.3, 0.5], [0.2, 0.3, 0.5])
        assert rep.extra["tv"] == 0.0 and rep.empirical == 0.0

    def test_errors(self):
        with pytest.raises(TooLarge):
            tv_separation_check(list(range(21)), [1 / 21] * 21, [1 / 21] * 21)
        with pytest.raises(BadDistribution):
            tv_separation_check(["a", "b"], [0.5, 0.6], [0.5, 0.5])
        with pytest.raises(BadDistribution):
            tv_separation_check(["a", "b"], [0.5, 0.5], [1.0])

    @given(st.integers(1, 8).flatmap(lambda k: st.tuples(
        st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k),
        st.lists(st.floats(0.0, 1.0), min_size=k, max_size=k))))
    @settings(max_examples=150)
    def test_matches_combinations(self, pair):
        a, b = (np.asarray(x) + 1e-3 for x in pair)
        p0, p1 = (a / a.sum()).tolist(), (b / b.sum()).tolist()
        rep = tv_separation_check(list(range(len(p0))), p0, p1)
        assert rep.empirical == pytest.approx(best_rule_gap(p0, p1), abs=1e-12)
        assert rep.empirical == pytest.approx(total_variation(p0, p1), abs=1e-12)
        assert rep.extra["violations"] == 0
