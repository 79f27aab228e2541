import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from anytime_release import ReferencePool, calibrator_new, run_wrapper, tail_p_value, wealth_update
from anytime_release.calibrate import CalibratedP, as_fraction, p_floor
from anytime_release.errors import (BadAlpha, BadEta, BadInput, BadTrunc, EmptyStream,
                                    NonFiniteScore, NonPositiveEValue)
from anytime_release.evidence import WealthState, evaluate_calibrator, ville_threshold

from brute import linear_scan_p

etas = st.floats(0.05, 0.95)
truncs = st.floats(1.0, 1000.0)


class TestTailPValue:
    def test_two_point_pool(self):
        pool = ReferencePool.from_scores([0.9, 0.5])
        assert tail_p_value(pool, 0.95).fraction == Fraction(1, 3)
        assert tail_p_value(pool, 0.9).fraction == Fraction(2, 3)  # a tie counts against
        assert tail_p_value(pool, 0.6).fraction == Fraction(2, 3)
        assert tail_p_value(pool, 0.5).fraction == Fraction(1, 1)
        assert tail_p_value(pool, 0.1).value == 1.0

    def test_reference_grid(self, top55):
        assert tail_p_value(top55, 1.0).fraction == Fraction(25, 171)
        assert tail_p_value(top55, 29 / 30).fraction == Fraction(37, 171)
        assert tail_p_value(top55, 26 / 30).fraction == Fraction(51, 171)
        assert round(tail_p_value(top55, 29 / 30).value, 4) == 0.2164
        assert p_floor(top55) == pytest.approx(1 / 171)

    def test_non_finite(self, top55):
        with pytest.raises(NonFiniteScore):
            tail_p_value(top55, math.inf)

    def test_exact_level_comparison(self):
        # 1/10 as a float is slightly above 1/10; the level is read as its decimal literal
        assert CalibratedP(0, 9).at_most(0.1)
        assert not CalibratedP(1, 9).at_most(0.1)
        assert as_fraction(0.1) == Fraction(1, 10)

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=40), st.integers(-2, 22))
    @settings(max_examples=300)
    def test_matches_linear_scan(self, raw, s):
        pool = ReferencePool.from_scores([k / 20 for k in raw])
        cp = tail_p_value(pool, s / 20)
        assert cp.fraction == linear_scan_p([k / 20 for k in raw], s / 20)
        assert Fraction(1, pool.n + 1) <= cp.fraction <= 1

    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=30), st.floats(-6, 6), st.floats(-6, 6))
    def test_monotone_in_score(self, raw, a, b):
        pool = ReferencePool.from_scores(raw)
        lo, hi = sorted((a, b))
        assert tail_p_value(pool, hi).fraction <= tail_p_value(pool, lo).fraction


class TestCalibrator:
    def test_default_constant(self):
        cal = calibrator_new()
        assert (cal.eta, cal.trunc) == (0.7, 10.0)
        assert cal.norm == pytest.approx(0.4059163995303538, rel=1e-12)
        assert cal.log_f1 == pytest.approx(-0.9016080530701045, rel=1e-12)

    @pytest.mark.parametrize("u, expected", [(51 / 171, 0.94675), (25 / 171, 1.55947), (1 / 171, 4.05916)])
    def test_reference_values(self, cal, u, expected):
        assert cal(u) == pytest.approx(expected, abs=5e-5)

    def test_truncation_is_flat(self, cal):
        cutoff = 10 ** (-1 / 0.7)
        assert cal(cutoff / 2) == cal(cutoff / 10) == pytest.approx(cal.norm * 10)

    def test_eta_only_family_at_m1_is_constant(self):
        # M = 1 caps the power at 1, then c = 1 and f is identically 1
        cal = calibrator_new(0.5, 1.0)
        assert cal.norm == pytest.approx(1.0)
        assert cal(0.01) == pytest.approx(1.0)

    @given(etas, truncs)
    @settings(max_examples=60, deadline=None)
    def test_unit_integral(self, eta, trunc):
        cal = calibrator_new(eta, trunc)
        cut = trunc ** (-1 / eta)
        head = quad(lambda u: cal.norm * trunc, 0, cut)[0]
        # u = exp(s) keeps the integrand smooth when the kink sits near zero
        tail = quad(lambda s: cal(math.exp(s)) * math.exp(s), math.log(cut), 0.0, limit=200)[0]
        value = head + tail
        assert value == pytest.approx(1.0, abs=1e-6)

    @given(etas, truncs, st.floats(1e-9, 1.0), st.floats(1e-9, 1.0))
    def test_non_increasing_and_log_consistent(self, eta, trunc, u, v):
        cal = calibrator_new(eta, trunc)
        lo, hi = sorted((u, v))
        assert cal(lo) >= cal(hi)
        assert cal.log(u) == pytest.approx(math.log(cal(u)), abs=1e-12)

    @pytest.mark.parametrize("eta", [0.0, 1.0, -0.1, 1.5])
    def test_bad_eta(self, eta):
        with pytest.raises(BadEta):
            calibrator_new(eta, 10)

    @pytest.mark.parametrize("trunc", [0.5, math.inf, math.nan])
    def test_bad_trunc(self, trunc):
        with pytest.raises(BadTrunc):
            calibrator_new(0.7, trunc)

    @pytest.mark.parametrize("u", [0.0, -0.1, 1.01, math.nan])
    def test_bad_argument(self, cal, u):
        with pytest.raises(BadInput):
            evaluate_calibrator(cal, u)


class TestWealth:
    def test_update_multiplies(self):
        s = wealth_update(WealthState(), 2.0)
        s = wealth_update(s, 0.25)
        assert s.wealth == pytest.approx(0.5)
        assert s.step == 2

    def test_release_recorded_once(self):
        s = WealthState()
        for e in (5.0, 2.0, 0.01, 100.0):
            s = wealth_update(s, e, alpha=0.1)
        assert s.released_at == 2

    @pytest.mark.parametrize("e", [0.0, -1.0, math.inf, math.nan])
    def test_bad_e_value(self, e):
        with pytest.raises(NonPositiveEValue):
            wealth_update(WealthState(), e)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_bad_alpha(self, alpha):
        with pytest.raises(BadAlpha):
            ville_threshold(alpha)

    def test_threshold_is_inclusive(self):
        # wealth exactly 1/alpha releases
        s = wealth_update(WealthState(), 4.0, alpha=0.25)
        assert s.released_at == 1


class TestRunWrapper:
    def test_mbpp598(self, top55, cal, mbpp598):
        out = run_wrapper(mbpp598, top55, cal, 0.1, 10)
        assert out.decision == "released" and out.release_step == 7
        assert out.wealth_trace[0] == pytest.approx(0.9467, abs=5e-4)
        assert out.wealth_trace[6] == pytest.approx(13.617, abs=1e-3)
        assert len(out.wealth_trace) == 7
        full = run_wrapper(mbpp598, top55, cal, 0.1, 10, continue_after_release=True)
        assert full.release_step == 7
        assert full.wealth_trace[-1] == pytest.approx(51.64, abs=0.01)

    def test_mbpp74(self, top55, cal, mbpp74):
        out = run_wrapper(mbpp74, top55, cal, 0.1, 10)
        assert not out.released and out.release_step is None
        assert out.wealth_trace[-1] == pytest.approx(5.4692, abs=1e-3)
        assert all(p == pytest.approx(37 / 171) for p in out.p_trace)

    def test_short_stream_abstains(self, top55, cal):
        out = run_wrapper([1.0, 1.0], top55, cal, 0.1, 10)
        assert not out.released and len(out.wealth_trace) == 2

    def test_t_max_truncates(self, top55, cal, mbpp598):
        out = run_wrapper(mbpp598, top55, cal, 0.1, 6)
        assert not out.released and len(out.p_trace) == 6

    def test_per_step_calibrators(self, top55, mbpp598):
        cals = [calibrator_new(0.7, 10)] * 3 + [calibrator_new(0.9, 100)] * 7
        out = run_wrapper(mbpp598, top55, cals, 0.1, 10, continue_after_release=True)
        expected = sum(c.log(p) for c, p in zip(cals, out.p_trace))
        assert out.log_wealth_trace[-1] == pytest.approx(expected)

    def test_empty_stream(self, top55):
        with pytest.raises(EmptyStream):
            run_wrapper([], top55)

    @given(st.lists(st.integers(0, 10), min_size=1, max_size=15),
           st.lists(st.integers(0, 10), min_size=1, max_size=12))
    @settings(max_examples=200)
    def test_release_is_first_crossing(self, pool_raw, stream_raw):
        pool = ReferencePool.from_scores([k / 10 for k in pool_raw])
        cal = calibrator_new()
        out = run_wrapper([k / 10 for k in stream_raw], pool, cal, 0.2, 12, continue_after_release=True)
        crossings = [t for t, w in enumerate(out.log_wealth_trace, 1) if w >= math.log(5)]
        assert out.release_step == (crossings[0] if crossings else None)
