import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edss_markov.cdw import (
    CdwRule,
    _cdw_propagation,
    cdw_figure_data,
    cdw_threshold,
    detect_cdw,
    detect_regression,
    predicted_cdw_probability,
    predicted_regression_probability,
    proportion_test,
    regression_table,
    worsening_cut,
)
from edss_markov.chain import TransitionMatrix
from edss_markov.core import DEFAULT_GROUPING, StateGrouping, VisitRecord, build_cohort
from edss_markov.errors import (
    DegenerateExpected,
    EmptyRegressionSet,
    InvalidConfig,
    NoCdwEvents,
    ThresholdAboveScale,
)
from edss_markov.sim import monte_carlo_cdw, monte_carlo_first_passage

from .oracles import enumerate_cdw, enumerate_first_passage, random_stochastic

RULE = CdwRule()
WORKED = [(0, 2.0), (9, 4.0), (12, 3.0), (15, 3.0)]
TWO = StateGrouping((0.0, 3.0))  # "0-2.5" and "3-10"
LAB = DEFAULT_GROUPING.index_of_label


def tm(P):
    return TransitionMatrix(np.asarray(P, float))


class TestThreshold:
    @pytest.mark.parametrize("base,thr", [(2.0, 3.0), (0.0, 1.5), (5.5, 6.0), (1.0, 2.0), (7.0, 7.5)])
    def test_schedule(self, base, thr):
        assert cdw_threshold(base, RULE) == thr

    def test_clipped(self):
        with pytest.warns(ThresholdAboveScale):
            assert cdw_threshold(10.0, RULE) == 10.0

    def test_rule_validation(self):
        with pytest.raises(InvalidConfig):
            CdwRule(delta_mid=0.3)
        with pytest.raises(InvalidConfig):
            CdwRule(confirmation_months=4).confirmation_steps(3)
        assert RULE.confirmation_steps(3) == 2


class TestDetect:
    def test_worked_example(self):
        ev = detect_cdw(WORKED, RULE, "p")
        assert (ev.onset_month, ev.trigger_edss, ev.threshold_edss) == (9, 4.0, 3.0)
        assert ev.trigger_group.label == "4-5.5"
        assert ev.confirm_month == 15

    def test_broken_confirmation(self):
        assert detect_cdw([(0, 2.0), (9, 4.0), (12, 2.5)], RULE) is None

    def test_flat(self):
        assert detect_cdw([(3 * k, 2.0) for k in range(13)], RULE) is None

    def test_needs_anchor_at_window_end(self):
        assert detect_cdw([(0, 2.0), (9, 4.0), (12, 4.0)], RULE) is None

    def test_missing_intermediate_visit_tolerated(self):
        assert detect_cdw([(0, 2.0), (9, 4.0), (18, 3.5)], RULE).onset_month == 9

    def test_earliest_onset(self):
        ev = detect_cdw([(0, 2.0), (3, 3.0), (6, 2.0), (9, 3.5), (12, 3.0), (15, 3.0)], RULE)
        assert ev.onset_month == 9

    def test_visit_records(self):
        recs = [VisitRecord("s", m, x) for m, x in WORKED]
        assert detect_cdw(recs, RULE).subject_id == "s"

    def test_requires_baseline(self):
        with pytest.raises(InvalidConfig):
            detect_cdw([(3, 2.0), (6, 4.0)], RULE)

    def test_regression_examples(self):
        ev = detect_cdw(WORKED, RULE)
        assert detect_regression(WORKED + [(18, 3.0)], ev) is None
        reg = detect_regression(WORKED + [(18, 2.5)], ev)
        assert (reg.month, reg.edss) == (18, 2.5)
        # below the trigger is not enough; it must drop below the threshold
        assert detect_regression(WORKED + [(18, 3.5)], ev) is None

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from([0.0, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0]), min_size=2, max_size=13))
    def test_regression_invariants(self, xs):
        t = [(3 * k, x) for k, x in enumerate(xs)]
        ev = detect_cdw(t, RULE)
        if ev is None:
            return
        assert ev.trigger_edss >= ev.threshold_edss
        assert ev.confirm_month >= ev.onset_month + RULE.confirmation_months
        reg = detect_regression(t, ev)
        if reg is not None:
            assert reg.month > ev.onset_month and reg.edss < ev.threshold_edss


class TestCut:
    def test_modes(self):
        # threshold 4.5 falls inside "4-5.5"
        assert worsening_cut(4.5, mode="max") == 6
        assert worsening_cut(4.5, mode="min") == 7
        assert worsening_cut(4.5, mode="representative") == 6
        assert worsening_cut(3.0) == 4
        assert worsening_cut(10.5) == 8
        with pytest.raises(InvalidConfig):
            worsening_cut(3.0, mode="mid")


class TestPredictedRegression:
    def test_identity(self):
        for start in range(4, 8):
            p = predicted_regression_probability(tm(np.eye(8)), 2, start, 10, RULE)
            assert p == 0.0

    @pytest.mark.parametrize("p,k", [(0.1, 5), (0.3, 1), (0.05, 12)])
    def test_geometric(self, p, k):
        P = [[1.0, 0.0], [p, 1 - p]]
        got = predicted_regression_probability(tm(P), 0, 1, k, RULE, TWO,
                                               representative=(2.0, 4.0))
        assert got == pytest.approx(1 - (1 - p) ** k, abs=1e-14)

    def test_errors(self):
        with pytest.raises(EmptyRegressionSet):
            predicted_regression_probability(tm(np.eye(8)), 0, 1, 3, RULE, threshold_edss=0.0)
        with pytest.raises(InvalidConfig):
            predicted_regression_probability(tm(np.eye(8)), 2, 2, 3, RULE)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(0, 4))
    def test_matches_enumeration(self, seed, n, horizon):
        r = np.random.default_rng(seed)
        P = random_stochastic(r, n)
        grouping = StateGrouping(tuple(float(x) for x in range(0, 2 * n, 2)))
        cut = int(r.integers(1, n))
        thr = float(2 * cut)
        start = int(r.integers(cut, n))
        got = predicted_regression_probability(tm(P), 0, start, horizon, RULE, grouping,
                                               threshold_edss=thr)
        assert abs(got - enumerate_first_passage(P, start, range(cut), horizon)) < 1e-12

    def test_monotone_in_horizon(self, calibrated):
        vals = [predicted_regression_probability(calibrated, LAB("2"), LAB("3"), h, RULE) for h in range(15)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    @pytest.mark.slow
    def test_matches_monte_carlo(self, calibrated):
        b, s = LAB("2"), LAB("3")
        exact = predicted_regression_probability(calibrated, b, s, 8, RULE)
        cut = worsening_cut(cdw_threshold(2.0, RULE))
        est, se = monte_carlo_first_passage(calibrated, s, range(cut), 8, 100_000, seed=7)
        assert abs(est - exact) < 3 * se


class TestPredictedCdw:
    def test_identity(self):
        assert predicted_cdw_probability(tm(np.eye(8)), 2, 12, RULE) == 0.0

    @pytest.mark.parametrize("p,h", [(0.2, 5), (0.5, 2), (0.1, 12)])
    def test_two_state_closed_form(self, p, h):
        rule = CdwRule(confirmation_months=3)
        P = [[1 - p, p], [0.0, 1.0]]
        got = predicted_cdw_probability(tm(P), 0, h, rule, TWO, 3, representative=(2.0, 4.0))
        # onset must leave room for the one confirming step inside the horizon
        assert got == pytest.approx(1 - (1 - p) ** (h - 1), abs=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(0, 4), st.integers(1, 2))
    def test_matches_enumeration(self, seed, n, horizon, c):
        r = np.random.default_rng(seed)
        P = random_stochastic(r, n)
        grouping = StateGrouping(tuple(float(x) for x in range(0, 2 * n, 2)))
        cut = int(r.integers(1, n))
        start = int(r.integers(0, n))
        rule = CdwRule(confirmation_months=3 * c)
        got = predicted_cdw_probability(tm(P), start, horizon, rule, grouping, 3,
                                        threshold_edss=float(2 * cut))
        assert abs(got - enumerate_cdw(P, start, cut, c, horizon)) < 1e-12

    def test_mass_conserved(self, rng):
        for _ in range(20):
            P = random_stochastic(rng, 8)
            _, totals = _cdw_propagation(P, int(rng.integers(8)), int(rng.integers(1, 8)), 2, 12)
            assert max(abs(t - 1) for t in totals) < 1e-12

    @pytest.mark.slow
    def test_matches_monte_carlo(self, calibrated):
        for label in ("1-1.5", "2", "3"):
            g = LAB(label)
            exact = predicted_cdw_probability(calibrated, g, 12, RULE)
            est, se = monte_carlo_cdw(calibrated, g, RULE, 12, 100_000, seed=11)
            assert abs(est - exact) < 3 * max(se, 1e-12), (label, est, exact)


class TestProportionTest:
    def test_first_row(self):
        t, p = proportion_test(0.173, 0, 43)
        assert t == pytest.approx(-2.9992, abs=1e-3) and p == pytest.approx(0.0045, abs=1e-3)

    def test_second_row(self):
        t, p = proportion_test(0.232, 0.2791 * 50, 50)
        assert t == pytest.approx(0.7890, abs=1e-3) and p == pytest.approx(0.4339, abs=1e-3)

    def test_null(self):
        t, p = proportion_test(0.3, 6, 20)
        assert abs(t) < 1e-12 and p == pytest.approx(1.0, abs=1e-12)

    def test_degenerate(self):
        for p0 in (0.0, 1.0):
            with pytest.raises(DegenerateExpected):
                proportion_test(p0, 1, 10)
        assert math.isnan(proportion_test(0.5, 1, 1)[1])

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.05, 0.95), st.integers(2, 200), st.floats(0, 1))
    def test_sign_and_reflection(self, p0, n, phat):
        t, p = proportion_test(p0, phat * n, n)
        assert np.sign(t) == np.sign(round(phat - p0, 15)) or abs(t) < 1e-9
        mirror = 2 * p0 - phat
        if 0 <= mirror <= 1:
            t2, p2 = proportion_test(p0, mirror * n, n)
            assert p2 == pytest.approx(p, abs=1e-9)


def _subject(sid, base, trigger, tail=None):
    xs = [base] + [trigger] * 12 if tail is None else [base] + [trigger] * 3 + [tail] * 9
    return [VisitRecord(sid, 3 * k, x) for k, x in enumerate(xs)]


class TestRegressionTable:
    def test_layout(self, calibrated):
        recs = []
        for i, (b, x) in enumerate([(0.0, 1.5), (1.0, 2.0), (1.5, 2.5), (2.0, 3.0), (2.5, 3.5),
                                    (3.0, 4.0), (4.0, 5.0)]):
            recs += _subject(f"a{i}", b, x)
            recs += _subject(f"b{i}", b, x, tail=b)
        table = regression_table(build_cohort(recs), calibrated, RULE)
        labels = [r.label for r in table.rows]
        assert labels == ["1-1.5", "2", "2.5", "3", "3.5", "4-5.5", "4-4.5"]
        sub = table.rows[-1]
        assert (sub.n, sub.regressed) == (2, 1)
        assert table.rows[5].n == 4
        for r in table.rows:
            assert 0 < r.expected < 1 and r.observed == 0.5
        assert table.aggregate_observed == 0.5

    def test_fixed_mode(self, calibrated):
        recs = _subject("a", 2.0, 3.0) + _subject("b", 2.0, 3.0, tail=2.0)
        t = regression_table(build_cohort(recs), calibrated, RULE, mode="fixed")
        want = predicted_regression_probability(calibrated, 2, 4, 10, RULE, threshold_edss=3.0)
        assert t.rows[0].expected == pytest.approx(want, abs=1e-15)
        with pytest.raises(InvalidConfig):
            regression_table(build_cohort(recs), calibrated, RULE, mode="sometimes")

    def test_no_events(self, calibrated):
        recs = [VisitRecord("a", 3 * k, 2.0) for k in range(13)]
        with pytest.raises(NoCdwEvents):
            regression_table(build_cohort(recs), calibrated, RULE)

    def test_figure_rows(self, calibrated):
        recs = _subject("a", 2.0, 3.0) + _subject("b", 2.0, 2.0)
        c = build_cohort(recs)
        rows = cdw_figure_data(c, calibrated, regression_table(c, calibrated, RULE), RULE)
        assert [r.label for r in rows] == list(DEFAULT_GROUPING.labels)
        two = rows[LAB("2")]
        assert (two.baseline_n, two.cdw_observed) == (2, 0.5)
        assert 0 < two.cdw_predicted < 1
        assert rows[LAB("3")].cdw_n == 1
