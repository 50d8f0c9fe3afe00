"""Estimators: statistics shortcuts, the three estimates, and their bounds."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import norm_ppf_oracle
from repstrat.demo import DEMO_ERROR_PAIRS
from repstrat.errors import ConsistencyError, CsvError, DomainError, StructureError
from repstrat.estimation import (
    AuditedItem,
    combined_ratio_estimate,
    difference_estimate,
    load_audited_csv,
    lower_confidence_bound,
    overpayment,
    parse_sample_summaries,
    separate_ratio_estimate,
    sparse_stats_for_frame,
    sparse_stratum_stats,
    stats_for_frame,
    stratum_sample_stats,
)
from repstrat.population import PopulationFrame

# Frozen expected values for the demo audit, confirmed by the brute-force
# recomputation in TestDemoEstimates below.
EXPECTED_POINTS = {"difference": 330_094, "separate_ratio": 329_833, "combined_ratio": 329_453}
EXPECTED_LCBS = {"difference": 214_037, "separate_ratio": 220_286, "combined_ratio": 215_323}


class TestOverpayment:
    def test_full_overpayment(self):
        assert overpayment(105.0, 0.0) == 105.0

    def test_exact_payment(self):
        assert overpayment(100.0, 100.0) == 0.0

    def test_underpayment_truncated(self):
        assert overpayment(100.0, 140.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            overpayment(-1.0, 0.0)


def _items(stratum, pairs, n, filler_y=None):
    """Audited items: the (d, y) pairs plus zero-d filler rows."""
    items = [
        AuditedItem(stratum, f"e{stratum}-{k}", float(y), float(y - d))
        for k, (d, y) in enumerate(pairs)
    ]
    filler_y = filler_y if filler_y is not None else [100.0] * (n - len(pairs))
    items += [
        AuditedItem(stratum, f"z{stratum}-{k}", float(y), float(y))
        for k, y in enumerate(filler_y)
    ]
    return items


class TestStratumSampleStats:
    def test_demo_stratum_one_mean(self):
        items = _items(1, DEMO_ERROR_PAIRS[1], 74)
        stats = stratum_sample_stats(items)
        assert stats.dbar == pytest.approx(314.0 / 74.0, abs=1e-12)
        assert stats.dbar == pytest.approx(4.2432, abs=1e-4)

    def test_demo_stratum_one_variance_vs_brute_force(self):
        items = _items(1, DEMO_ERROR_PAIRS[1], 74)
        stats = stratum_sample_stats(items)
        d = [it.d for it in items]
        dbar = math.fsum(d) / len(d)
        direct = math.fsum((v - dbar) ** 2 for v in d) / (len(d) - 1)
        assert stats.s2_d == pytest.approx(direct, rel=1e-12)
        assert stats.s2_d == pytest.approx(458.52, abs=0.01)

    def test_all_zero_d(self):
        items = _items(1, [], 5, filler_y=[10.0, 20.0, 30.0, 40.0, 50.0])
        stats = stratum_sample_stats(items)
        assert stats.dbar == 0.0 and stats.s2_d == 0.0 and stats.s_dy == 0.0
        assert stats.r == 0.0

    def test_mixed_strata_rejected(self):
        items = [AuditedItem(1, "a", 1.0, 0.0), AuditedItem(2, "b", 1.0, 0.0)]
        with pytest.raises(DomainError, match="span"):
            stratum_sample_stats(items)

    def test_too_few_items(self):
        with pytest.raises(DomainError):
            stratum_sample_stats([AuditedItem(1, "a", 1.0, 0.0)])

    def test_zero_book_mean_flags_ratio(self):
        items = [AuditedItem(1, "a", 0.0, 0.0), AuditedItem(1, "b", 0.0, 0.0)]
        stats = stratum_sample_stats(items)
        assert stats.r is None and not stats.ratio_defined


class TestSparseStats:
    def test_matches_full_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(2, 21))
            k = int(rng.integers(0, n + 1))
            y_err = np.round(rng.uniform(1, 500, size=k), 2)
            d_err = np.round(y_err * rng.uniform(0.01, 1.0, size=k), 2)
            d_err = np.minimum(d_err, y_err)
            filler = np.round(rng.uniform(1, 500, size=n - k), 2)
            items = _items(1, list(zip(d_err, y_err)), n, filler_y=list(filler))
            full = stratum_sample_stats(items)
            pairs = [(it.d, it.y) for it in items if it.d > 0]
            sparse = sparse_stratum_stats(pairs, full.n, full.ybar, full.s2_y)
            assert sparse == full  # every field, exactly

    def test_demo_stratum_one(self):
        pairs = [(float(d), float(y)) for d, y in DEMO_ERROR_PAIRS[1]]
        stats = sparse_stratum_stats(pairs, 74, 115.0, 680.0)
        assert stats.dbar == 314.0 / 74.0
        assert stats.s2_d == pytest.approx(458.52, abs=0.01)

    def test_demo_stratum_six(self):
        pairs = [(float(d), float(y)) for d, y in DEMO_ERROR_PAIRS[6]]
        stats = sparse_stratum_stats(pairs, 14, 5000.0, 250_000.0)
        assert stats.dbar == pytest.approx(11_193.0 / 14.0, rel=1e-12)
        assert stats.dbar == 799.5

    def test_no_pairs(self):
        stats = sparse_stratum_stats([], 20, 50.0, 25.0)
        assert stats.dbar == 0.0 and stats.s2_d == 0.0

    def test_inconsistent_book_sums_rejected(self):
        # Two pairs with book 100 leave no room under a tiny book variance.
        with pytest.raises(ConsistencyError):
            sparse_stratum_stats([(1.0, 100.0), (1.0, 100.0)], 3, 10.0, 1.0)

    def test_more_pairs_than_sample_rejected(self):
        with pytest.raises(ConsistencyError):
            sparse_stratum_stats([(1.0, 2.0)] * 4, 3, 10.0, 1.0)

    def test_d_above_y_rejected(self):
        with pytest.raises(DomainError):
            sparse_stratum_stats([(3.0, 2.0)], 5, 10.0, 1.0)


@st.composite
def stratum_items(draw, min_n=2, max_n=20):
    n = draw(st.integers(min_n, max_n))
    cents = st.integers(1, 50_000)
    y = [draw(cents) / 100 for _ in range(n)]
    # sparse overpayments: most items are clean
    d = []
    for yi in y:
        if draw(st.booleans()) and draw(st.booleans()):
            d.append(draw(st.integers(0, int(yi * 100))) / 100)
        else:
            d.append(0.0)
    return [
        AuditedItem(1, f"c{k}", yi, yi - di) for k, (yi, di) in enumerate(zip(y, d))
    ]


class TestShortcutEquivalences:
    @given(stratum_items())
    @settings(max_examples=200, deadline=None)
    def test_variance_shortcut(self, items):
        stats = stratum_sample_stats(items)
        d = [it.d for it in items]
        dbar = math.fsum(d) / len(d)
        direct = math.fsum((v - dbar) ** 2 for v in d) / (len(d) - 1)
        assert stats.s2_d == pytest.approx(direct, rel=1e-9, abs=1e-9)

    @given(stratum_items())
    @settings(max_examples=200, deadline=None)
    def test_separate_residual_expansion(self, items):
        stats = stratum_sample_stats(items)
        if stats.r is None or stats.r == 0.0:
            return
        resid_direct = math.fsum(
            (it.d - stats.r * it.y) ** 2 for it in items) / (stats.n - 1)
        expansion = stats.s2_d + stats.r ** 2 * stats.s2_y - 2 * stats.r * stats.s_dy
        assert expansion == pytest.approx(resid_direct, rel=1e-9, abs=1e-9)

    @given(stratum_items(), st.floats(0.001, 0.999))
    @settings(max_examples=200, deadline=None)
    def test_combined_residual_expansion(self, items, r_c):
        stats = stratum_sample_stats(items)
        direct = math.fsum((it.d - r_c * it.y) ** 2 for it in items) / (stats.n - 1)
        expansion = (
            stats.sum_d2 + r_c ** 2 * stats.sum_y2 - 2 * r_c * stats.sum_dy
        ) / (stats.n - 1)
        assert expansion == pytest.approx(direct, rel=1e-9, abs=1e-9)

    @given(stratum_items())
    @settings(max_examples=200, deadline=None)
    def test_cauchy_schwarz(self, items):
        stats = stratum_sample_stats(items)
        assert abs(stats.s_dy) <= math.sqrt(stats.s2_d * stats.s2_y) + 1e-9


class TestDemoEstimates:
    def test_points(self, frame, demo_stats):
        d = difference_estimate(frame, demo_stats, 0.05)
        rs = separate_ratio_estimate(frame, demo_stats, 0.05)
        rc = combined_ratio_estimate(frame, demo_stats, 0.05)
        assert abs(d.point - EXPECTED_POINTS["difference"]) <= 1.0
        assert abs(rs.point - EXPECTED_POINTS["separate_ratio"]) <= 1.0
        assert abs(rc.point - EXPECTED_POINTS["combined_ratio"]) <= 1.0

    def test_points_against_brute_force(self, frame, demo_stats):
        # Direct expansion by stratum counts, straight from the error pairs.
        point = math.fsum(
            s.count * math.fsum(d for d, _ in DEMO_ERROR_PAIRS[s.index]) / st.n
            for s, st in zip(frame.strata, demo_stats)
        )
        d = difference_estimate(frame, demo_stats, 0.05)
        assert d.point == pytest.approx(point, rel=1e-12)

    def test_combined_ratio_value(self, frame, demo_stats):
        rc = combined_ratio_estimate(frame, demo_stats, 0.05)
        assert rc.r_c == pytest.approx(0.0985355, abs=1e-6)

    def test_lower_bounds(self, frame, demo_stats):
        d = difference_estimate(frame, demo_stats, 0.05)
        rs = separate_ratio_estimate(frame, demo_stats, 0.05)
        rc = combined_ratio_estimate(frame, demo_stats, 0.05)
        for report, key in ((d, "difference"), (rs, "separate_ratio"), (rc, "combined_ratio")):
            expected = EXPECTED_LCBS[key]
            assert abs(report.lcb - expected) / expected <= 0.01

    def test_variance_against_brute_force(self, frame, demo_stats):
        # Per-stratum expansion recomputed from scratch for the difference form.
        variance = 0.0
        for s, st in zip(frame.strata, demo_stats):
            pairs = DEMO_ERROR_PAIRS[s.index]
            n = st.n
            sum_d = math.fsum(d for d, _ in pairs)
            sum_d2 = math.fsum(d * d for d, _ in pairs)
            s2d = (n * sum_d2 - sum_d ** 2) / (n * (n - 1))
            variance += s.count * (s.count - n) * s2d / n
        d = difference_estimate(frame, demo_stats, 0.05)
        assert d.variance == pytest.approx(variance, rel=1e-12)


class TestEstimatorEdges:
    def _frame2(self):
        return PopulationFrame.from_stats([(100, 50.0, 25.0), (200, 80.0, 100.0)])

    def test_all_zero_d(self):
        frame = self._frame2()
        stats = [
            stratum_sample_stats(_items(1, [], 5, [48.0, 50.0, 52.0, 49.0, 51.0])),
            stratum_sample_stats(_items(2, [], 4, [78.0, 80.0, 82.0, 80.0])),
        ]
        for fn in (difference_estimate, separate_ratio_estimate, combined_ratio_estimate):
            report = fn(frame, stats, 0.05)
            assert report.point == 0.0 and report.variance == 0.0 and report.lcb == 0.0

    def test_proportional_overpayments(self):
        # d = c * y for every item: both ratio estimators hit c * book total
        # with zero variance.
        frame = self._frame2()
        c = 0.25
        items1 = [AuditedItem(1, f"a{k}", y, y * (1 - c)) for k, y in enumerate((40.0, 48.0, 56.0))]
        items2 = [AuditedItem(2, f"b{k}", y, y * (1 - c)) for k, y in enumerate((72.0, 80.0, 88.0))]
        stats = [stratum_sample_stats(items1), stratum_sample_stats(items2)]
        book_total = sum(s.count * s.mean for s in frame.strata)
        rs = separate_ratio_estimate(frame, stats, 0.05)
        rc = combined_ratio_estimate(frame, stats, 0.05)
        assert rs.point == pytest.approx(c * book_total, rel=1e-12)
        assert rc.point == pytest.approx(c * book_total, rel=1e-12)
        assert rs.variance == pytest.approx(0.0, abs=1e-9)
        assert rc.variance == pytest.approx(0.0, abs=1e-9)
        assert rs.point == pytest.approx(rc.point, rel=1e-12)

    def test_all_three_coincide_at_census_proportional(self):
        # With a census sample the sample means equal the population means, so
        # the difference estimator joins the ratio estimators at c * book total.
        frame = PopulationFrame.from_stats([(3, 48.0, 32.0 / 3), (3, 80.0, 128.0 / 3)])
        c = 0.5
        items1 = [AuditedItem(1, f"a{k}", y, y * (1 - c)) for k, y in enumerate((44.0, 48.0, 52.0))]
        items2 = [AuditedItem(2, f"b{k}", y, y * (1 - c)) for k, y in enumerate((72.0, 80.0, 88.0))]
        stats = [stratum_sample_stats(items1), stratum_sample_stats(items2)]
        book_total = sum(s.count * s.mean for s in frame.strata)
        points = {
            fn(frame, stats, 0.05).point
            for fn in (difference_estimate, separate_ratio_estimate, combined_ratio_estimate)
        }
        for p in points:
            assert p == pytest.approx(c * book_total, rel=1e-12)

    def test_single_stratum_combined_equals_separate(self):
        frame = PopulationFrame.from_stats([(500, 75.0, 200.0)])
        items = _items(1, [(5.0, 50.0), (10.0, 90.0)], 10,
                       filler_y=[70.0, 75.0, 80.0, 60.0, 95.0, 85.0, 65.0, 72.0])
        stats = [stratum_sample_stats(items)]
        rs = separate_ratio_estimate(frame, stats, 0.05)
        rc = combined_ratio_estimate(frame, stats, 0.05)
        assert rc.point == pytest.approx(rs.point, rel=1e-12)
        assert rc.variance == pytest.approx(rs.variance, rel=1e-12)

    def test_ratio_undefined_stratum_named(self):
        frame = self._frame2()
        items1 = [AuditedItem(1, "a0", 0.0, 0.0), AuditedItem(1, "a1", 0.0, 0.0)]
        items2 = _items(2, [], 3, [78.0, 80.0, 82.0])
        stats = [stratum_sample_stats(items1), stratum_sample_stats(items2)]
        with pytest.raises(DomainError, match="stratum 1"):
            separate_ratio_estimate(frame, stats, 0.05)

    def test_sample_larger_than_population_rejected(self):
        frame = PopulationFrame.from_stats([(3, 50.0, 25.0)])
        stats = [stratum_sample_stats(_items(1, [], 5, [50.0] * 5))]
        with pytest.raises(StructureError, match="exceeds"):
            difference_estimate(frame, stats, 0.05)

    def test_stats_count_mismatch_rejected(self, frame, demo_stats):
        with pytest.raises(StructureError):
            difference_estimate(frame, demo_stats[:3], 0.05)


class TestLowerConfidenceBound:
    def test_zero_variance(self):
        assert lower_confidence_bound(100.0, 0.0, 0.05) == 100.0

    def test_negative_bound_not_clamped(self):
        expected = -norm_ppf_oracle(0.95) * 10.0
        assert lower_confidence_bound(0.0, 100.0, 0.05) == pytest.approx(expected, abs=1e-4)
        assert lower_confidence_bound(0.0, 100.0, 0.05) == pytest.approx(-16.44854, abs=1e-4)

    def test_lcb_below_point(self, frame, demo_stats):
        report = difference_estimate(frame, demo_stats, 0.05)
        assert report.lcb <= report.point

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            lower_confidence_bound(1.0, -1.0, 0.05)
        with pytest.raises(DomainError):
            lower_confidence_bound(1.0, 1.0, 0.0)


class TestAuditedCsv:
    CSV = (
        "stratum,claim_id,book_amount,audited_amount\n"
        "1,c1,100.00,90.00\n"
        "1,c2,50.00,50.00\n"
        "2,c3,200.00,0.00\n"
    )

    def test_roundtrip(self):
        items = load_audited_csv(io.StringIO(self.CSV))
        assert [it.d for it in items] == [10.0, 0.0, 200.0]

    def test_bad_header(self):
        with pytest.raises(CsvError):
            load_audited_csv(io.StringIO("a,b,c,d\n"))

    def test_bad_stratum(self):
        bad = "stratum,claim_id,book_amount,audited_amount\nx,c1,1.00,1.00\n"
        with pytest.raises(CsvError, match="line 2"):
            load_audited_csv(io.StringIO(bad))

    def test_duplicate_claim(self):
        bad = self.CSV + "1,c1,10.00,10.00\n"
        with pytest.raises(DomainError, match="duplicate"):
            load_audited_csv(io.StringIO(bad))

    def test_unknown_stratum_in_grouping(self, frame):
        items = [AuditedItem(9, "c1", 1.0, 0.0)]
        with pytest.raises(StructureError, match="unknown stratum 9"):
            stats_for_frame(items, frame)

    def test_sparse_stats_for_frame_matches_direct(self, frame, demo_stats, demo_dir):
        items = load_audited_csv(demo_dir / "audited.csv")
        summaries = parse_sample_summaries((demo_dir / "sample_stats.json").read_text())
        stats = sparse_stats_for_frame(items, summaries, frame)
        assert stats == demo_stats

    def test_missing_summary_rejected(self, frame):
        with pytest.raises(StructureError, match="missing"):
            sparse_stats_for_frame([], {1: (74, 115.0, 680.0)}, frame)
