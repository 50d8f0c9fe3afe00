"""Synthetic populations, coverage harness, and the overall-precision oracle."""

import math

import numpy as np
import pytest

from conftest import COVERAGE_REPLICATIONS
from repstrat.allocation import PrecisionSpec, allocate, overall_alpha
from repstrat.demo import DEMO_COUNTS, DEMO_MEANS, demo_synthetic_spec
from repstrat.errors import SpecError
from repstrat.montecarlo import (
    OverpaymentModel,
    SyntheticPopulationSpec,
    SyntheticStratumSpec,
    _trunc_lognormal_moments,
    generate_population,
    lognormal_params_for,
    run_coverage,
)


def _spec(strata, seed=11, threshold=None):
    return SyntheticPopulationSpec(
        strata=tuple(strata), seed=seed, certainty_threshold=threshold
    )


def _stratum(lower, upper, count, error_rate=0.0, book=None, **model):
    return SyntheticStratumSpec(
        lower=lower,
        upper=upper,
        count=count,
        book=book or {"family": "uniform"},
        error_rate=error_rate,
        overpayment=OverpaymentModel(**model) if model else OverpaymentModel(),
    )


class TestLognormalCalibration:
    @pytest.mark.parametrize(
        "mean,var,lower,upper",
        [(120.0, 703.0, 0.01, 199.0), (5061.0, 250_000.0, 4000.0, 6999.0),
         (620.0, 10_000.0, 500.0, 999.0)],
    )
    def test_moments_match(self, mean, var, lower, upper):
        mu, sigma = lognormal_params_for(mean, var, lower, upper)
        m, v = _trunc_lognormal_moments(mu, sigma, lower, upper)
        assert m == pytest.approx(mean, rel=1e-6)
        assert v == pytest.approx(var, rel=1e-4)

    def test_infeasible_variance(self):
        with pytest.raises(SpecError):
            lognormal_params_for(50.0, 1e9, 1.0, 100.0)

    def test_bad_range(self):
        with pytest.raises(SpecError):
            lognormal_params_for(500.0, 10.0, 1.0, 100.0)


class TestGeneratePopulation:
    def test_deterministic(self):
        spec = _spec([_stratum(10, 99, 50, error_rate=0.5)])
        a = generate_population(spec)
        b = generate_population(spec)
        assert all((x == y).all() for x, y in zip(a.books, b.books))
        assert all((x == y).all() for x, y in zip(a.overpaid, b.overpaid))
        assert a.truth == b.truth

    def test_zero_error_rate(self):
        spec = _spec([_stratum(10, 99, 40), _stratum(100, 199, 30)])
        pop = generate_population(spec)
        assert pop.truth.op_total == 0.0
        assert pop.truth.mu_i == (0.0, 0.0)
        assert pop.truth.mu == 0.0

    def test_full_overpayment(self):
        spec = _spec([_stratum(10, 99, 40, error_rate=1.0, full_prob=1.0)])
        pop = generate_population(spec)
        assert (pop.overpaid[0] == pop.books[0]).all()
        assert pop.truth.op_total == pytest.approx(
            math.fsum(pop.books[0].tolist()), rel=1e-12)

    def test_truth_matches_exhaustive_enumeration(self):
        spec = _spec(
            [_stratum(10, 99, 200, error_rate=0.2),
             _stratum(100, 499, 100, error_rate=0.1,
                      book={"family": "lognormal",
                            "mu": math.log(200.0), "sigma": 0.3})],
            seed=5,
        )
        pop = generate_population(spec)
        for i, (d, n) in enumerate(zip(pop.overpaid, (200, 100))):
            mu = math.fsum(d.tolist()) / n
            assert pop.truth.mu_i[i] == pytest.approx(mu, rel=1e-14, abs=1e-14)
            sigma2 = math.fsum((v - mu) ** 2 for v in d.tolist()) / n
            assert pop.truth.sigma2_i[i] == pytest.approx(sigma2, rel=1e-12, abs=1e-12)
        assert pop.truth.op_total == pytest.approx(
            math.fsum(v for d in pop.overpaid for v in d.tolist()), rel=1e-14)
        weighted = math.fsum(
            s.count * m for s, m in zip(pop.frame.strata, pop.truth.mu_i)
        ) / pop.frame.total_count
        assert pop.truth.mu == pytest.approx(weighted, rel=1e-14)

    def test_books_within_bounds_and_counts(self):
        doc = demo_synthetic_spec(seed=77, error_rate=0.03)
        pop = generate_population(SyntheticPopulationSpec.from_json(doc))
        assert tuple(s.count for s in pop.frame.strata) == DEMO_COUNTS
        for s in pop.frame.strata:
            for c in s.claims:
                assert s.boundary.contains(c.amount)
        assert (pop.overpaid[0] <= pop.books[0]).all()
        assert (pop.overpaid[0] >= 0).all()

    def test_demo_shaped_spec_calibration(self):
        doc = demo_synthetic_spec(seed=20260809, error_rate=0.05)
        pop = generate_population(SyntheticPopulationSpec.from_json(doc))
        for s, mean in zip(pop.frame.strata, DEMO_MEANS):
            assert abs(s.mean - mean) / mean < 0.02

    def test_point_family(self):
        spec = _spec([_stratum(10, 99, 5, book={"family": "point", "value": 50.0})])
        pop = generate_population(spec)
        assert (pop.books[0] == 50.0).all()
        assert pop.frame.strata[0].variance == 0.0

    def test_invalid_family(self):
        with pytest.raises(SpecError, match="book family"):
            _stratum(10, 99, 5, book={"family": "cauchy"})


class TestRunCoverage:
    def test_census_plan_is_exact(self):
        spec = _spec(
            [_stratum(10, 99, 12, error_rate=0.5), _stratum(100, 199, 9, error_rate=0.5)],
            seed=21,
        )
        plan_spec = PrecisionSpec(mode="explicit", g_i=(0.01, 0.01), gamma=0.05)
        report = run_coverage(spec, plan_spec, replications=60, beta=0.05, overall_g=1.0)
        assert report.plan_sizes == (12, 9)
        assert report.per_stratum_coverage == (1.0, 1.0)
        assert report.overall_coverage == 1.0
        for summary in report.estimators.values():
            assert summary.mean == pytest.approx(report.op_total, rel=1e-12)
            assert summary.se == pytest.approx(0.0, abs=1e-9)
            assert summary.lcb_coverage == 1.0

    def test_reproducible(self):
        spec = _spec([_stratum(10, 99, 40, error_rate=0.3)], seed=9)
        plan_spec = PrecisionSpec(mode="explicit", g_i=(5.0,), gamma=0.05)
        a = run_coverage(spec, plan_spec, replications=200, beta=0.05)
        b = run_coverage(spec, plan_spec, replications=200, beta=0.05)
        assert a.to_json_dict() == b.to_json_dict()

    def test_per_rep_csv(self, tmp_path):
        spec = _spec([_stratum(10, 99, 40, error_rate=0.3)], seed=9)
        plan_spec = PrecisionSpec(mode="explicit", g_i=(5.0,), gamma=0.05)
        path = tmp_path / "reps.csv"
        run_coverage(spec, plan_spec, replications=25, beta=0.05, per_rep_path=path)
        lines = path.read_text().splitlines()
        assert len(lines) == 26
        assert lines[0].startswith("rep,point_difference")

    def test_overall_requires_some_g(self):
        spec = _spec([_stratum(10, 99, 40, error_rate=0.3)], seed=9)
        plan_spec = PrecisionSpec(mode="explicit", g_i=(5.0,), gamma=0.05)
        report = run_coverage(spec, plan_spec, replications=10, beta=0.05)
        assert report.overall_coverage is None and report.overall_g is None

    def test_replication_validation(self):
        spec = _spec([_stratum(10, 99, 40)])
        with pytest.raises(SpecError):
            run_coverage(spec, PrecisionSpec(mode="caseA", C=1.0, gamma=0.05),
                         replications=0, beta=0.05)


class TestCoverageRun:
    """Statistical claims evaluated on the shared 10,000-replication run."""

    def test_per_stratum_coverage(self, coverage_run):
        report, _ = coverage_run
        assert report.replications == COVERAGE_REPLICATIONS
        for c in report.per_stratum_coverage:
            assert c >= 0.93

    def test_overall_coverage_at_least_worst_stratum(self, coverage_run):
        report, _ = coverage_run
        mc_err = 3 * math.sqrt(0.95 * 0.05 / report.replications)
        assert report.overall_coverage >= min(report.per_stratum_coverage) - mc_err

    def test_difference_estimator_unbiased(self, coverage_run):
        report, _ = coverage_run
        diff = report.estimators["difference"]
        assert abs(diff.mean - report.op_total) <= 3 * diff.se

    def test_lcb_coverage(self, coverage_run):
        report, _ = coverage_run
        assert report.estimators["difference"].lcb_coverage >= 0.93
        # Ratio-estimator bounds are reported but have no pass threshold;
        # they should at least be sane frequencies.
        for summary in report.estimators.values():
            assert 0.0 <= summary.lcb_coverage <= 1.0


class TestPredictedAlphaOracle:
    def test_overall_alpha_against_independent_simulation(self, frame, demo_plan_spec_obj):
        """Check the fpc-aware overall tail probability against a plain-numpy
        simulation of stratified SRSWOR (random-key selection, independent of
        the package's own sampling code)."""
        plan = allocate(demo_plan_spec_obj, frame)
        sizes = [p.n for p in plan.strata]
        reps = 100_000
        rng = np.random.default_rng(987654321)
        ybar_st = np.zeros(reps)
        for s, n in zip(frame.strata, sizes):
            amounts = np.array([c.amount for c in s.claims])
            chunk = max(1, min(reps, 40_000_000 // max(1, s.count * 8)))
            means = np.empty(reps)
            for start in range(0, reps, chunk):
                stop = min(reps, start + chunk)
                keys = rng.random((stop - start, s.count))
                idx = np.argpartition(keys, n - 1, axis=1)[:, :n]
                means[start:stop] = amounts[idx].mean(axis=1)
            ybar_st += (s.count / frame.total_count) * means

        diffs = np.abs(ybar_st - frame.mean)
        # Tight overall precision: misses should be (nearly) impossible.
        g_wide = 0.05 * frame.mean
        predicted_wide = overall_alpha(frame, sizes, g_wide, use_fpc=True)
        assert predicted_wide < 1e-4
        assert (diffs > g_wide).mean() <= 3e-5

        # A sharper threshold makes the comparison informative.
        g_tight = 0.015 * frame.mean
        predicted = overall_alpha(frame, sizes, g_tight, use_fpc=True)
        empirical = float((diffs > g_tight).mean())
        se = math.sqrt(max(predicted * (1 - predicted), 1e-12) / reps)
        assert abs(empirical - predicted) <= 4 * se + 0.01
