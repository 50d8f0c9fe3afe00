"""Shared fixtures: the demo dataset, oracle helpers, and the big coverage run."""

from __future__ import annotations

import time

import mpmath
import numpy as np
import pytest

from repstrat.allocation import parse_plan_spec
from repstrat.demo import (
    DEMO_ERROR_PAIRS,
    DEMO_SAMPLE_SUMMARIES,
    demo_claims,
    demo_frame,
    demo_synthetic_spec,
    write_demo_files,
)
from repstrat.estimation import sparse_stratum_stats
from repstrat.montecarlo import SyntheticPopulationSpec, run_coverage

mpmath.mp.dps = 40

COVERAGE_SEED = 20260809
COVERAGE_REPLICATIONS = 10_000


def norm_ppf_oracle(p: float) -> float:
    """High-precision inverse normal CDF through mpmath's inverse erf."""
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


def chi2_sf_oracle(x: float, k: int) -> float:
    """Chi-square survival function via the regularized incomplete gamma."""
    return float(mpmath.gammainc(k / 2, x / 2, mpmath.inf, regularized=True))


@pytest.fixture(scope="session")
def frame():
    return demo_frame()


@pytest.fixture(scope="session")
def demo_plan_spec_obj():
    return parse_plan_spec({"mode": "caseB", "f": 0.05, "gamma": 0.05, "use_fpc": True})


@pytest.fixture(scope="session")
def demo_stats():
    """Sparse per-stratum statistics for the demo audited sample."""
    stats = []
    for i in sorted(DEMO_SAMPLE_SUMMARIES):
        n, ybar, s2y = DEMO_SAMPLE_SUMMARIES[i]
        pairs = [(float(d), float(y)) for d, y in DEMO_ERROR_PAIRS[i]]
        stats.append(sparse_stratum_stats(pairs, n, float(ybar), float(s2y)))
    return stats


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    """The demo dataset written to disk once per session."""
    out = tmp_path_factory.mktemp("demo")
    write_demo_files(out)
    return out


@pytest.fixture(scope="session")
def coverage_run():
    """The 10,000-replication coverage run on the demo-shaped synthetic
    population; shared across the statistical tests. Returns (report, seconds)."""
    spec = SyntheticPopulationSpec.from_json(
        demo_synthetic_spec(seed=COVERAGE_SEED, error_rate=0.05)
    )
    plan_spec = parse_plan_spec({"mode": "caseB", "f": 0.05, "gamma": 0.05, "use_fpc": True})
    t0 = time.perf_counter()
    report = run_coverage(
        spec, plan_spec,
        replications=COVERAGE_REPLICATIONS,
        beta=0.05,
        overall_g_fraction=0.05,
    )
    elapsed = time.perf_counter() - t0
    return report, elapsed


def random_stats_frame(rng: np.random.Generator, max_strata: int = 6):
    """A random stats-only frame for allocation property tests.

    Counts are large enough that the plans stay clear of the census cap.
    """
    from repstrat.population import PopulationFrame

    L = int(rng.integers(2, max_strata + 1))
    counts = rng.integers(5_000, 200_000, size=L)
    means = rng.uniform(50.0, 5_000.0, size=L)
    variances = rng.uniform(10.0, 1e5, size=L)
    return PopulationFrame.from_stats(
        [(int(n), float(m), float(v)) for n, m, v in zip(counts, means, variances)]
    )
