"""Synthetic populations and the repetition harness for coverage checks.

generate_population builds a claim population with known per-claim
overpayments, so the total overpayment is an exact, enumerable truth value.
run_coverage then redraws the planned stratified sample many times and
reports how often the per-stratum and overall book means landed within their
precision targets, and how often each estimator's lower confidence bound
stayed below the true total.

Book amounts come from a truncated lognormal by default (dollar data are
right-skewed); uniform and point families exist for degenerate cases. Given
an error, the overpaid fraction of book is 1 with a configurable atom
probability (payments that should not have been made at all), otherwise a
Beta draw. Replication r of stratum i runs on substream
(seed, REPLICATION_TAG, r, i), so replications are independent and could be
evaluated in any order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from math import fsum
from pathlib import Path
from typing import Sequence

import numpy as np

from .allocation import PrecisionSpec, allocate, normal_cdf, normal_quantile
from .errors import SpecError
from .estimation import (
    combined_ratio_estimate,
    difference_estimate,
    separate_ratio_estimate,
    stats_from_arrays,
)
from .population import ClaimRecord, PopulationFrame, StratumBoundary, stratify
from .sampling import POPULATION_TAG, REPLICATION_TAG, draw_stratum_indices

BOOK_FAMILIES = ("lognormal", "uniform", "point")


@dataclass(frozen=True)
class OverpaymentModel:
    """Fraction-of-book model for claims with an error: atom at 1 with
    probability full_prob, else Beta(beta_a, beta_b)."""

    full_prob: float = 0.1
    beta_a: float = 2.0
    beta_b: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.full_prob <= 1.0:
            raise SpecError(f"full_prob must be in [0, 1], got {self.full_prob}")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise SpecError("beta_a and beta_b must be > 0")


@dataclass(frozen=True)
class SyntheticStratumSpec:
    lower: float
    upper: float
    count: int
    book: dict
    error_rate: float
    overpayment: OverpaymentModel = field(default_factory=OverpaymentModel)

    def __post_init__(self):
        if self.count < 1:
            raise SpecError(f"stratum count must be >= 1, got {self.count}")
        if not 0.0 < self.lower <= self.upper:
            raise SpecError(
                f"need 0 < lower <= upper, got [{self.lower}, {self.upper}]"
            )
        if not 0.0 <= self.error_rate <= 1.0:
            raise SpecError(f"error_rate must be in [0, 1], got {self.error_rate}")
        family = self.book.get("family")
        if family not in BOOK_FAMILIES:
            raise SpecError(f"unknown book family {family!r}; expected {BOOK_FAMILIES}")


@dataclass(frozen=True)
class SyntheticPopulationSpec:
    strata: tuple[SyntheticStratumSpec, ...]
    seed: int
    certainty_threshold: float | None = None

    @classmethod
    def from_json(cls, source: str | dict) -> "SyntheticPopulationSpec":
        doc = json.loads(source) if isinstance(source, str) else source
        strata = []
        for raw in doc["strata"]:
            model = OverpaymentModel(**raw.get("overpayment", {}))
            strata.append(
                SyntheticStratumSpec(
                    lower=float(raw["lower"]),
                    upper=float(raw["upper"]),
                    count=int(raw["count"]),
                    book=dict(raw["book"]),
                    error_rate=float(raw["error_rate"]),
                    overpayment=model,
                )
            )
        return cls(
            strata=tuple(strata),
            seed=int(doc["seed"]),
            certainty_threshold=(
                None if doc.get("certainty_threshold") is None
                else float(doc["certainty_threshold"])
            ),
        )


@dataclass(frozen=True)
class PopulationTruth:
    op_total: float
    mu_i: tuple[float, ...]
    sigma2_i: tuple[float, ...]
    mu: float


@dataclass(frozen=True)
class SyntheticPopulation:
    """Generated frame plus aligned per-stratum book/overpayment arrays."""

    frame: PopulationFrame
    books: tuple[np.ndarray, ...]
    overpaid: tuple[np.ndarray, ...]
    truth: PopulationTruth


def _trunc_lognormal_moments(
    mu: float, sigma: float, a: float, b: float
) -> tuple[float, float]:
    la = (math.log(a) - mu) / sigma
    lb = (math.log(b) - mu) / sigma
    z = normal_cdf(lb) - normal_cdf(la)
    if z <= 0.0:
        return math.nan, math.nan
    m1 = math.exp(mu + sigma * sigma / 2.0) * (
        normal_cdf(lb - sigma) - normal_cdf(la - sigma)
    ) / z
    m2 = math.exp(2.0 * mu + 2.0 * sigma * sigma) * (
        normal_cdf(lb - 2.0 * sigma) - normal_cdf(la - 2.0 * sigma)
    ) / z
    return m1, m2 - m1 * m1


def lognormal_params_for(
    mean: float, var: float, lower: float, upper: float
) -> tuple[float, float]:
    """(mu, sigma) of the underlying normal such that the lognormal truncated
    to [lower, upper] has the requested mean and variance."""
    if not (0.0 < lower < mean < upper):
        raise SpecError(f"need lower < mean < upper with lower > 0")
    if not 0.0 < var <= ((upper - lower) / 2.0) ** 2:
        raise SpecError(f"target variance {var} is not attainable on the range")

    def solve_mu(sigma: float) -> float:
        lo = math.log(lower) - 6.0 * sigma - 5.0
        hi = math.log(upper) + 6.0 * sigma + 5.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            m1, _ = _trunc_lognormal_moments(mid, sigma, lower, upper)
            if math.isnan(m1) or m1 < mean:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def var_at(sigma: float) -> float:
        m = solve_mu(sigma)
        _, v = _trunc_lognormal_moments(m, sigma, lower, upper)
        return v

    # Bracket sigma where the achieved variance crosses the target.
    lo_s, hi_s = None, None
    prev_s, prev_v = None, None
    for k in range(1, 61):
        s = 0.005 * (1.18 ** k)
        v = var_at(s)
        if not math.isnan(v) and v >= var and prev_s is not None:
            lo_s, hi_s = prev_s, s
            break
        if not math.isnan(v):
            prev_s, prev_v = s, v
    if lo_s is None:
        raise SpecError(
            f"could not reach variance {var} on [{lower}, {upper}] with a "
            "truncated lognormal"
        )
    for _ in range(80):
        mid = 0.5 * (lo_s + hi_s)
        if var_at(mid) < var:
            lo_s = mid
        else:
            hi_s = mid
    sigma = 0.5 * (lo_s + hi_s)
    return solve_mu(sigma), sigma


def _uniforms(gen: np.random.Generator, n: int) -> np.ndarray:
    return gen.random(n)


def _draw_books(spec: SyntheticStratumSpec, gen: np.random.Generator) -> np.ndarray:
    family = spec.book["family"]
    n = spec.count
    if family == "point":
        value = float(spec.book["value"])
        if not spec.lower <= value <= spec.upper:
            raise SpecError(f"point value {value} outside [{spec.lower}, {spec.upper}]")
        books = np.full(n, value)
    elif family == "uniform":
        books = spec.lower + (spec.upper - spec.lower) * _uniforms(gen, n)
    else:  # lognormal
        mu = float(spec.book["mu"])
        sigma = float(spec.book["sigma"])
        if sigma <= 0:
            raise SpecError(f"sigma must be > 0, got {sigma}")
        p_lo = normal_cdf((math.log(spec.lower) - mu) / sigma)
        p_hi = normal_cdf((math.log(spec.upper) - mu) / sigma)
        if not p_hi > p_lo:
            raise SpecError(
                f"lognormal(mu={mu}, sigma={sigma}) has no mass on "
                f"[{spec.lower}, {spec.upper}]"
            )
        u = p_lo + (p_hi - p_lo) * _uniforms(gen, n)
        # Rounding can push u onto an endpoint; the cent clip below re-bounds y.
        u = np.clip(u, 1e-300, np.nextafter(1.0, 0.0))
        z = np.array([normal_quantile(float(p)) for p in u])
        books = np.exp(mu + sigma * z)
    cents = np.rint(books * 100.0)
    cents = np.clip(cents, math.ceil(spec.lower * 100.0), math.floor(spec.upper * 100.0))
    return cents / 100.0


def _draw_overpayments(
    spec: SyntheticStratumSpec, books: np.ndarray, gen: np.random.Generator
) -> np.ndarray:
    n = len(books)
    d = np.zeros(n)
    if spec.error_rate == 0.0:
        return d
    error = _uniforms(gen, n) < spec.error_rate
    k = int(error.sum())
    if k == 0:
        return d
    model = spec.overpayment
    frac = np.ones(k)
    partial = _uniforms(gen, k) >= model.full_prob
    m = int(partial.sum())
    if m:
        frac[partial] = gen.beta(model.beta_a, model.beta_b, size=m)
    amounts = np.rint(books[error] * frac * 100.0) / 100.0
    d[error] = np.minimum(np.maximum(amounts, 0.0), books[error])
    return d


def generate_population(spec: SyntheticPopulationSpec) -> SyntheticPopulation:
    """Deterministically generate the population and its exact truth values."""
    boundaries = [StratumBoundary(s.lower, s.upper) for s in spec.strata]
    threshold = spec.certainty_threshold
    if threshold is None:
        threshold = max(s.upper for s in spec.strata) + 1.0
    claims: list[ClaimRecord] = []
    books: list[np.ndarray] = []
    overpaid: list[np.ndarray] = []
    for i, stratum in enumerate(spec.strata, start=1):
        gen = np.random.Generator(
            np.random.Philox(seed=np.random.SeedSequence([spec.seed, POPULATION_TAG, i]))
        )
        y = _draw_books(stratum, gen)
        d = _draw_overpayments(stratum, y, gen)
        books.append(y)
        overpaid.append(d)
        claims.extend(
            ClaimRecord(id=f"m{i}-{j + 1:05d}", amount=float(y[j]))
            for j in range(stratum.count)
        )
    frame = stratify(claims, boundaries, threshold)
    for s, stratum in zip(frame.strata, spec.strata):
        if s.count != stratum.count:
            raise SpecError(
                f"stratum {s.index}: generated books escaped their range "
                f"({s.count} of {stratum.count} claims landed inside)"
            )
    mu_i = tuple(fsum(d.tolist()) / len(d) for d in overpaid)
    sigma2_i = tuple(
        fsum((v - m) ** 2 for v in d.tolist()) / len(d)
        for d, m in zip(overpaid, mu_i)
    )
    op_total = fsum(v for d in overpaid for v in d.tolist())
    mu = fsum(
        s.count * m for s, m in zip(frame.strata, mu_i)
    ) / frame.total_count
    return SyntheticPopulation(
        frame=frame,
        books=tuple(books),
        overpaid=tuple(overpaid),
        truth=PopulationTruth(op_total=op_total, mu_i=mu_i, sigma2_i=sigma2_i, mu=mu),
    )


@dataclass(frozen=True)
class EstimatorSummary:
    mean: float
    se: float
    lcb_coverage: float


@dataclass(frozen=True)
class CoverageReport:
    """Empirical frequencies over the replications, with exact truth attached."""

    replications: int
    per_stratum_coverage: tuple[float, ...]
    overall_coverage: float | None
    overall_g: float | None
    g_i: tuple[float, ...]
    plan_sizes: tuple[int, ...]
    op_total: float
    mu: float
    estimators: dict[str, EstimatorSummary]
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "replications": self.replications,
            "per_stratum_coverage": list(self.per_stratum_coverage),
            "overall_coverage": self.overall_coverage,
            "overall_g": self.overall_g,
            "g_i": list(self.g_i),
            "plan_sizes": list(self.plan_sizes),
            "truth": {"op_total": self.op_total, "mu": self.mu},
            "estimators": {
                name: {"mean": s.mean, "se": s.se, "lcb_coverage": s.lcb_coverage}
                for name, s in self.estimators.items()
            },
            "seeds": {"population": self.seed, "replication_tag": REPLICATION_TAG},
        }


def run_coverage(
    spec: SyntheticPopulationSpec,
    plan_spec: PrecisionSpec,
    replications: int,
    beta: float,
    overall_g: float | None = None,
    overall_g_fraction: float | None = None,
    per_rep_path: str | Path | None = None,
) -> CoverageReport:
    """Redraw the planned sample ``replications`` times and tally coverage.

    The overall precision g comes from ``overall_g``, else
    ``overall_g_fraction`` of the realized population mean, else the plan's
    resolved g; with none of those, overall coverage is not evaluated.
    """
    if replications < 1:
        raise SpecError(f"replications must be >= 1, got {replications}")
    if not 0.0 < beta < 1.0:
        raise SpecError(f"beta must be in (0, 1), got {beta}")
    pop = generate_population(spec)
    frame = pop.frame
    plan = allocate(plan_spec, frame)
    g_i = plan.g_i
    if overall_g is None and overall_g_fraction is not None:
        overall_g = overall_g_fraction * frame.mean
    if overall_g is None:
        overall_g = plan.g

    counts = [s.count for s in frame.strata]
    sizes = [p.n for p in plan.strata]
    means = [s.mean for s in frame.strata]
    book_lists = [b for b in pop.books]
    d_lists = [d for d in pop.overpaid]

    stratum_hits = [0] * frame.stratum_count
    overall_hits = 0
    points: dict[str, list[float]] = {k: [] for k in ("difference", "separate_ratio", "combined_ratio")}
    lcb_hits = {k: 0 for k in points}
    op = pop.truth.op_total

    sink = None
    if per_rep_path is not None:
        sink = open(per_rep_path, "w", encoding="utf-8")
        sink.write(
            "rep,point_difference,lcb_difference,point_separate_ratio,"
            "lcb_separate_ratio,point_combined_ratio,lcb_combined_ratio\n"
        )
    try:
        for rep in range(replications):
            stats = []
            for i in range(frame.stratum_count):
                idx = draw_stratum_indices(
                    [spec.seed, REPLICATION_TAG, rep, i + 1], counts[i], sizes[i]
                )
                y = book_lists[i][idx].tolist()
                d = d_lists[i][idx].tolist()
                st = stats_from_arrays(y, d)
                stats.append(st)
                if abs(st.ybar - means[i]) <= g_i[i]:
                    stratum_hits[i] += 1
            ybar_st = fsum(
                c * st.ybar for c, st in zip(counts, stats)
            ) / frame.total_count
            if overall_g is not None and abs(ybar_st - frame.mean) <= overall_g:
                overall_hits += 1
            reports = (
                difference_estimate(frame, stats, beta),
                separate_ratio_estimate(frame, stats, beta),
                combined_ratio_estimate(frame, stats, beta),
            )
            row = [str(rep)]
            for rpt in reports:
                points[rpt.estimator].append(rpt.point)
                if rpt.lcb <= op:
                    lcb_hits[rpt.estimator] += 1
                row.extend((repr(rpt.point), repr(rpt.lcb)))
            if sink is not None:
                sink.write(",".join(row) + "\n")
    finally:
        if sink is not None:
            sink.close()

    estimators = {}
    for name, vals in points.items():
        arr = np.asarray(vals)
        mean = float(arr.sum() / replications)
        se = float(arr.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
        estimators[name] = EstimatorSummary(
            mean=mean, se=se, lcb_coverage=lcb_hits[name] / replications
        )
    return CoverageReport(
        replications=replications,
        per_stratum_coverage=tuple(h / replications for h in stratum_hits),
        overall_coverage=(None if overall_g is None else overall_hits / replications),
        overall_g=overall_g,
        g_i=g_i,
        plan_sizes=tuple(sizes),
        op_total=op,
        mu=pop.truth.mu,
        estimators=estimators,
        seed=spec.seed,
    )
