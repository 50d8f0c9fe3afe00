"""Overpayment estimators: difference, separate ratio, combined ratio.

Each estimator produces a point estimate of total overpayment, an estimated
variance built from per-stratum sample statistics, and a one-sided lower
confidence bound  point - z_beta * sqrt(variance).

Overpayment per claim is d = max(0, book - audited); underpayments do not
offset. Because most audited claims have d = 0, every d-statistic here is
computed from the non-zero (d, y) pairs alone: together with the sample count,
the sample book mean, and the sample book variance of a stratum they determine
all three estimators, which is also what makes published summary data usable
without the full sample listing (see sparse_stratum_stats).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .allocation import normal_quantile
from .errors import ConsistencyError, CsvError, DomainError, StructureError
from .population import PopulationFrame, parse_amount

ESTIMATORS = ("difference", "separate_ratio", "combined_ratio")


def overpayment(y: float, x: float) -> float:
    """Overpayment on one claim: max(0, book - audited)."""
    if y < 0 or x < 0:
        raise DomainError(f"amounts must be >= 0, got y={y}, x={x}")
    return max(0.0, y - x)


@dataclass(frozen=True)
class AuditedItem:
    """One audited claim: stratum ordinal, id, book amount y, audited amount x."""

    stratum: int
    claim_id: str
    y: float
    x: float

    def __post_init__(self):
        if self.stratum < 1:
            raise DomainError(f"stratum ordinal must be >= 1, got {self.stratum}")
        if self.y < 0 or self.x < 0:
            raise DomainError(
                f"claim {self.claim_id}: amounts must be >= 0 (y={self.y}, x={self.x})"
            )

    @property
    def d(self) -> float:
        return max(0.0, self.y - self.x)


@dataclass(frozen=True)
class StratumSampleStats:
    """Sample statistics for one stratum, sufficient for every estimator.

    s2_y and s2_d use divisor n - 1; s_dy is the sample covariance of (d, y)
    and may be negative. r is d-mean over y-mean, None when the book mean is
    zero (ratio estimators then refuse the stratum). sum_d, sum_d2 and sum_dy
    run over the non-zero overpayments only, which equals the full-sample sums.
    """

    n: int
    ybar: float
    dbar: float
    s2_y: float
    s2_d: float
    s_dy: float
    r: float | None
    sum_d: float
    sum_d2: float
    sum_dy: float

    @property
    def ratio_defined(self) -> bool:
        return self.r is not None

    @property
    def sum_y2(self) -> float:
        return (self.n - 1) * self.s2_y + self.n * self.ybar * self.ybar


def _d_side(
    n: int, ybar: float, sum_d: float, sum_d2: float, sum_dy: float
) -> tuple[float, float, float, float | None]:
    dbar = sum_d / n
    s2_d = max(0.0, (n * sum_d2 - sum_d * sum_d) / (n * (n - 1)))
    s_dy = (sum_dy - ybar * sum_d) / (n - 1)
    r = dbar / ybar if ybar > 0 else None
    return dbar, s2_d, s_dy, r


def stats_from_arrays(y: Sequence[float], d: Sequence[float]) -> StratumSampleStats:
    """Statistics from full per-item book and overpayment vectors."""
    n = len(y)
    if n < 2:
        raise DomainError(f"need at least 2 items per stratum, got {n}")
    if len(d) != n:
        raise DomainError("y and d must have equal length")
    ybar = fsum(y) / n
    s2_y = fsum((yi - ybar) ** 2 for yi in y) / (n - 1)
    sum_d = fsum(di for di in d if di != 0.0)
    sum_d2 = fsum(di * di for di in d if di != 0.0)
    sum_dy = fsum(di * yi for di, yi in zip(d, y) if di != 0.0)
    dbar, s2_d, s_dy, r = _d_side(n, ybar, sum_d, sum_d2, sum_dy)
    return StratumSampleStats(
        n=n, ybar=ybar, dbar=dbar, s2_y=s2_y, s2_d=s2_d, s_dy=s_dy, r=r,
        sum_d=sum_d, sum_d2=sum_d2, sum_dy=sum_dy,
    )


def stratum_sample_stats(items: Sequence[AuditedItem]) -> StratumSampleStats:
    """Statistics for one stratum's audited items."""
    if len(items) < 2:
        raise DomainError(f"need at least 2 audited items per stratum, got {len(items)}")
    strata = {it.stratum for it in items}
    if len(strata) != 1:
        raise DomainError(f"items span several strata: {sorted(strata)}")
    return stats_from_arrays([it.y for it in items], [it.d for it in items])


def sparse_stratum_stats(
    nonzero_pairs: Sequence[tuple[float, float]],
    n: int,
    ybar: float,
    s2_y: float,
) -> StratumSampleStats:
    """Statistics from the non-zero (d, y) pairs plus book-amount summaries.

    Equivalent to stratum_sample_stats on the full item list with the zero-d
    items implied. The implied book sum of squares must leave room for the
    listed pairs, otherwise the inputs contradict each other.
    """
    if n < 2:
        raise DomainError(f"need sample size >= 2, got {n}")
    if len(nonzero_pairs) > n:
        raise ConsistencyError(
            f"{len(nonzero_pairs)} non-zero pairs exceed the sample size {n}"
        )
    if not ybar > 0:
        raise DomainError(f"book mean must be > 0, got {ybar}")
    if s2_y < 0:
        raise DomainError(f"book variance must be >= 0, got {s2_y}")
    for d, y in nonzero_pairs:
        if d < 0 or y < 0 or d > y:
            raise DomainError(f"invalid pair (d={d}, y={y}): need 0 <= d <= y")
    implied_sum_y2 = (n - 1) * s2_y + n * ybar * ybar
    pair_sum_y2 = fsum(y * y for _, y in nonzero_pairs)
    if pair_sum_y2 > implied_sum_y2 * (1 + 1e-9) + 1e-9:
        raise ConsistencyError(
            "book sums of squares of the non-zero pairs exceed what the "
            f"summary allows ({pair_sum_y2:.6g} > {implied_sum_y2:.6g})"
        )
    sum_d = fsum(d for d, _ in nonzero_pairs)
    sum_d2 = fsum(d * d for d, _ in nonzero_pairs)
    sum_dy = fsum(d * y for d, y in nonzero_pairs)
    dbar, s2_d, s_dy, r = _d_side(n, ybar, sum_d, sum_d2, sum_dy)
    return StratumSampleStats(
        n=n, ybar=ybar, dbar=dbar, s2_y=s2_y, s2_d=s2_d, s_dy=s_dy, r=r,
        sum_d=sum_d, sum_d2=sum_d2, sum_dy=sum_dy,
    )


@dataclass(frozen=True)
class StratumContribution:
    index: int
    N: int
    n: int
    dbar: float
    r: float | None
    resid_var: float
    point_part: float
    variance_part: float


@dataclass(frozen=True)
class EstimateReport:
    """One estimator's output: point, variance, lower confidence bound."""

    estimator: str
    point: float
    variance: float
    beta: float
    lcb: float
    r_c: float | None
    strata: tuple[StratumContribution, ...]

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance)


def lower_confidence_bound(point: float, variance: float, beta: float) -> float:
    """point - z_beta * sqrt(variance); deliberately not clamped at zero."""
    if variance < 0:
        raise DomainError(f"variance must be >= 0, got {variance}")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must be in (0, 1), got {beta}")
    return point - normal_quantile(1.0 - beta) * math.sqrt(variance)


def _check_alignment(
    frame: PopulationFrame, stats: Sequence[StratumSampleStats]
) -> None:
    if len(stats) != frame.stratum_count:
        raise StructureError(
            f"got stats for {len(stats)} strata, frame has {frame.stratum_count}"
        )
    for s, st in zip(frame.strata, stats):
        if st.n > s.count:
            raise StructureError(
                f"stratum {s.index}: sample size {st.n} exceeds population {s.count}"
            )


def difference_estimate(
    frame: PopulationFrame, stats: Sequence[StratumSampleStats], beta: float
) -> EstimateReport:
    """Expand per-stratum mean overpayments by stratum counts."""
    _check_alignment(frame, stats)
    contributions = []
    for s, st in zip(frame.strata, stats):
        point_part = s.count * st.dbar
        var_part = s.count * (s.count - st.n) * st.s2_d / st.n
        contributions.append(
            StratumContribution(
                index=s.index, N=s.count, n=st.n, dbar=st.dbar, r=None,
                resid_var=st.s2_d, point_part=point_part, variance_part=var_part,
            )
        )
    point = fsum(c.point_part for c in contributions)
    variance = fsum(c.variance_part for c in contributions)
    return EstimateReport(
        estimator="difference", point=point, variance=variance, beta=beta,
        lcb=lower_confidence_bound(point, variance, beta), r_c=None,
        strata=tuple(contributions),
    )


def separate_ratio_estimate(
    frame: PopulationFrame, stats: Sequence[StratumSampleStats], beta: float
) -> EstimateReport:
    """Apply each stratum's overpayment rate to its population book mean."""
    _check_alignment(frame, stats)
    contributions = []
    for s, st in zip(frame.strata, stats):
        if st.r is None:
            raise DomainError(
                f"stratum {s.index}: ratio undefined (sample book mean is 0)"
            )
        resid = max(0.0, st.s2_d + st.r * st.r * st.s2_y - 2.0 * st.r * st.s_dy)
        point_part = s.count * s.mean * st.r
        var_part = s.count * (s.count - st.n) * resid / st.n
        contributions.append(
            StratumContribution(
                index=s.index, N=s.count, n=st.n, dbar=st.dbar, r=st.r,
                resid_var=resid, point_part=point_part, variance_part=var_part,
            )
        )
    point = fsum(c.point_part for c in contributions)
    variance = fsum(c.variance_part for c in contributions)
    return EstimateReport(
        estimator="separate_ratio", point=point, variance=variance, beta=beta,
        lcb=lower_confidence_bound(point, variance, beta), r_c=None,
        strata=tuple(contributions),
    )


def combined_ratio_estimate(
    frame: PopulationFrame, stats: Sequence[StratumSampleStats], beta: float
) -> EstimateReport:
    """Apply the pooled overpayment rate to the population book total.

    Residual variances use the uncentered per-item residuals d - r_c * y,
    expanded into the d/y sums so the non-zero pairs plus the book summaries
    suffice.
    """
    _check_alignment(frame, stats)
    denom = fsum(s.count * st.ybar for s, st in zip(frame.strata, stats))
    if not denom > 0:
        raise DomainError("combined ratio undefined: total sample book amount is 0")
    r_c = fsum(s.count * st.dbar for s, st in zip(frame.strata, stats)) / denom
    book_total = fsum(s.count * s.mean for s in frame.strata)
    point = r_c * book_total
    contributions = []
    for s, st in zip(frame.strata, stats):
        resid = max(
            0.0,
            (st.sum_d2 + r_c * r_c * st.sum_y2 - 2.0 * r_c * st.sum_dy) / (st.n - 1),
        )
        var_part = s.count * (s.count - st.n) * resid / st.n
        contributions.append(
            StratumContribution(
                index=s.index, N=s.count, n=st.n, dbar=st.dbar, r=st.r,
                resid_var=resid, point_part=s.count * s.mean * r_c,
                variance_part=var_part,
            )
        )
    variance = fsum(c.variance_part for c in contributions)
    return EstimateReport(
        estimator="combined_ratio", point=point, variance=variance, beta=beta,
        lcb=lower_confidence_bound(point, variance, beta), r_c=r_c,
        strata=tuple(contributions),
    )


def load_audited_csv(source: str | Path | IO[str]) -> list[AuditedItem]:
    """Read audited claims from CSV with header
    ``stratum,claim_id,book_amount,audited_amount``."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_audited_csv(fh)
    header = source.readline()
    expected = ["stratum", "claim_id", "book_amount", "audited_amount"]
    if header.strip().split(",") != expected:
        raise CsvError(
            f"expected header {','.join(expected)!r}, got {header.strip()!r}"
        )
    items: list[AuditedItem] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(source, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvError(
                f"expected 4 fields on line {line_no}, got {len(parts)}",
                details={"line": line_no},
            )
        try:
            stratum = int(parts[0])
        except ValueError:
            raise CsvError(f"bad stratum ordinal {parts[0]!r} on line {line_no}",
                           details={"line": line_no}) from None
        cid = parts[1].strip()
        if not cid:
            raise CsvError(f"empty claim_id on line {line_no}", details={"line": line_no})
        if cid in seen:
            raise DomainError(f"duplicate claim_id {cid!r} on line {line_no}")
        seen.add(cid)
        items.append(
            AuditedItem(
                stratum=stratum,
                claim_id=cid,
                y=parse_amount(parts[2], line_no),
                x=parse_amount(parts[3], line_no),
            )
        )
    return items


def parse_sample_summaries(source: str | dict) -> dict[int, tuple[int, float, float]]:
    """Parse the sample-stats JSON document mapping stratum ordinal to
    (sample size, book mean, book variance)."""
    import json

    doc = json.loads(source) if isinstance(source, str) else source
    try:
        rows = doc["strata"]
    except (KeyError, TypeError):
        raise StructureError("sample stats must be an object with a 'strata' list") from None
    out: dict[int, tuple[int, float, float]] = {}
    for row in rows:
        try:
            idx = int(row["stratum"])
            entry = (int(row["n"]), float(row["ybar"]), float(row["s2_y"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"bad sample stats row {row!r}: {exc}") from None
        if idx in out:
            raise StructureError(f"duplicate sample stats for stratum {idx}")
        out[idx] = entry
    return out


def group_by_stratum(
    items: Iterable[AuditedItem], frame: PopulationFrame
) -> list[list[AuditedItem]]:
    """Group audited items by stratum ordinal, validating against the frame."""
    groups: list[list[AuditedItem]] = [[] for _ in frame.strata]
    for it in items:
        if not 1 <= it.stratum <= frame.stratum_count:
            raise StructureError(
                f"unknown stratum {it.stratum}: frame has strata 1..{frame.stratum_count}",
                details={"stratum": it.stratum},
            )
        groups[it.stratum - 1].append(it)
    return groups


def stats_for_frame(
    items: Iterable[AuditedItem], frame: PopulationFrame
) -> list[StratumSampleStats]:
    """Per-stratum statistics for a full audited sample covering every stratum."""
    groups = group_by_stratum(items, frame)
    stats = []
    for s, group in zip(frame.strata, groups):
        if len(group) < 2:
            raise DomainError(
                f"stratum {s.index}: need at least 2 audited items, got {len(group)}"
            )
        stats.append(stratum_sample_stats(group))
    _check_alignment(frame, stats)
    return stats


def sparse_stats_for_frame(
    items: Iterable[AuditedItem],
    summaries: dict[int, tuple[int, float, float]],
    frame: PopulationFrame,
) -> list[StratumSampleStats]:
    """Per-stratum statistics from error items plus (n, ybar, s2_y) summaries.

    ``items`` holds the audited claims with d > 0 (zero-d rows are tolerated
    and implied); ``summaries`` maps stratum ordinal to its full-sample count,
    book mean, and book variance.
    """
    missing = [s.index for s in frame.strata if s.index not in summaries]
    if missing:
        raise StructureError(f"missing sample summaries for strata {missing}")
    unknown = sorted(set(summaries) - {s.index for s in frame.strata})
    if unknown:
        raise StructureError(f"unknown stratum {unknown[0]} in sample summaries",
                             details={"stratum": unknown[0]})
    groups = group_by_stratum(items, frame)
    stats = []
    for s, group in zip(frame.strata, groups):
        n, ybar, s2_y = summaries[s.index]
        pairs = [(it.d, it.y) for it in group if it.d > 0]
        stats.append(sparse_stratum_stats(pairs, n, ybar, s2_y))
    _check_alignment(frame, stats)
    return stats
