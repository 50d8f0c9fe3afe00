"""Claim populations: CSV ingestion, dollar stratification, per-stratum statistics.

Claims are stratified by book dollar amount into class intervals. Zero-dollar
claims are excluded up front (they cannot be sampled) and claims at or above a
certainty threshold are set aside to be audited in full rather than sampled.
Per-stratum statistics use the population variance convention (divisor N_i).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from math import fsum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import CsvError, DomainError, StratificationGapError, StructureError

_AMOUNT_RE = re.compile(r"^\d+(\.\d{1,2})?$")


def _cents(amount: float) -> int:
    """Dollar amount as an integer cent count; all comparisons happen here."""
    return round(amount * 100)


def parse_amount(text: str, line_no: int | None = None) -> float:
    """Parse a dollar amount with at most two fraction digits.

    Negative values and thousands separators are rejected.
    """
    text = text.strip()
    if text.startswith("-"):
        raise DomainError(
            f"negative amount {text!r} is not allowed"
            + (f" (line {line_no})" if line_no else "")
        )
    if not _AMOUNT_RE.match(text):
        raise CsvError(
            f"malformed amount {text!r}" + (f" on line {line_no}" if line_no else ""),
            details={"line": line_no},
        )
    return float(text)


@dataclass(frozen=True)
class ClaimRecord:
    """One claim in the population: opaque id plus book dollar amount."""

    id: str
    amount: float

    def __post_init__(self):
        if self.amount < 0:
            raise DomainError(f"claim {self.id}: amount must be >= 0")


@dataclass(frozen=True)
class StratumBoundary:
    """Closed dollar interval [lower, upper]; compared at cent resolution."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower < 0:
            raise DomainError("stratum lower bound must be >= 0")
        if _cents(self.lower) > _cents(self.upper):
            raise DomainError(
                f"stratum bounds out of order: {self.lower} > {self.upper}"
            )

    def contains(self, amount: float) -> bool:
        c = _cents(amount)
        return _cents(self.lower) <= c <= _cents(self.upper)


@dataclass(frozen=True)
class Stratum:
    """One population stratum with its exact statistics.

    ``variance`` uses divisor ``count`` (population convention), not count - 1.
    ``mean`` and ``variance`` are NaN for an empty stratum.
    """

    index: int  # 1-based
    boundary: StratumBoundary | None
    claims: tuple[ClaimRecord, ...]
    count: int
    mean: float
    variance: float
    weight: float


@dataclass(frozen=True)
class PopulationFrame:
    """A stratified claim population.

    Certainty claims (amount >= certainty_threshold) are carried for separate
    reporting but take no part in allocation, sampling, or estimation.
    """

    strata: tuple[Stratum, ...]
    total_count: int
    mean: float
    certainty_threshold: float | None
    certainty_claims: tuple[ClaimRecord, ...]
    excluded_zero_count: int
    warnings: tuple[str, ...] = ()

    @property
    def stratum_count(self) -> int:
        return len(self.strata)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(s.weight for s in self.strata)

    @property
    def has_claims(self) -> bool:
        return all(len(s.claims) == s.count for s in self.strata)

    @property
    def certainty_total(self) -> float:
        return fsum(c.amount for c in self.certainty_claims)

    @classmethod
    def from_stats(
        cls,
        stats: Sequence[tuple[int, float, float]],
        boundaries: Sequence[StratumBoundary] | None = None,
    ) -> "PopulationFrame":
        """Build a stats-only frame from per-stratum (count, mean, variance).

        Useful for planning against published summaries; such frames cannot be
        sampled (they carry no claims).
        """
        if boundaries is not None and len(boundaries) != len(stats):
            raise StructureError("boundaries and stats must have equal length")
        total = sum(n for n, _, _ in stats)
        if total <= 0:
            raise DomainError("population must contain at least one claim")
        strata = []
        for i, (n, mean, var) in enumerate(stats):
            if n < 0 or (n > 0 and (var < 0 or mean < 0)):
                raise DomainError(f"stratum {i + 1}: invalid stats")
            strata.append(
                Stratum(
                    index=i + 1,
                    boundary=None if boundaries is None else boundaries[i],
                    claims=(),
                    count=n,
                    mean=mean if n else math.nan,
                    variance=var if n else math.nan,
                    weight=n / total,
                )
            )
        overall = fsum(s.count * s.mean for s in strata if s.count) / total
        return cls(
            strata=tuple(strata),
            total_count=total,
            mean=overall,
            certainty_threshold=None,
            certainty_claims=(),
            excluded_zero_count=0,
        )


def load_population(source: str | Path | IO[str]) -> list[ClaimRecord]:
    """Read claims from CSV with header ``claim_id,amount``.

    Raises CsvError with the line number for malformed rows, DomainError for
    negative amounts or duplicate ids.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return load_population(fh)
    header = source.readline()
    if header.strip().split(",") != ["claim_id", "amount"]:
        raise CsvError(f"expected header 'claim_id,amount', got {header.strip()!r}")
    claims: list[ClaimRecord] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(source, start=2):
        line = raw.rstrip("\r\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvError(
                f"expected 2 fields on line {line_no}, got {len(parts)}",
                details={"line": line_no},
            )
        cid, amount_text = parts[0].strip(), parts[1]
        if not cid:
            raise CsvError(f"empty claim_id on line {line_no}", details={"line": line_no})
        if cid in seen:
            raise DomainError(f"duplicate claim_id {cid!r} on line {line_no}")
        seen.add(cid)
        claims.append(ClaimRecord(id=cid, amount=parse_amount(amount_text, line_no)))
    return claims


def parse_strata_config(source: str | dict) -> tuple[list[StratumBoundary], float]:
    """Parse the strata config JSON: boundaries plus certainty threshold."""
    doc = json.loads(source) if isinstance(source, str) else source
    try:
        raw = doc["boundaries"]
        threshold = float(doc["certainty_threshold"])
    except (KeyError, TypeError) as exc:
        raise StructureError(f"strata config missing field: {exc}") from exc
    boundaries = [StratumBoundary(float(b["lower"]), float(b["upper"])) for b in raw]
    validate_boundaries(boundaries, threshold)
    return boundaries, threshold


def validate_boundaries(
    boundaries: Sequence[StratumBoundary], certainty_threshold: float
) -> None:
    """Check ordering, disjointness, and that the top stratum sits below the threshold."""
    if not boundaries:
        raise DomainError("at least one stratum boundary is required")
    for prev, cur in zip(boundaries, boundaries[1:]):
        if _cents(cur.lower) <= _cents(prev.upper):
            raise DomainError(
                f"strata overlap or are out of order: "
                f"[{prev.lower}, {prev.upper}] then [{cur.lower}, {cur.upper}]"
            )
    if _cents(certainty_threshold) <= _cents(boundaries[-1].upper):
        raise DomainError(
            "certainty_threshold must exceed the upper bound of the last stratum"
        )


def _stats(amounts: Sequence[float]) -> tuple[float, float]:
    """Two-pass mean and population variance (divisor n)."""
    n = len(amounts)
    if n == 0:
        return math.nan, math.nan
    mean = fsum(amounts) / n
    var = fsum((a - mean) ** 2 for a in amounts) / n
    return mean, var


def stratify(
    claims: Iterable[ClaimRecord],
    boundaries: Sequence[StratumBoundary],
    certainty_threshold: float,
) -> PopulationFrame:
    """Assign claims to strata and compute exact per-stratum statistics.

    Zero-dollar claims are excluded and counted; claims at or above
    ``certainty_threshold`` go to the certainty pool. A claim below the
    threshold that fits no stratum raises StratificationGapError listing
    every offending amount.
    """
    validate_boundaries(boundaries, certainty_threshold)
    bounds_cents = [(_cents(b.lower), _cents(b.upper)) for b in boundaries]
    threshold_cents = _cents(certainty_threshold)

    buckets: list[list[ClaimRecord]] = [[] for _ in boundaries]
    certainty: list[ClaimRecord] = []
    zero_count = 0
    gaps: list[float] = []
    seen_ids: set[str] = set()

    for claim in claims:
        if claim.id in seen_ids:
            raise DomainError(f"duplicate claim_id {claim.id!r}")
        seen_ids.add(claim.id)
        c = _cents(claim.amount)
        if c == 0:
            zero_count += 1
            continue
        if c >= threshold_cents:
            certainty.append(claim)
            continue
        lo, hi = 0, len(bounds_cents) - 1
        placed = False
        while lo <= hi:
            mid = (lo + hi) // 2
            bl, bu = bounds_cents[mid]
            if c < bl:
                hi = mid - 1
            elif c > bu:
                lo = mid + 1
            else:
                buckets[mid].append(claim)
                placed = True
                break
        if not placed:
            gaps.append(claim.amount)

    if gaps:
        shown = sorted(set(gaps))
        raise StratificationGapError(
            f"{len(gaps)} claim amount(s) fall between strata: "
            + ", ".join(f"{a:.2f}" for a in shown[:20])
            + ("..." if len(shown) > 20 else ""),
            details={"amounts": shown},
        )

    total = sum(len(b) for b in buckets)
    if total == 0:
        raise DomainError("no claims remain after exclusions; nothing to stratify")

    warnings = []
    strata = []
    for i, (bucket, boundary) in enumerate(zip(buckets, boundaries)):
        mean, var = _stats([c.amount for c in bucket])
        if not bucket:
            warnings.append(f"stratum {i + 1} is empty")
        strata.append(
            Stratum(
                index=i + 1,
                boundary=boundary,
                claims=tuple(bucket),
                count=len(bucket),
                mean=mean,
                variance=var,
                weight=len(bucket) / total,
            )
        )
    overall = fsum(s.count * s.mean for s in strata if s.count) / total
    return PopulationFrame(
        strata=tuple(strata),
        total_count=total,
        mean=overall,
        certainty_threshold=certainty_threshold,
        certainty_claims=tuple(certainty),
        excluded_zero_count=zero_count,
        warnings=tuple(warnings),
    )


def stratum_stats(frame: PopulationFrame) -> list[tuple[int, float, float, float]]:
    """Recompute (count, mean, variance, weight) per stratum from the claims.

    Idempotent: equals the values stored on the frame. Stats-only frames just
    echo their stored values.
    """
    out = []
    for s in frame.strata:
        if len(s.claims) != s.count:
            out.append((s.count, s.mean, s.variance, s.weight))
            continue
        mean, var = _stats([c.amount for c in s.claims])
        out.append((s.count, mean, var, s.count / frame.total_count))
    return out
