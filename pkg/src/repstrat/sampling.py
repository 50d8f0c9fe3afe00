"""Seeded within-stratum simple random sampling and representativeness checks.

Randomness comes from the Philox counter-based generator. Each stratum draw
runs on its own substream derived from (seed, purpose tag, stratum index), so
draws are replayable bit-for-bit and independent of how many strata exist or
in which order they are drawn. Selection itself is a partial Fisher-Yates
shuffle (exact SRSWOR) driven by masked-rejection bounded integers taken from
the generator's raw 64-bit output, which numpy guarantees stable across
versions for a fixed key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum
from typing import Sequence

import numpy as np

from .allocation import AllocationPlan
from .errors import DomainError, StructureError
from .population import ClaimRecord, PopulationFrame

# Substream purpose tags; part of the reproducibility contract.
DRAW_TAG = 0xD3A3
POPULATION_TAG = 0x9019
REPLICATION_TAG = 0x5EED

_MAX_SEED = 2 ** 64


def _validate_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < _MAX_SEED:
        raise DomainError(f"seed must be in [0, 2^64), got {seed}")
    return seed


class _WordStream:
    """Buffered raw 64-bit words from a Philox substream."""

    def __init__(self, entropy: Sequence[int], block: int = 512):
        self._bg = np.random.Philox(seed=np.random.SeedSequence(entropy=list(entropy)))
        self._block = block
        self._buf: list[int] = []
        self._pos = 0

    def next_word(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bg.random_raw(self._block).tolist()
            self._pos = 0
        w = self._buf[self._pos]
        self._pos += 1
        return w


def draw_stratum_indices(
    entropy: Sequence[int], population_size: int, sample_size: int
) -> np.ndarray:
    """Indices of an SRSWOR of size ``sample_size`` from range(population_size).

    Partial Fisher-Yates over a virtual identity array (displacements kept in
    a dict), with uniform bounded integers obtained by masked rejection so
    every size is sampled exactly uniformly.
    """
    N, n = population_size, sample_size
    if n < 0 or n > N:
        raise DomainError(f"sample size {n} must be in [0, {N}]")
    out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    stream = _WordStream(entropy, block=max(64, min(4096, 2 * n + 16)))
    next_word = stream.next_word
    mask = (1 << (N - 1).bit_length()) - 1 if N > 1 else 0
    displaced: dict[int, int] = {}
    get = displaced.get
    for j in range(n):
        bound = N - j
        while True:
            v = next_word() & mask
            if v < bound:
                break
        k = j + v
        out[j] = get(k, k)
        displaced[k] = get(j, j)
    return out


@dataclass(frozen=True)
class StratumSample:
    index: int
    claims: tuple[ClaimRecord, ...]
    ybar: float


@dataclass(frozen=True)
class SampleSet:
    """Realized stratified sample: claims per stratum plus book-amount means."""

    seed: int
    strata: tuple[StratumSample, ...]
    ybar_st: float

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(s.claims) for s in self.strata)


def draw_sample(frame: PopulationFrame, plan: AllocationPlan, seed: int) -> SampleSet:
    """Draw the plan's per-stratum SRSWOR from the frame, reproducibly.

    Identical (frame, plan, seed) gives an identical SampleSet. Each stratum
    uses substream (seed, DRAW_TAG, stratum index).
    """
    _validate_seed(seed)
    if len(plan.strata) != frame.stratum_count:
        raise StructureError(
            f"plan has {len(plan.strata)} strata, frame has {frame.stratum_count}"
        )
    if not frame.has_claims:
        raise StructureError("frame carries no claim records; cannot sample")
    samples = []
    for stratum, planned in zip(frame.strata, plan.strata):
        if planned.count != stratum.count:
            raise StructureError(
                f"stratum {stratum.index}: plan expects {planned.count} claims, "
                f"frame has {stratum.count}"
            )
        idx = draw_stratum_indices(
            [seed, DRAW_TAG, stratum.index], stratum.count, planned.n
        )
        chosen = tuple(stratum.claims[k] for k in idx)
        ybar = fsum(c.amount for c in chosen) / len(chosen)
        samples.append(StratumSample(index=stratum.index, claims=chosen, ybar=ybar))
    ybar_st = fsum(
        s.count * smp.ybar for s, smp in zip(frame.strata, samples)
    ) / frame.total_count
    return SampleSet(seed=seed, strata=tuple(samples), ybar_st=ybar_st)


@dataclass(frozen=True)
class StratumCheck:
    index: int
    ybar: float
    mean: float
    abs_diff: float
    g_i: float
    passed: bool


@dataclass(frozen=True)
class RepresentativenessReport:
    """Sample-vs-population book means, per stratum and overall.

    ``threshold`` (and hence ``overall_pass``) is None when no overall
    precision g was supplied.
    """

    ybar_st: float
    population_mean: float
    abs_diff: float
    threshold: float | None
    strata: tuple[StratumCheck, ...]
    overall_pass: bool | None


def representativeness_from_means(
    frame: PopulationFrame,
    ybar_i: Sequence[float],
    g_i: Sequence[float],
    g: float | None,
) -> RepresentativenessReport:
    """Build the representativeness report from per-stratum sample means."""
    if len(ybar_i) != frame.stratum_count or len(g_i) != frame.stratum_count:
        raise StructureError("ybar_i and g_i must have one entry per stratum")
    checks = []
    for s, ybar, gi in zip(frame.strata, ybar_i, g_i):
        diff = abs(ybar - s.mean)
        checks.append(
            StratumCheck(
                index=s.index, ybar=ybar, mean=s.mean,
                abs_diff=diff, g_i=gi, passed=diff <= gi,
            )
        )
    ybar_st = fsum(
        s.count * ybar for s, ybar in zip(frame.strata, ybar_i)
    ) / frame.total_count
    abs_diff = abs(ybar_st - frame.mean)
    overall = None if g is None else abs_diff <= g
    return RepresentativenessReport(
        ybar_st=ybar_st,
        population_mean=frame.mean,
        abs_diff=abs_diff,
        threshold=g,
        strata=tuple(checks),
        overall_pass=overall,
    )


def check_representativeness(
    frame: PopulationFrame,
    sample: SampleSet,
    g_i: Sequence[float],
    g: float | None,
) -> RepresentativenessReport:
    """Compare a drawn sample's book means with the population's."""
    if len(sample.strata) != frame.stratum_count:
        raise StructureError("sample and frame strata do not align")
    return representativeness_from_means(
        frame, [s.ybar for s in sample.strata], g_i, g
    )
