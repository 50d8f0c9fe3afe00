"""Bundled demo dataset: a six-stratum claim population with known statistics.

The population is synthesized so that every stratum hits its target count,
mean, and population variance exactly (integer dollar amounts, so the float
statistics are exact too). The companion audited-sample fixture carries the
overpaid claims per stratum plus the sample book summaries, in the sparse
form the estimators accept.

Run ``python -m repstrat.demo --out-dir DIR`` to write the fixture files.
"""

from __future__ import annotations

import argparse
import json
from functools import lru_cache
from math import isqrt
from pathlib import Path

from .errors import DomainError
from .population import ClaimRecord, PopulationFrame, StratumBoundary, stratify

DEMO_BOUNDS = ((0.01, 199), (200, 499), (500, 999), (1000, 1999), (2000, 3999), (4000, 6999))
DEMO_THRESHOLD = 7000.0
DEMO_COUNTS = (4000, 2200, 1000, 500, 200, 100)
DEMO_MEANS = (120, 313, 620, 1148, 2374, 5061)
DEMO_VARS = (703, 3500, 10000, 30000, 110000, 250000)

# Overpaid claims found in the demo audit, as (overpayment d, book amount y)
# per stratum; every other sampled claim was paid correctly.
DEMO_ERROR_PAIRS = {
    1: ((9, 44), (105, 105), (57, 57), (143, 143)),
    2: ((8, 288), (422, 422), (115, 380), (93, 455), (495, 495), (359, 359)),
    3: ((530, 530), (76, 516), (12, 736), (124, 540), (54, 711), (96, 674)),
    4: ((804, 1804), (628, 1000), (718, 1000), (475, 1000), (500, 1500), (800, 1500)),
    5: ((1120, 2520), (2607, 2607), (389, 3456), (1990, 3265), (3900, 3900),
        (100, 3900), (1550, 3000), (500, 3000)),
    6: ((1220, 6102), (1750, 6999), (3, 5232), (6900, 6900), (100, 6671), (1220, 6102)),
}

# Audited-sample book summaries per stratum: (sample size, book mean, book
# variance with divisor n - 1).
DEMO_SAMPLE_SUMMARIES = {
    1: (74, 115, 680),
    2: (54, 300, 3400),
    3: (39, 650, 10500),
    4: (33, 1200, 30300),
    5: (27, 2400, 111000),
    6: (14, 5000, 250000),
}

DEMO_PLAN_SIZES = (74, 54, 39, 33, 27, 14)
DEMO_PLAN_TOTAL = 241


def four_squares(m: int) -> list[int]:
    """Positive integers (at most four) whose squares sum to m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return []

    def three(m: int) -> list[int] | None:
        for a in range(isqrt(m), 0, -1):
            r = m - a * a
            if r == 0:
                return [a]
            for b in range(isqrt(r), 0, -1):
                r2 = r - b * b
                if r2 == 0:
                    return [a, b]
                c = isqrt(r2)
                if c * c == r2:
                    return [a, b, c]
        return None

    t = three(m)
    if t is not None:
        return t
    for a in range(isqrt(m), 0, -1):
        t = three(m - a * a)
        if t is not None:
            return [a] + t
    raise AssertionError(f"no four-square decomposition found for {m}")


def integer_values_with_moments(
    count: int, total: int, total_sq: int, lo: int, hi: int
) -> list[int]:
    """``count`` integers in [lo, hi] with exact sum and sum of squares.

    Starts from the tightest-possible configuration (everything at the mean,
    rounded) and spreads value symmetrically in sum-preserving moves until the
    target sum of squares is met. Raises DomainError when no integer solution
    exists (parity, budget, or slot limits).
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    q, r = divmod(total, count)
    if q < lo or (q + (1 if r else 0)) > hi:
        raise DomainError(f"mean {total}/{count} does not fit in [{lo}, {hi}]")
    values = [q + 1] * r + [q] * (count - r)
    base_sq = r * (q + 1) ** 2 + (count - r) * q * q
    delta = total_sq - base_sq
    if delta < 0:
        raise DomainError(
            f"target sum of squares {total_sq} is below the minimum {base_sq}"
        )
    if delta % 2:
        raise DomainError("no integer solution: sum-of-squares parity mismatch")

    # Free members per starting value; ops consume fresh members only.
    groups = []  # [value, next_free_index, free_count]
    if count - r:
        groups.append([q, r, count - r])
    if r:
        groups.append([q + 1, 0, r])
    groups.sort(key=lambda g: -g[2])

    def apply_pair(group, t):
        v, i, _ = group
        values[i] = v + t
        values[i + 1] = v - t
        group[1] += 2
        group[2] -= 2

    def apply_boost(group, t, m, up):
        # One member moved by m*t in one direction, m members by t the other.
        v, i, _ = group
        values[i] = v + m * t if up else v - m * t
        for j in range(1, m + 1):
            values[i + j] = (v - t) if up else (v + t)
        group[1] += m + 1
        group[2] -= m + 1

    while delta > 0:
        best = None  # (gain, kind, group, params)
        for group in groups:
            v, _, free = group
            t_up, t_dn = hi - v, v - lo
            t_pair = min(t_up, t_dn)
            if free >= 2 and t_pair >= 1:
                gain = 2 * t_pair * t_pair
                if gain <= delta and (best is None or gain > best[0]):
                    best = (gain, "pair", group, t_pair)
            # Asymmetric spread for skewed ranges: m small steps one way,
            # one big step of m * t the other way.
            for t, up in ((t_dn, True), (t_up, False)):
                if t < 1:
                    continue
                m = min((t_up if up else t_dn) // t, free - 1)
                if m >= 2:
                    gain = t * t * (m * m + m)
                    while m >= 2 and gain > delta:
                        m -= 1
                        gain = t * t * (m * m + m)
                    if m >= 2 and gain <= delta and (best is None or gain > best[0]):
                        best = (gain, "boost", group, (t, m, up))
        if best is not None and best[0] > 0:
            gain, kind, group, params = best
            if kind == "pair":
                apply_pair(group, params)
            else:
                apply_boost(group, *params)
            delta -= gain
            continue
        # Finisher: decompose what is left into at most four pairs.
        finished = False
        for group in groups:
            v, _, free = group
            t_pair = min(hi - v, v - lo)
            if t_pair < 1:
                continue
            half = delta // 2
            if half > t_pair * t_pair:
                continue
            squares = four_squares(half)
            if 2 * len(squares) <= group[2]:
                for t in squares:
                    apply_pair(group, t)
                delta = 0
                finished = True
                break
        if not finished:
            raise DomainError(
                "no integer solution: remaining spread budget does not fit "
                "the available slots and bounds"
            )

    assert sum(values) == total and sum(v * v for v in values) == total_sq
    assert all(lo <= v <= hi for v in values)
    return values


@lru_cache(maxsize=1)
def demo_boundaries() -> tuple[StratumBoundary, ...]:
    return tuple(StratumBoundary(float(lo), float(hi)) for lo, hi in DEMO_BOUNDS)


@lru_cache(maxsize=1)
def demo_claims() -> tuple[ClaimRecord, ...]:
    """The demo population: integer dollar amounts hitting the target stats exactly."""
    claims = []
    for i, (count, mean, var) in enumerate(zip(DEMO_COUNTS, DEMO_MEANS, DEMO_VARS)):
        lo, hi = DEMO_BOUNDS[i]
        lo = max(1, int(lo))  # zero-dollar claims are excluded, stay above 0
        amounts = integer_values_with_moments(
            count, count * mean, count * (var + mean * mean), lo, int(hi)
        )
        for j, amount in enumerate(amounts, start=1):
            claims.append(ClaimRecord(id=f"s{i + 1}-{j:04d}", amount=float(amount)))
    return tuple(claims)


def demo_frame() -> PopulationFrame:
    return stratify(demo_claims(), demo_boundaries(), DEMO_THRESHOLD)


def demo_population_csv() -> str:
    lines = ["claim_id,amount"]
    lines.extend(f"{c.id},{c.amount:.2f}" for c in demo_claims())
    return "\n".join(lines) + "\n"


def demo_strata_config() -> dict:
    return {
        "boundaries": [{"lower": float(lo), "upper": float(hi)} for lo, hi in DEMO_BOUNDS],
        "certainty_threshold": DEMO_THRESHOLD,
    }


def demo_plan_spec() -> dict:
    return {"mode": "caseB", "f": 0.05, "gamma": 0.05, "use_fpc": True}


def demo_audited_csv() -> str:
    """Audited error rows (d > 0) in the standard audited-sample CSV form."""
    lines = ["stratum,claim_id,book_amount,audited_amount"]
    for stratum, pairs in DEMO_ERROR_PAIRS.items():
        for k, (d, y) in enumerate(pairs, start=1):
            lines.append(f"{stratum},e{stratum}-{k},{y:.2f},{y - d:.2f}")
    return "\n".join(lines) + "\n"


def demo_sample_summaries() -> dict:
    return {
        "strata": [
            {"stratum": i, "n": n, "ybar": float(ybar), "s2_y": float(s2)}
            for i, (n, ybar, s2) in sorted(DEMO_SAMPLE_SUMMARIES.items())
        ]
    }


def demo_synthetic_spec(seed: int, error_rate: float = 0.05) -> dict:
    """A synthetic-population spec shaped like the demo dataset.

    Book distributions are truncated lognormals calibrated so each stratum's
    population mean and variance land on the demo targets.
    """
    from .montecarlo import lognormal_params_for

    strata = []
    for (lo, hi), count, mean, var in zip(DEMO_BOUNDS, DEMO_COUNTS, DEMO_MEANS, DEMO_VARS):
        mu, sigma = lognormal_params_for(float(mean), float(var), float(max(lo, 0.01)), float(hi))
        strata.append(
            {
                "lower": float(max(lo, 0.01)),
                "upper": float(hi),
                "count": count,
                "book": {"family": "lognormal", "mu": mu, "sigma": sigma},
                "error_rate": error_rate,
                "overpayment": {"full_prob": 0.1, "beta_a": 2.0, "beta_b": 5.0},
            }
        )
    return {"strata": strata, "seed": seed, "certainty_threshold": DEMO_THRESHOLD}


def write_demo_files(out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in (
        ("population.csv", demo_population_csv()),
        ("strata.json", json.dumps(demo_strata_config(), indent=2) + "\n"),
        ("plan_spec.json", json.dumps(demo_plan_spec(), indent=2) + "\n"),
        ("audited.csv", demo_audited_csv()),
        ("sample_stats.json", json.dumps(demo_sample_summaries(), indent=2) + "\n"),
    ):
        path = out / name
        path.write_text(content, encoding="utf-8")
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write the demo dataset files.")
    parser.add_argument("--out-dir", default="demo", help="output directory")
    args = parser.parse_args(argv)
    for path in write_demo_files(args.out_dir):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
