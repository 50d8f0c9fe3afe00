"""Shared report builders: JSON documents and human tables.

The CLI and the HTTP facade both render through these functions, so their
outputs agree field for field. JSON is serialized with sorted keys and
default float repr (shortest round-trip, at least 10 significant digits), so
identical inputs give byte-identical documents.
"""

from __future__ import annotations

import json
from typing import Sequence

from .allocation import AllocationPlan
from .estimation import EstimateReport
from .population import PopulationFrame
from .sampling import RepresentativenessReport, SampleSet


def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def frame_summary(frame: PopulationFrame) -> dict:
    return {
        "total_claims": frame.total_count,
        "mean_amount": frame.mean,
        "excluded_zero_count": frame.excluded_zero_count,
        "certainty_count": len(frame.certainty_claims),
        "certainty_total": frame.certainty_total,
        "certainty_threshold": frame.certainty_threshold,
        "warnings": list(frame.warnings),
        "strata": [
            {
                "index": s.index,
                "lower": None if s.boundary is None else s.boundary.lower,
                "upper": None if s.boundary is None else s.boundary.upper,
                "count": s.count,
                "mean": s.mean,
                "variance": s.variance,
                "weight": s.weight,
            }
            for s in frame.strata
        ],
    }


def plan_dict(plan: AllocationPlan) -> dict:
    param_value = plan.param_value
    if isinstance(param_value, tuple):
        param_value = list(param_value)
    return {
        "mode": plan.mode,
        "gamma": plan.gamma,
        "alpha_nominal": plan.alpha_nominal,
        "g": plan.g,
        "param": {"name": plan.param_name, "value": param_value},
        "use_fpc": plan.fpc_applied,
        "n": plan.n,
        "predicted_alpha": plan.predicted_alpha,
        "rep_condition_holds": plan.rep_condition_holds,
        "rep_condition_value": plan.rep_condition_value,
        "strata": [
            {
                "index": s.index,
                "count": s.count,
                "g_i": s.g_i,
                "n_raw": s.n_raw,
                "n": s.n,
                "w": w,
                "census": s.census,
                "floored": s.floored,
                "degenerate": s.degenerate,
            }
            for s, w in zip(plan.strata, plan.w)
        ],
    }


def plan_response(frame: PopulationFrame, plan: AllocationPlan) -> dict:
    return {"frame": frame_summary(frame), "plan": plan_dict(plan)}


def plan_table(frame: PopulationFrame, plan: AllocationPlan) -> str:
    """Plan as a text table: per-stratum count, mean, variance, sample size."""
    header = f"{'stratum':>8} {'range':>18} {'claims':>8} {'mean':>8} {'variance':>10} {'n_i':>6}"
    lines = [header, "-" * len(header)]
    for s, p in zip(frame.strata, plan.strata):
        rng = "" if s.boundary is None else f"{s.boundary.lower:g}-{s.boundary.upper:g}"
        flags = "".join(
            mark for mark, on in (("*", p.census), ("+", p.floored), ("0", p.degenerate)) if on
        )
        lines.append(
            f"{s.index:>8} {rng:>18} {s.count:>8} {round(s.mean):>8} "
            f"{round(s.variance):>10} {p.n:>6}{flags}"
        )
    lines.append(
        f"{'total':>8} {'':>18} {frame.total_count:>8} {'':>8} {'':>10} {plan.n:>6}"
    )
    notes = []
    if any(p.census for p in plan.strata):
        notes.append("* census: sample equals the whole stratum")
    if any(p.floored for p in plan.strata):
        notes.append("+ floored at the 2-item minimum")
    if any(p.degenerate for p in plan.strata):
        notes.append("0 zero-variance stratum")
    return "\n".join(lines + notes) + "\n"


def representativeness_dict(report: RepresentativenessReport) -> dict:
    return {
        "ybar_st": report.ybar_st,
        "population_mean": report.population_mean,
        "abs_diff": report.abs_diff,
        "threshold": report.threshold,
        "overall_pass": report.overall_pass,
        "strata": [
            {
                "index": c.index,
                "ybar": c.ybar,
                "mean": c.mean,
                "abs_diff": c.abs_diff,
                "g_i": c.g_i,
                "pass": c.passed,
            }
            for c in report.strata
        ],
    }


def sample_csv(sample: SampleSet) -> str:
    lines = ["stratum,claim_id,book_amount"]
    for s in sample.strata:
        lines.extend(f"{s.index},{c.id},{c.amount:.2f}" for c in s.claims)
    return "\n".join(lines) + "\n"


def sample_response(
    frame: PopulationFrame,
    sample: SampleSet,
    report: RepresentativenessReport,
) -> dict:
    return {
        "seed": sample.seed,
        "n_i": [len(s.claims) for s in sample.strata],
        "ybar_i": [s.ybar for s in sample.strata],
        "ybar_st": sample.ybar_st,
        "rows": [
            {"stratum": s.index, "claim_id": c.id, "book_amount": c.amount}
            for s in sample.strata
            for c in s.claims
        ],
        "representativeness": representativeness_dict(report),
    }


def estimate_dict(report: EstimateReport) -> dict:
    return {
        "point": report.point,
        "variance": report.variance,
        "stderr": report.stderr,
        "lcb": report.lcb,
        "r_c": report.r_c,
        "strata": [
            {
                "index": c.index,
                "count": c.N,
                "n": c.n,
                "dbar": c.dbar,
                "r": c.r,
                "resid_var": c.resid_var,
                "point_part": c.point_part,
                "variance_part": c.variance_part,
            }
            for c in report.strata
        ],
    }


def estimate_response(
    frame: PopulationFrame, reports: Sequence[EstimateReport], beta: float
) -> dict:
    return {
        "beta": beta,
        "estimates": {r.estimator: estimate_dict(r) for r in reports},
        "frame": frame_summary(frame),
    }


def estimate_table(reports: Sequence[EstimateReport], beta: float) -> str:
    """Estimator comparison as a text table, whole dollars."""
    level = f"{100 * (1 - beta):g}"
    header = f"{'estimator':<18} {'estimate':>12} {'lower ' + level + '% bound':>20}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.estimator.replace('_', ' '):<18} {round(r.point):>12,} {round(r.lcb):>20,}"
        )
    return "\n".join(lines) + "\n"


def representativeness_lines(report: RepresentativenessReport) -> str:
    lines = [
        f"sample mean {report.ybar_st:.4f} vs population mean "
        f"{report.population_mean:.4f} (|diff| = {report.abs_diff:.4f})"
    ]
    if report.threshold is not None:
        verdict = "PASS" if report.overall_pass else "FAIL"
        lines.append(f"overall threshold {report.threshold:.4f}: {verdict}")
    for c in report.strata:
        verdict = "ok" if c.passed else "MISS"
        lines.append(
            f"  stratum {c.index}: sample {c.ybar:.4f} vs {c.mean:.4f} "
            f"(|diff| {c.abs_diff:.4f} <= g_i {c.g_i:.4f}? {verdict})"
        )
    return "\n".join(lines) + "\n"
