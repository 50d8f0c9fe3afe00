"""Command-line interface: plan, sample, estimate, simulate, serve.

Exit codes: 0 success, 2 validation failure (machine-readable error JSON on
stderr), 3 overall representativeness failure on ``sample`` (outputs are
still written). Seeds come from --seed or the REPSTRAT_SEED environment
variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import __version__
from .allocation import PrecisionSpec, allocate, parse_plan_spec
from .errors import RepStratError, SpecError
from .estimation import (
    combined_ratio_estimate,
    difference_estimate,
    load_audited_csv,
    parse_sample_summaries,
    separate_ratio_estimate,
    sparse_stats_for_frame,
    stats_for_frame,
)
from .montecarlo import SyntheticPopulationSpec, run_coverage
from .population import PopulationFrame, load_population, parse_strata_config, stratify
from .reports import (
    estimate_response,
    estimate_table,
    plan_response,
    plan_table,
    representativeness_lines,
    sample_csv,
    sample_response,
    to_json,
)
from .sampling import check_representativeness, draw_sample

ENV_SEED = "REPSTRAT_SEED"


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_frame(population: str, strata: str) -> PopulationFrame:
    claims = load_population(population)
    boundaries, threshold = parse_strata_config(_read_text(strata))
    return stratify(claims, boundaries, threshold)


def _load_plan_spec(path: str, fpc_override: bool | None) -> PrecisionSpec:
    spec = parse_plan_spec(_read_text(path))
    if fpc_override is not None:
        spec = dataclasses.replace(spec, use_fpc=fpc_override)
    return spec


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SpecError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    raise SpecError(f"a seed is required: pass --seed or set {ENV_SEED}")


def cmd_plan(args) -> int:
    frame = _load_frame(args.population, args.strata)
    spec = _load_plan_spec(args.plan_spec, args.fpc)
    plan = allocate(spec, frame)
    sys.stdout.write(plan_table(frame, plan))
    for w in frame.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if any(p.census for p in plan.strata):
        flagged = [p.index for p in plan.strata if p.census]
        print(f"warning: census in strata {flagged}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(to_json(plan_response(frame, plan)), encoding="utf-8")
    return 0


def cmd_sample(args) -> int:
    frame = _load_frame(args.population, args.strata)
    spec = _load_plan_spec(args.plan_spec, args.fpc)
    plan = allocate(spec, frame)
    seed = _resolve_seed(args)
    sample = draw_sample(frame, plan, seed)
    g = args.overall_g if args.overall_g is not None else plan.g
    report = check_representativeness(frame, sample, plan.g_i, g)
    out = Path(args.out)
    out.write_text(sample_csv(sample), encoding="utf-8")
    sidecar = out.with_name(out.name + ".meta.json")
    sidecar.write_text(to_json(sample_response(frame, sample, report)), encoding="utf-8")
    sys.stdout.write(representativeness_lines(report))
    if report.overall_pass is False:
        return 3
    return 0


def cmd_estimate(args) -> int:
    frame = _load_frame(args.population, args.strata)
    items = load_audited_csv(args.audited)
    if args.sample_stats:
        summaries = parse_sample_summaries(_read_text(args.sample_stats))
        stats = sparse_stats_for_frame(items, summaries, frame)
    else:
        stats = stats_for_frame(items, frame)
    reports = [
        difference_estimate(frame, stats, args.beta),
        separate_ratio_estimate(frame, stats, args.beta),
        combined_ratio_estimate(frame, stats, args.beta),
    ]
    sys.stdout.write(estimate_table(reports, args.beta))
    if args.out:
        Path(args.out).write_text(
            to_json(estimate_response(frame, reports, args.beta)), encoding="utf-8"
        )
    return 0


def cmd_simulate(args) -> int:
    spec = SyntheticPopulationSpec.from_json(_read_text(args.spec))
    if args.seed is not None or os.environ.get(ENV_SEED):
        spec = dataclasses.replace(spec, seed=_resolve_seed(args))
    plan_spec = _load_plan_spec(args.plan_spec, args.fpc)
    report = run_coverage(
        spec,
        plan_spec,
        replications=args.replications,
        beta=args.beta,
        overall_g_fraction=args.overall_g_fraction,
        per_rep_path=args.per_rep_csv,
    )
    doc = to_json(report.to_json_dict())
    if args.out:
        Path(args.out).write_text(doc, encoding="utf-8")
    else:
        sys.stdout.write(doc)
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(args.listen)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repstrat",
        description="Representative stratified audit sampling: plan sample "
        "sizes, draw reproducible samples, estimate total overpayment.",
    )
    parser.add_argument("--version", action="version", version=f"repstrat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, plan_spec=True):
        p.add_argument("--population", required=True, help="population CSV (claim_id,amount)")
        p.add_argument("--strata", required=True, help="strata config JSON")
        if plan_spec:
            p.add_argument("--plan-spec", required=True, help="precision spec JSON")
            p.add_argument("--fpc", action=argparse.BooleanOptionalAction, default=None,
                           help="override the spec's finite population correction flag")

    p = sub.add_parser("plan", help="compute per-stratum sample sizes")
    add_common(p)
    p.add_argument("--out", help="write the plan JSON here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sample", help="draw the planned stratified sample")
    add_common(p)
    p.add_argument("--seed", type=int, help=f"draw seed (fallback: {ENV_SEED})")
    p.add_argument("--overall-g", type=float, help="overall precision for the check")
    p.add_argument("--out", required=True, help="sample CSV path (sidecar: <out>.meta.json)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate total overpayment from audit results")
    add_common(p, plan_spec=False)
    p.add_argument("--audited", required=True,
                   help="audited CSV (stratum,claim_id,book_amount,audited_amount)")
    p.add_argument("--sample-stats",
                   help="sample summaries JSON; the audited CSV then only needs "
                        "the overpaid claims")
    p.add_argument("--beta", type=float, default=0.05, help="lower-bound tail probability")
    p.add_argument("--out", help="write the estimate report JSON here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run the coverage harness on a synthetic population")
    p.add_argument("--spec", required=True, help="synthetic population spec JSON")
    p.add_argument("--plan-spec", required=True, help="precision spec JSON")
    p.add_argument("--fpc", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--replications", type=int, default=1000)
    p.add_argument("--beta", type=float, default=0.05)
    p.add_argument("--seed", type=int, help=f"override the spec's seed (fallback: {ENV_SEED})")
    p.add_argument("--overall-g-fraction", type=float,
                   help="overall precision as a fraction of the population mean")
    p.add_argument("--per-rep-csv", help="also write one row per replication here")
    p.add_argument("--out", help="write the coverage report JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="serve the JSON-over-HTTP facade")
    p.add_argument("--listen", default="127.0.0.1:8787", help="host:port to bind")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RepStratError as exc:
        sys.stderr.write(json.dumps({"error": exc.to_json_dict()}) + "\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        err = {"error": {"type": type(exc).__name__, "message": str(exc), "details": {}}}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
