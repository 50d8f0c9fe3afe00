/** Pure renderers: facade JSON in, display strings out.
 *
 * No arithmetic happens here beyond formatting; every cell is a facade value
 * passed through exactly one formatter, which is what the parity tests pin.
 */

import {
  fmtBadge,
  fmtCount,
  fmtDollars,
  fmtMoney,
  fmtProb,
  fmtRatio,
  fmtRaw,
  fmtWide,
} from "./format.js";
import type { EstimateResponse, PlanResponse, SampleResponse } from "./types.js";

export interface PlanGridRow {
  index: string;
  range: string;
  count: string;
  mean: string;
  variance: string;
  g_i: string;
  n_raw: string;
  n: string;
  w: string;
  flags: string; // census / floor highlights
}

export interface PlanGrid {
  rows: PlanGridRow[];
  totalCount: string;
  totalN: string;
  predictedAlpha: string;
  nominalAlpha: string;
  repBadge: string;
  repValue: string;
  gamma: string;
  g: string;
  warnings: string[];
}

export function planGrid(response: PlanResponse): PlanGrid {
  const rows = response.plan.strata.map((p, i) => {
    const s = response.frame.strata[i]!;
    const flags = [
      p.census ? "census" : "",
      p.floored ? "floor" : "",
      p.degenerate ? "zero-variance" : "",
    ].filter(Boolean).join(" ");
    return {
      index: fmtCount(p.index),
      range: s.lower === null || s.upper === null ? "–" : `${s.lower}–${s.upper}`,
      count: fmtCount(p.count),
      mean: fmtMoney(s.mean),
      variance: fmtWide(s.variance),
      g_i: fmtMoney(p.g_i),
      n_raw: fmtRaw(p.n_raw),
      n: fmtCount(p.n),
      w: fmtProb(p.w),
      flags,
    };
  });
  return {
    rows,
    totalCount: fmtCount(response.frame.total_claims),
    totalN: fmtCount(response.plan.n),
    predictedAlpha: fmtProb(response.plan.predicted_alpha),
    nominalAlpha: fmtProb(response.plan.alpha_nominal),
    repBadge: fmtBadge(response.plan.rep_condition_holds),
    repValue: fmtProb(response.plan.rep_condition_value),
    gamma: fmtProb(response.plan.gamma),
    g: response.plan.g === null ? "–" : fmtMoney(response.plan.g),
    warnings: response.frame.warnings,
  };
}

export interface EstimateRow {
  estimator: string;
  point: string;
  stderr: string;
  lcb: string;
  r_c: string;
}

export const ESTIMATOR_LABELS: Record<string, string> = {
  difference: "difference",
  separate_ratio: "separate ratio",
  combined_ratio: "combined ratio",
};

export function estimateTable(response: EstimateResponse): EstimateRow[] {
  return Object.keys(ESTIMATOR_LABELS)
    .filter((key) => key in response.estimates)
    .map((key) => {
      const est = response.estimates[key]!;
      return {
        estimator: ESTIMATOR_LABELS[key]!,
        point: fmtDollars(est.point),
        stderr: fmtDollars(est.stderr),
        lcb: fmtDollars(est.lcb),
        r_c: fmtRatio(est.r_c),
      };
    });
}

export interface RepresentativenessView {
  ybarSt: string;
  populationMean: string;
  absDiff: string;
  threshold: string;
  overallBadge: string;
  zeroDifference: boolean;
  strata: { index: string; ybar: string; mean: string; absDiff: string; g_i: string; badge: string }[];
}

export function representativenessView(sample: SampleResponse): RepresentativenessView {
  const rep = sample.representativeness;
  return {
    ybarSt: fmtMoney(rep.ybar_st),
    populationMean: fmtMoney(rep.population_mean),
    absDiff: fmtMoney(rep.abs_diff),
    threshold: rep.threshold === null ? "–" : fmtMoney(rep.threshold),
    overallBadge: fmtBadge(rep.overall_pass),
    zeroDifference: rep.abs_diff === 0,
    strata: rep.strata.map((c) => ({
      index: fmtCount(c.index),
      ybar: fmtMoney(c.ybar),
      mean: fmtMoney(c.mean),
      absDiff: fmtMoney(c.abs_diff),
      g_i: fmtMoney(c.g_i),
      badge: fmtBadge(c.pass),
    })),
  };
}
