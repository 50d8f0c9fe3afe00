/** JSON documents exchanged with the repstrat facade. */

export interface FrameStratum {
  index: number;
  lower: number | null;
  upper: number | null;
  count: number;
  mean: number;
  variance: number;
  weight: number;
}

export interface FrameSummary {
  total_claims: number;
  mean_amount: number;
  excluded_zero_count: number;
  certainty_count: number;
  certainty_total: number;
  certainty_threshold: number | null;
  warnings: string[];
  strata: FrameStratum[];
}

export interface PlanStratum {
  index: number;
  count: number;
  g_i: number;
  n_raw: number;
  n: number;
  w: number;
  census: boolean;
  floored: boolean;
  degenerate: boolean;
}

export interface PlanBody {
  mode: string;
  gamma: number;
  alpha_nominal: number | null;
  g: number | null;
  param: { name: string; value: number | number[] };
  use_fpc: boolean;
  n: number;
  predicted_alpha: number | null;
  rep_condition_holds: boolean | null;
  rep_condition_value: number | null;
  strata: PlanStratum[];
}

export interface PlanResponse {
  population_hash?: string;
  frame: FrameSummary;
  plan: PlanBody;
}

export interface RepresentativenessStratum {
  index: number;
  ybar: number;
  mean: number;
  abs_diff: number;
  g_i: number;
  pass: boolean;
}

export interface RepresentativenessReport {
  ybar_st: number;
  population_mean: number;
  abs_diff: number;
  threshold: number | null;
  overall_pass: boolean | null;
  strata: RepresentativenessStratum[];
}

export interface SampleResponse {
  population_hash?: string;
  seed: number;
  n_i: number[];
  ybar_i: number[];
  ybar_st: number;
  rows: { stratum: number; claim_id: string; book_amount: number }[];
  representativeness: RepresentativenessReport;
}

export interface EstimateStratum {
  index: number;
  count: number;
  n: number;
  dbar: number;
  r: number | null;
  resid_var: number;
  point_part: number;
  variance_part: number;
}

export interface EstimateBody {
  point: number;
  variance: number;
  stderr: number;
  lcb: number;
  r_c: number | null;
  strata: EstimateStratum[];
}

export interface EstimateResponse {
  population_hash?: string;
  beta: number;
  estimates: Record<string, EstimateBody>;
  frame: FrameSummary;
}

export interface ApiError {
  error: { type: string; message: string; details: Record<string, unknown> };
}

export type Mode = "explicit" | "caseA" | "caseB" | "caseC" | "caseD" | "caseE";

export interface StrataConfig {
  boundaries: { lower: number; upper: number }[];
  certainty_threshold: number;
}

export interface PlanSpecDoc {
  mode: Mode;
  g_i?: number[];
  C?: number;
  f?: number;
  gamma?: number;
  alpha?: number;
  g?: number;
  use_fpc: boolean;
}
