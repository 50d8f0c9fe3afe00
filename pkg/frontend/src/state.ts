/** Plan-designer state: pure transitions, dirty tracking, stale discarding.
 *
 * The dirty flag means "the displayed results no longer correspond to the
 * inputs on screen". It is defined by comparing an input fingerprint against
 * the fingerprint captured when the displayed plan was requested, so a no-op
 * edit leaves results current while any real change greys them out until the
 * next successful re-plan. Each panel allows one request in flight; responses
 * carry their request's sequence number and anything superseded is dropped.
 */

import type { EstimateResponse, PlanResponse, SampleResponse } from "./types.js";
import {
  BoundaryRow,
  FieldError,
  SpecForm,
  validateBoundaries,
  validateSpec,
} from "./validation.js";

export interface PlanDesignerState {
  populationHash: string | null;
  populationCsv: string | null; // uploaded text until the facade returns a hash
  populationLabel: string | null;
  boundaries: BoundaryRow[];
  certaintyThreshold: string;
  spec: SpecForm;
  boundaryErrors: FieldError[];
  specErrors: FieldError[];

  planSeq: number;
  planInFlightKey: string | null;
  plannedKey: string | null;
  plan: PlanResponse | null;
  planError: string | null;

  runSeq: number;
  runInFlight: boolean;
  sample: SampleResponse | null;
  estimate: EstimateResponse | null;
  runKey: string | null;
  runError: string | null;

  auditedCsv: string | null;
  sampleStats: string | null;
  seed: string;
}

export const DEFAULT_SPEC: SpecForm = {
  mode: "caseB",
  gI: "",
  C: "",
  f: "0.05",
  gamma: "0.05",
  alpha: "",
  g: "",
  useFpc: true,
};

export function initialState(): PlanDesignerState {
  return {
    populationHash: null,
    populationCsv: null,
    populationLabel: null,
    boundaries: [],
    certaintyThreshold: "",
    spec: { ...DEFAULT_SPEC },
    boundaryErrors: [{ field: "boundaries", message: "at least one stratum is required" }],
    specErrors: [],
    planSeq: 0,
    planInFlightKey: null,
    plannedKey: null,
    plan: null,
    planError: null,
    runSeq: 0,
    runInFlight: false,
    sample: null,
    estimate: null,
    runKey: null,
    runError: null,
    auditedCsv: null,
    sampleStats: null,
    seed: "",
  };
}

/** Fingerprint of every input the plan depends on.
 *
 * The population is identified by its upload label, not by the facade hash:
 * the hash arrives only after the first successful plan and must not flip
 * that plan stale retroactively.
 */
export function inputsKey(state: PlanDesignerState): string {
  return JSON.stringify({
    population: state.populationLabel,
    boundaries: state.boundaries,
    threshold: state.certaintyThreshold,
    spec: state.spec,
  });
}

export function isDirty(state: PlanDesignerState): boolean {
  if (state.plan === null) return false; // nothing displayed to be stale
  return inputsKey(state) !== state.plannedKey;
}

export function planIsCurrent(state: PlanDesignerState): boolean {
  return state.plan !== null && !isDirty(state);
}

export function canPlan(state: PlanDesignerState): boolean {
  return (
    (state.populationCsv !== null || state.populationHash !== null) &&
    state.boundaryErrors.length === 0 &&
    state.specErrors.length === 0
  );
}

export function canSample(state: PlanDesignerState): boolean {
  return planIsCurrent(state) && /^\d+$/.test(state.seed.trim());
}

export function canEstimate(state: PlanDesignerState): boolean {
  return canSample(state) && state.auditedCsv !== null;
}

function revalidated(state: PlanDesignerState): PlanDesignerState {
  return {
    ...state,
    boundaryErrors: validateBoundaries(state.boundaries, state.certaintyThreshold),
    specErrors: validateSpec(state.spec, state.boundaries.length),
  };
}

export function setPopulation(
  state: PlanDesignerState,
  csv: string,
  label: string,
): PlanDesignerState {
  return revalidated({
    ...state,
    populationCsv: csv,
    populationHash: null,
    populationLabel: label,
  });
}

export function editBoundaries(
  state: PlanDesignerState,
  boundaries: BoundaryRow[],
  certaintyThreshold?: string,
): PlanDesignerState {
  return revalidated({
    ...state,
    boundaries,
    certaintyThreshold: certaintyThreshold ?? state.certaintyThreshold,
  });
}

export function editSpec(state: PlanDesignerState, spec: SpecForm): PlanDesignerState {
  return revalidated({ ...state, spec });
}

export function setSeed(state: PlanDesignerState, seed: string): PlanDesignerState {
  return { ...state, seed };
}

export function setAudited(
  state: PlanDesignerState,
  auditedCsv: string | null,
  sampleStats: string | null,
): PlanDesignerState {
  return { ...state, auditedCsv, sampleStats };
}

/** Start a plan request; returns the new state and the request's sequence number. */
export function beginPlan(state: PlanDesignerState): { state: PlanDesignerState; seq: number } {
  const seq = state.planSeq + 1;
  return {
    state: { ...state, planSeq: seq, planInFlightKey: inputsKey(state), planError: null },
    seq,
  };
}

export function completePlan(
  state: PlanDesignerState,
  seq: number,
  response: PlanResponse,
): PlanDesignerState {
  if (seq !== state.planSeq) return state; // superseded; drop silently
  return {
    ...state,
    plan: response,
    plannedKey: state.planInFlightKey,
    planInFlightKey: null,
    planError: null,
    populationHash: response.population_hash ?? state.populationHash,
  };
}

export function failPlan(
  state: PlanDesignerState,
  seq: number,
  message: string,
): PlanDesignerState {
  if (seq !== state.planSeq) return state;
  return { ...state, planInFlightKey: null, planError: message };
}

export function beginRun(state: PlanDesignerState): { state: PlanDesignerState; seq: number } {
  const seq = state.runSeq + 1;
  return { state: { ...state, runSeq: seq, runInFlight: true, runError: null }, seq };
}

export function completeRun(
  state: PlanDesignerState,
  seq: number,
  sample: SampleResponse,
  estimate: EstimateResponse | null,
): PlanDesignerState {
  if (seq !== state.runSeq) return state;
  return {
    ...state,
    runInFlight: false,
    sample,
    estimate,
    runKey: state.plannedKey,
  };
}

export function failRun(
  state: PlanDesignerState,
  seq: number,
  message: string,
): PlanDesignerState {
  if (seq !== state.runSeq) return state;
  return { ...state, runInFlight: false, runError: message };
}

/** Sample/estimate panels are stale whenever their plan fingerprint is. */
export function runIsStale(state: PlanDesignerState): boolean {
  if (state.sample === null && state.estimate === null) return false;
  return state.runKey !== inputsKey(state);
}
