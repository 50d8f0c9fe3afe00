import { describe, expect, it } from "vitest";

import plan from "./fixtures/plan_demo.json";
import sample from "./fixtures/sample_demo_seed1.json";
import estimate from "./fixtures/estimate_demo.json";
import type { EstimateResponse, PlanResponse, SampleResponse } from "../src/types.js";
import * as S from "../src/state.js";

const PLAN = plan as unknown as PlanResponse;
const SAMPLE = sample as unknown as SampleResponse;
const ESTIMATE = estimate as unknown as EstimateResponse;

const ROWS = [
  { lower: "0.01", upper: "199" },
  { lower: "200", upper: "499" },
  { lower: "500", upper: "999" },
  { lower: "1000", upper: "1999" },
  { lower: "2000", upper: "3999" },
  { lower: "4000", upper: "6999" },
];

function readyState(): S.PlanDesignerState {
  let state = S.initialState();
  state = S.setPopulation(state, "claim_id,amount\nc1,1.00\n", "demo.csv:123");
  state = S.editBoundaries(state, ROWS, "7000");
  return state;
}

function plannedState(): S.PlanDesignerState {
  let state = readyState();
  const begun = S.beginPlan(state);
  state = S.completePlan(begun.state, begun.seq, PLAN);
  return state;
}

describe("plan button availability", () => {
  it("is disabled without a population", () => {
    let state = S.initialState();
    state = S.editBoundaries(state, ROWS, "7000");
    expect(S.canPlan(state)).toBe(false);
  });

  it("is disabled while boundary errors exist", () => {
    let state = readyState();
    state = S.editBoundaries(state, [{ lower: "10", upper: "5" }], "7000");
    expect(S.canPlan(state)).toBe(false);
  });

  it("is enabled once population and valid inputs exist", () => {
    expect(S.canPlan(readyState())).toBe(true);
  });
});

describe("dirty flag", () => {
  it("is unset right after a successful plan", () => {
    const state = plannedState();
    expect(S.isDirty(state)).toBe(false);
    expect(S.planIsCurrent(state)).toBe(true);
    expect(state.populationHash).toBe(PLAN.population_hash);
  });

  it("sets on any boundary edit and clears after re-plan", () => {
    let state = plannedState();
    const merged = [...ROWS.slice(0, 4), { lower: "2000", upper: "6999" }];
    state = S.editBoundaries(state, merged);
    expect(S.isDirty(state)).toBe(true);

    const begun = S.beginPlan(state);
    state = S.completePlan(begun.state, begun.seq, PLAN);
    expect(S.isDirty(state)).toBe(false);
  });

  it("stays unset after a no-op edit", () => {
    let state = plannedState();
    state = S.editBoundaries(state, ROWS.map((r) => ({ ...r })), "7000");
    expect(S.isDirty(state)).toBe(false);
  });

  it("sets on spec edits", () => {
    let state = plannedState();
    state = S.editSpec(state, { ...state.spec, gamma: "0.10" });
    expect(S.isDirty(state)).toBe(true);
  });

  it("sets on fpc toggle", () => {
    let state = plannedState();
    state = S.editSpec(state, { ...state.spec, useFpc: false });
    expect(S.isDirty(state)).toBe(true);
  });

  it("marks a response stale when inputs changed mid-flight", () => {
    let state = readyState();
    const begun = S.beginPlan(state);
    state = S.editSpec(begun.state, { ...begun.state.spec, gamma: "0.10" });
    state = S.completePlan(state, begun.seq, PLAN);
    // response is shown but corresponds to the old inputs
    expect(state.plan).not.toBeNull();
    expect(S.isDirty(state)).toBe(true);
  });
});

describe("stale responses are discarded by sequence number", () => {
  it("ignores a superseded plan response", () => {
    let state = readyState();
    const first = S.beginPlan(state);
    state = first.state;
    const second = S.beginPlan(state);
    state = second.state;
    const bogus = { ...PLAN, plan: { ...PLAN.plan, n: 1 } };
    state = S.completePlan(state, first.seq, bogus as PlanResponse);
    expect(state.plan).toBeNull(); // first response dropped
    state = S.completePlan(state, second.seq, PLAN);
    expect(state.plan?.plan.n).toBe(PLAN.plan.n);
  });

  it("ignores a superseded failure", () => {
    let state = readyState();
    const first = S.beginPlan(state);
    state = first.state;
    const second = S.beginPlan(state);
    state = second.state;
    state = S.failPlan(state, first.seq, "boom");
    expect(state.planError).toBeNull();
    state = S.failPlan(state, second.seq, "real");
    expect(state.planError).toBe("real");
  });
});

describe("sample and estimate panel", () => {
  it("requires a current plan and a seed", () => {
    let state = plannedState();
    expect(S.canSample(state)).toBe(false);
    state = S.setSeed(state, "1");
    expect(S.canSample(state)).toBe(true);
    state = S.editSpec(state, { ...state.spec, gamma: "0.10" });
    expect(S.canSample(state)).toBe(false); // dirty plan blocks the run
  });

  it("estimate needs audited results", () => {
    let state = S.setSeed(plannedState(), "1");
    expect(S.canEstimate(state)).toBe(false);
    state = S.setAudited(state, "stratum,claim_id,book_amount,audited_amount\n", null);
    expect(S.canEstimate(state)).toBe(true);
  });

  it("run results grey out when inputs change", () => {
    let state = S.setSeed(plannedState(), "1");
    const begun = S.beginRun(state);
    state = S.completeRun(begun.state, begun.seq, SAMPLE, ESTIMATE);
    expect(S.runIsStale(state)).toBe(false);
    state = S.editBoundaries(state, ROWS.slice(0, 5));
    expect(S.runIsStale(state)).toBe(true);
  });

  it("discards superseded run responses", () => {
    let state = S.setSeed(plannedState(), "1");
    const first = S.beginRun(state);
    state = first.state;
    const second = S.beginRun(state);
    state = second.state;
    state = S.completeRun(state, first.seq, SAMPLE, null);
    expect(state.sample).toBeNull();
    state = S.completeRun(state, second.seq, SAMPLE, ESTIMATE);
    expect(state.sample).not.toBeNull();
    expect(state.estimate).not.toBeNull();
  });
});
