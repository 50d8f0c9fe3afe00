/** Thin fetch wrappers for the facade endpoints. */

import type {
  ApiError,
  EstimateResponse,
  PlanResponse,
  SampleResponse,
} from "./types.js";

export class FacadeError extends Error {
  constructor(
    public status: number,
    public errorType: string,
    message: string,
  ) {
    super(message);
  }
}

async function post<T>(base: string, path: string, body: unknown): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const doc = (await resp.json()) as T | ApiError;
  if (!resp.ok) {
    const err = doc as ApiError;
    throw new FacadeError(resp.status, err.error?.type ?? "Unknown", err.error?.message ?? "request failed");
  }
  return doc as T;
}

export interface PopulationRef {
  population_csv?: string;
  population_hash?: string;
}

export function requestPlan(
  base: string,
  population: PopulationRef,
  strata: unknown,
  planSpec: unknown,
): Promise<PlanResponse> {
  return post(base, "/plan", { ...population, strata, plan_spec: planSpec });
}

export function requestSample(
  base: string,
  population: PopulationRef,
  strata: unknown,
  planSpec: unknown,
  seed: number,
): Promise<SampleResponse> {
  return post(base, "/sample", { ...population, strata, plan_spec: planSpec, seed });
}

export function requestEstimate(
  base: string,
  population: PopulationRef,
  strata: unknown,
  auditedCsv: string,
  sampleStats: unknown | null,
  beta: number,
): Promise<EstimateResponse> {
  const body: Record<string, unknown> = {
    ...population,
    strata,
    audited_csv: auditedCsv,
    beta,
  };
  if (sampleStats !== null) body.sample_stats = sampleStats;
  return post(base, "/estimate", body);
}

export async function health(base: string): Promise<{ status: string; version: string }> {
  const resp = await fetch(`${base}/health`);
  return (await resp.json()) as { status: string; version: string };
}
