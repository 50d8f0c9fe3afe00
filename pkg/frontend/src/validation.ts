/** Client-side validation of strata boundaries and the precision form.
 *
 * This mirrors the facade's structural rules so obviously bad edits never
 * leave the browser; the facade remains the authority on acceptance.
 */

import type { Mode } from "./types.js";

export interface BoundaryRow {
  lower: string;
  upper: string;
}

export interface SpecForm {
  mode: Mode;
  gI: string; // comma-separated list for explicit mode
  C: string;
  f: string;
  gamma: string;
  alpha: string;
  g: string;
  useFpc: boolean;
}

export interface FieldError {
  field: string;
  message: string;
}

const CENTS = (text: string): number => Math.round(parseFloat(text) * 100);

function isAmount(text: string): boolean {
  return /^\d+(\.\d{1,2})?$/.test(text.trim());
}

function isProb(text: string): boolean {
  const v = parseFloat(text);
  return /^\d*\.?\d+$/.test(text.trim()) && v > 0 && v < 1;
}

function isPositive(text: string): boolean {
  const v = parseFloat(text);
  return /^\d*\.?\d+(e[+-]?\d+)?$/i.test(text.trim()) && v > 0;
}

export function validateBoundaries(
  rows: BoundaryRow[],
  certaintyThreshold: string,
): FieldError[] {
  const errors: FieldError[] = [];
  if (rows.length === 0) {
    errors.push({ field: "boundaries", message: "at least one stratum is required" });
    return errors;
  }
  rows.forEach((row, i) => {
    if (!isAmount(row.lower) || !isAmount(row.upper)) {
      errors.push({ field: `boundary:${i}`, message: `stratum ${i + 1}: bounds must be dollar amounts` });
      return;
    }
    if (CENTS(row.lower) > CENTS(row.upper)) {
      errors.push({ field: `boundary:${i}`, message: `stratum ${i + 1}: lower exceeds upper` });
    }
  });
  for (let i = 1; i < rows.length; i++) {
    const prev = rows[i - 1]!;
    const cur = rows[i]!;
    if (!isAmount(prev.upper) || !isAmount(cur.lower)) continue;
    if (CENTS(cur.lower) <= CENTS(prev.upper)) {
      errors.push({
        field: `boundary:${i}`,
        message: `strata ${i} and ${i + 1} overlap or are out of order`,
      });
    }
  }
  const last = rows[rows.length - 1]!;
  if (!isAmount(certaintyThreshold)) {
    errors.push({ field: "threshold", message: "certainty threshold must be a dollar amount" });
  } else if (isAmount(last.upper) && CENTS(certaintyThreshold) <= CENTS(last.upper)) {
    errors.push({ field: "threshold", message: "certainty threshold must exceed the last stratum" });
  }
  return errors;
}

export function validateSpec(form: SpecForm, strataCount: number): FieldError[] {
  const errors: FieldError[] = [];
  const given = {
    param: form.mode === "explicit" ? form.gI.trim() !== ""
      : form.mode === "caseA" ? form.C.trim() !== "" : form.f.trim() !== "",
    alpha: form.alpha.trim() !== "",
    gamma: form.gamma.trim() !== "",
    g: form.g.trim() !== "",
  };

  if (form.mode === "explicit") {
    if (!given.param) {
      errors.push({ field: "g_i", message: "explicit mode needs per-stratum precisions" });
    } else {
      const parts = form.gI.split(",").map((p) => p.trim());
      if (parts.length !== strataCount) {
        errors.push({ field: "g_i", message: `need ${strataCount} precisions, got ${parts.length}` });
      } else if (!parts.every(isPositive)) {
        errors.push({ field: "g_i", message: "precisions must be positive numbers" });
      }
    }
  } else if (given.param) {
    const text = form.mode === "caseA" ? form.C : form.f;
    if (!isPositive(text)) {
      errors.push({ field: "param", message: "the case parameter must be a positive number" });
    }
  }

  for (const [field, text] of [["gamma", form.gamma], ["alpha", form.alpha]] as const) {
    if (text.trim() !== "" && !isProb(text)) {
      errors.push({ field, message: `${field} must be a probability in (0, 1)` });
    }
  }
  if (given.g && !isPositive(form.g)) {
    errors.push({ field: "g", message: "overall precision g must be positive" });
  }

  const extras = Number(given.alpha) + Number(given.gamma) + Number(given.g);
  if (!given.param) {
    if (extras !== 3) {
      errors.push({
        field: "spec",
        message: "without the case parameter, supply alpha, gamma, and g",
      });
    }
  } else if (extras === 3) {
    errors.push({ field: "spec", message: "overdetermined: drop one of alpha, gamma, g" });
  } else if (!given.gamma && extras !== 2) {
    errors.push({ field: "spec", message: "supply gamma, or both alpha and g" });
  }
  return errors;
}

export function boundariesToConfig(rows: BoundaryRow[], threshold: string) {
  return {
    boundaries: rows.map((r) => ({ lower: parseFloat(r.lower), upper: parseFloat(r.upper) })),
    certainty_threshold: parseFloat(threshold),
  };
}

export function specToDoc(form: SpecForm) {
  const doc: Record<string, unknown> = { mode: form.mode, use_fpc: form.useFpc };
  if (form.mode === "explicit" && form.gI.trim() !== "") {
    doc.g_i = form.gI.split(",").map((p) => parseFloat(p.trim()));
  }
  if (form.mode === "caseA" && form.C.trim() !== "") doc.C = parseFloat(form.C);
  if (form.mode !== "caseA" && form.mode !== "explicit" && form.f.trim() !== "") {
    doc.f = parseFloat(form.f);
  }
  for (const key of ["gamma", "alpha", "g"] as const) {
    if (form[key].trim() !== "") doc[key] = parseFloat(form[key]);
  }
  return doc;
}
