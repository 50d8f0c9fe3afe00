/** Fixed display formatting.
 *
 * The UI never computes statistics; every rendered figure is a facade JSON
 * value passed through exactly one of these functions, so rendered strings
 * can be compared against the raw response. Grouping is done by hand to stay
 * locale-independent.
 */

function group(digits: string): string {
  return digits.replace(/\B(?=(\d{3})+(?!\d))/g, ",");
}

/** Integer counts and sample sizes. */
export function fmtCount(value: number): string {
  return group(String(value));
}

/** Dollar figures: grouped, two decimals. */
export function fmtMoney(value: number): string {
  const fixed = Math.abs(value).toFixed(2);
  const [whole, frac] = fixed.split(".");
  const sign = value < 0 ? "-" : "";
  return `${sign}${group(whole ?? "0")}.${frac}`;
}

/** Dollar figures rounded to whole dollars (summary tables). */
export function fmtDollars(value: number): string {
  const rounded = Math.round(Math.abs(value));
  const sign = value < 0 && rounded !== 0 ? "-" : "";
  return sign + group(String(rounded));
}

/** Variances and other wide-range magnitudes. */
export function fmtWide(value: number): string {
  if (value === 0) return "0";
  if (Math.abs(value) >= 1000) return group(String(Math.round(value)));
  return trimZeros(value.toFixed(2));
}

/** Raw sample sizes before rounding. */
export function fmtRaw(value: number): string {
  return value.toFixed(2);
}

/** Probabilities (alpha, gamma, weights). */
export function fmtProb(value: number | null): string {
  if (value === null) return "–";
  if (value !== 0 && Math.abs(value) < 0.0001) return value.toExponential(2);
  return trimZeros(value.toFixed(4));
}

/** Ratios such as the pooled overpayment rate. */
export function fmtRatio(value: number | null): string {
  return value === null ? "–" : value.toFixed(6);
}

export function fmtBadge(value: boolean | null): string {
  return value === null ? "–" : value ? "pass" : "fail";
}

function trimZeros(fixed: string): string {
  return fixed.replace(/\.?0+$/, "") || "0";
}
