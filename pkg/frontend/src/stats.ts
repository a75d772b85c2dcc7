/**
 * Nonparametric trial comparisons: two-sided Mann-Whitney U with the exact
 * null distribution for tie-free samples (falling back to the normal
 * approximation with tie correction and continuity correction), and
 * Benjamini-Hochberg false-discovery-rate adjustment.
 */

export interface MwuResult {
  u: number; // U statistic of the first sample
  p: number; // two-sided p-value
  method: "exact" | "asymptotic";
}

/** Midranks (average ranks for ties), 1-based. */
export function midranks(values: number[]): number[] {
  const order = values.map((v, i) => ({ v, i })).sort((a, b) => a.v - b.v);
  const ranks = new Array<number>(values.length);
  let k = 0;
  while (k < order.length) {
    let j = k;
    while (j + 1 < order.length && order[j + 1].v === order[k].v) j++;
    const avg = (k + j + 2) / 2; // ranks are 1-based
    for (let m = k; m <= j; m++) ranks[order[m].i] = avg;
    k = j + 1;
  }
  return ranks;
}

function tieTerm(values: number[]): number {
  const counts = new Map<number, number>();
  for (const v of values) counts.set(v, (counts.get(v) ?? 0) + 1);
  let t = 0;
  for (const c of counts.values()) t += c * c * c - c;
  return t;
}

/**
 * CDF of the exact Mann-Whitney U null distribution via the recurrence
 * f(i, j, k) = f(i-1, j, k-j) + f(i, j-1, k): the largest of the pooled
 * observations is either from the first sample (beating all j of the second)
 * or from the second (contributing nothing).
 */
export function exactUCdf(n1: number, n2: number, u: number): number {
  const maxU = n1 * n2;
  if (u < 0) return 0;
  if (u >= maxU) return 1;
  // table[i][k] = f(i, j, k) for the current j
  let table: number[][] = [];
  for (let i = 0; i <= n1; i++) {
    const row = new Array<number>(maxU + 1).fill(0);
    row[0] = 1; // j = 0
    table.push(row);
  }
  for (let j = 1; j <= n2; j++) {
    const next: number[][] = [new Array<number>(maxU + 1).fill(0)];
    next[0][0] = 1; // i = 0
    for (let i = 1; i <= n1; i++) {
      const row = new Array<number>(maxU + 1).fill(0);
      const bound = i * j;
      for (let k = 0; k <= bound; k++) {
        row[k] = table[i][k] + (k >= j ? next[i - 1][k - j] : 0);
      }
      next.push(row);
    }
    table = next;
  }
  const counts = table[n1];
  const total = counts.reduce((a, b) => a + b, 0);
  let acc = 0;
  for (let k = 0; k <= Math.floor(u); k++) acc += counts[k];
  return acc / total;
}

/** Complementary error function, accurate to near double precision via the
 * incomplete-gamma series / continued fraction. */
export function erfc(x: number): number {
  if (x < 0) return 2 - erfc(-x);
  if (x === 0) return 1;
  const x2 = x * x;
  if (x2 < 2.5) {
    // series for P(1/2, x^2)
    let sum = 0;
    let term = 1 / 0.5;
    let a = 0.5;
    for (let n = 0; n < 200; n++) {
      sum += term;
      a += 1;
      term *= x2 / a;
      if (term < sum * 1e-17) break;
    }
    const p = sum * Math.exp(-x2 + 0.5 * Math.log(x2) - Math.log(Math.sqrt(Math.PI)));
    return 1 - p;
  }
  // continued fraction for Q(1/2, x^2) (modified Lentz)
  const tiny = 1e-300;
  let b = x2 + 0.5;
  let c = 1 / tiny;
  let d = 1 / b;
  let h = d;
  for (let i = 1; i < 300; i++) {
    const an = -i * (i - 0.5);
    b += 2;
    d = an * d + b;
    if (Math.abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (Math.abs(c) < tiny) c = tiny;
    d = 1 / d;
    const del = d * c;
    h *= del;
    if (Math.abs(del - 1) < 1e-17) break;
  }
  return h * Math.exp(-x2 + 0.5 * Math.log(x2) - Math.log(Math.sqrt(Math.PI)));
}

function normalSf(z: number): number {
  return 0.5 * erfc(z / Math.SQRT2);
}

/** Two-sided Mann-Whitney U test of x against y. */
export function mannWhitneyU(x: number[], y: number[]): MwuResult {
  const n1 = x.length;
  const n2 = y.length;
  if (n1 < 1 || n2 < 1) throw new Error("mannWhitneyU needs non-empty samples");
  const ranks = midranks(x.concat(y));
  let r1 = 0;
  for (let i = 0; i < n1; i++) r1 += ranks[i];
  const u1 = r1 - (n1 * (n1 + 1)) / 2;
  const u2 = n1 * n2 - u1;
  const ties = tieTerm(x.concat(y));
  if (ties === 0) {
    const uMin = Math.min(u1, u2);
    const p = Math.min(1, 2 * exactUCdf(n1, n2, uMin));
    return { u: u1, p, method: "exact" };
  }
  const n = n1 + n2;
  const mu = (n1 * n2) / 2;
  const sigma2 = ((n1 * n2) / 12) * (n + 1 - ties / (n * (n - 1)));
  if (sigma2 <= 0) {
    return { u: u1, p: 1, method: "asymptotic" }; // all observations equal
  }
  const uMax = Math.max(u1, u2);
  const z = (uMax - mu - 0.5) / Math.sqrt(sigma2); // continuity correction
  const p = Math.min(1, 2 * normalSf(z));
  return { u: u1, p, method: "asymptotic" };
}

/** Benjamini-Hochberg adjustment; preserves order, never below the raw value. */
export function bhAdjust(pValues: number[]): number[] {
  const m = pValues.length;
  if (m === 0) return [];
  const indexed = pValues.map((p, i) => ({ p, i })).sort((a, b) => a.p - b.p);
  const q = new Array<number>(m);
  for (let rank = 0; rank < m; rank++) {
    q[rank] = (indexed[rank].p * m) / (rank + 1);
  }
  for (let i = m - 2; i >= 0; i--) {
    q[i] = Math.min(q[i], q[i + 1]);
  }
  const out = new Array<number>(m);
  for (let rank = 0; rank < m; rank++) {
    out[indexed[rank].i] = Math.min(1, q[rank]);
  }
  return out;
}

export interface PairwiseRow {
  variantA: string;
  variantB: string;
  u: number;
  pRaw: number;
  pAdjusted: number;
  significant: boolean;
}

/**
 * All pairwise comparisons between variants' per-trial metrics, BH-adjusted,
 * flagged at the significance level.
 */
export function statsTable(
  groups: Map<string, number[]>,
  alpha = 0.05,
): PairwiseRow[] {
  const names = [...groups.keys()];
  for (const name of names) {
    if ((groups.get(name) ?? []).length < 2) {
      throw new Error(`variant ${name} needs at least 2 trials`);
    }
  }
  const rows: Omit<PairwiseRow, "pAdjusted" | "significant">[] = [];
  for (let i = 0; i < names.length; i++) {
    for (let j = i + 1; j < names.length; j++) {
      const res = mannWhitneyU(groups.get(names[i])!, groups.get(names[j])!);
      rows.push({ variantA: names[i], variantB: names[j], u: res.u, pRaw: res.p });
    }
  }
  const adjusted = bhAdjust(rows.map((r) => r.pRaw));
  return rows.map((r, k) => ({
    ...r,
    pAdjusted: adjusted[k],
    significant: adjusted[k] <= alpha,
  }));
}
