// Client-side preview of the server's sketch preprocessing. The algorithm
// must match the server exactly (resample at constant time steps, then
// Gaussian-smooth with a kernel of radius ceil(3*sigma), renormalized at
// the boundaries); the contract tests pin agreement to 1e-6.

import type { SketchPoint } from './types';

function interp(query: number, xs: number[], ys: number[]): number {
  const n = xs.length;
  if (query <= xs[0]) return ys[0];
  if (query >= xs[n - 1]) return ys[n - 1];
  let lo = 0;
  let hi = n - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (xs[mid] <= query) lo = mid;
    else hi = mid;
  }
  const span = xs[hi] - xs[lo];
  if (span === 0) return ys[hi];
  const w = (query - xs[lo]) / span;
  return ys[lo] * (1 - w) + ys[hi] * w;
}

export function resampleSketch(points: SketchPoint[], targetFps: number): number[][] {
  if (points.length < 2) throw new Error('a sketch needs at least 2 points');
  const t = points.map((p) => p.t_ms);
  for (let i = 1; i < t.length; i++) {
    if (t[i] < t[i - 1]) throw new Error('sketch timestamps must be non-decreasing');
  }
  const durationS = (t[t.length - 1] - t[0]) / 1000;
  const n = Math.max(2, Math.round(durationS * targetFps) + 1);
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const out: number[][] = [];
  for (let i = 0; i < n; i++) {
    const q = t[0] + ((t[t.length - 1] - t[0]) * i) / (n - 1);
    out.push([interp(q, t, xs), interp(q, t, ys)]);
  }
  return out;
}

export function gaussianSmooth(values: number[][], sigma: number): number[][] {
  if (sigma < 0) throw new Error('sigma must be >= 0');
  if (sigma === 0) return values.map((row) => row.slice());
  const radius = Math.ceil(3 * sigma);
  const T = values.length;
  const d = values[0].length;
  const kernel: number[] = [];
  for (let o = -radius; o <= radius; o++) kernel.push(Math.exp(-0.5 * (o / sigma) ** 2));
  const out: number[][] = [];
  for (let i = 0; i < T; i++) {
    const acc = new Array(d).fill(0);
    let weight = 0;
    for (let o = -radius; o <= radius; o++) {
      const j = i + o;
      if (j < 0 || j >= T) continue;
      const w = kernel[o + radius];
      weight += w;
      for (let c = 0; c < d; c++) acc[c] += w * values[j][c];
    }
    out.push(acc.map((v) => v / weight));
  }
  return out;
}

export function previewCurve(points: SketchPoint[], targetFps: number, sigma: number): number[][] {
  return gaussianSmooth(resampleSketch(points, targetFps), sigma);
}
