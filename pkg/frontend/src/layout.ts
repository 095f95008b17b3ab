/** Seeded force-directed layout over the similarity matrix.
 *
 * Pure functions: same graph, seed and iteration count give identical
 * positions, so the view is stable across reloads. Strong edges pull
 * nodes together; every pair repels; a weak spring recenters the cloud.
 */

import type { Point } from "./state.js";

export interface LayoutOptions {
  width: number;
  height: number;
  iterations: number;
  seed: number;
}

export const DEFAULT_LAYOUT: LayoutOptions = {
  width: 800,
  height: 600,
  iterations: 200,
  seed: 42,
};

/** Deterministic uniform generator in [0, 1). */
export function seededRandom(seed: number): () => number {
  let state = (seed >>> 0) || 1;
  return () => {
    // xorshift32
    state ^= state << 13;
    state ^= state >>> 17;
    state ^= state << 5;
    state >>>= 0;
    return state / 4294967296;
  };
}

export function runLayout(
  nodeIds: number[],
  S: number[][],
  options: Partial<LayoutOptions> = {},
): Map<number, Point> {
  const { width, height, iterations, seed } = { ...DEFAULT_LAYOUT, ...options };
  const n = nodeIds.length;
  const rand = seededRandom(seed);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * 0.35;

  const xs = new Array<number>(n);
  const ys = new Array<number>(n);
  for (let i = 0; i < n; i++) {
    const angle = (2 * Math.PI * i) / Math.max(n, 1) + rand() * 0.3;
    xs[i] = cx + radius * Math.cos(angle) + (rand() - 0.5) * 20;
    ys[i] = cy + radius * Math.sin(angle) + (rand() - 0.5) * 20;
  }
  if (n === 1) {
    return new Map([[nodeIds[0]!, { x: cx, y: cy }]]);
  }

  const area = width * height;
  const k = Math.sqrt(area / n);
  const fx = new Array<number>(n);
  const fy = new Array<number>(n);

  for (let step = 0; step < iterations; step++) {
    fx.fill(0);
    fy.fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = xs[i]! - xs[j]!;
        let dy = ys[i]! - ys[j]!;
        let dist = Math.hypot(dx, dy);
        if (dist < 1e-6) {
          // split coincident nodes deterministically
          dx = 1e-3 * (i - j);
          dy = 1e-3;
          dist = Math.hypot(dx, dy);
        }
        const repel = (k * k) / dist;
        const weight = S[i]?.[j] ?? 0;
        const attract = (dist * dist * weight) / k;
        const force = (repel - attract) / dist;
        fx[i]! += dx * force;
        fy[i]! += dy * force;
        fx[j]! -= dx * force;
        fy[j]! -= dy * force;
      }
      fx[i]! += (cx - xs[i]!) * 0.02;
      fy[i]! += (cy - ys[i]!) * 0.02;
    }
    // cooling schedule caps the step size
    const limit = (k / 2) * (1 - step / iterations) + 1;
    for (let i = 0; i < n; i++) {
      const size = Math.hypot(fx[i]!, fy[i]!);
      const scale = size > limit ? limit / size : 1;
      xs[i] = Math.min(width - 20, Math.max(20, xs[i]! + fx[i]! * scale));
      ys[i] = Math.min(height - 20, Math.max(20, ys[i]! + fy[i]! * scale));
    }
  }

  const out = new Map<number, Point>();
  for (let i = 0; i < n; i++) {
    out.set(nodeIds[i]!, { x: xs[i]!, y: ys[i]! });
  }
  return out;
}

export interface Edge {
  i: number;
  j: number;
  weight: number;
  opacity: number;
}

/** Opacity ramps linearly from the threshold up to weight 1. */
export function edgeOpacity(weight: number, threshold: number): number {
  if (weight <= threshold) return 0;
  const span = 1 - threshold;
  if (span <= 0) return 0;
  return Math.min(1, (weight - threshold) / span);
}

/** Upper-triangle edges whose weight clears the slider threshold. */
export function edgesAbove(S: number[][], threshold: number): Edge[] {
  const edges: Edge[] = [];
  for (let i = 0; i < S.length; i++) {
    const row = S[i]!;
    for (let j = i + 1; j < row.length; j++) {
      const weight = row[j]!;
      const opacity = edgeOpacity(weight, threshold);
      if (opacity > 0) {
        edges.push({ i, j, weight, opacity });
      }
    }
  }
  return edges;
}
