// Stick-figure playback math: orthographic projection of world-space joint
// positions, frame timing with loop wrap, and the frame <-> curve-parameter
// mapping for the synchronized dot.

import type { AlignResult } from './types';

export type ViewAxis = 'x' | 'y' | 'z';

export interface Segment2D {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export function projectJoint(p: number[], axis: ViewAxis): [number, number] {
  // drop the view axis; keep y pointing up where it exists
  if (axis === 'z') return [p[0], p[1]];
  if (axis === 'x') return [p[2], p[1]];
  return [p[0], p[2]];
}

export function frameSegments(result: AlignResult, frame: number, axis: ViewAxis): Segment2D[] {
  const joints = result.frames[frame];
  return result.bones.map(([a, b]) => {
    const [x1, y1] = projectJoint(joints[a], axis);
    const [x2, y2] = projectJoint(joints[b], axis);
    return { x1, y1, x2, y2 };
  });
}

/** Bounding box over all frames, for fitting the view. */
export function resultBounds(result: AlignResult, axis: ViewAxis) {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const frame of result.frames) {
    for (const joint of frame) {
      const [x, y] = projectJoint(joint, axis);
      minX = Math.min(minX, x); maxX = Math.max(maxX, x);
      minY = Math.min(minY, y); maxY = Math.max(maxY, y);
    }
  }
  return { minX, minY, maxX, maxY };
}

export function frameAtTime(elapsedMs: number, fps: number, nFrames: number, loop: boolean): number {
  const raw = Math.floor((elapsedMs / 1000) * fps);
  if (loop) return ((raw % nFrames) + nFrames) % nFrames;
  return Math.min(raw, nFrames - 1);
}

/** Linear map from a frame index to the drawn-curve parameter in [0, 1]. */
export function curveParameter(frame: number, nFrames: number): number {
  if (nFrames <= 1) return 0;
  return frame / (nFrames - 1);
}

export function wrapDistance(result: AlignResult): { seam: number; medianStep: number } {
  const fr = result.frames;
  const T = fr.length;
  const dist = (a: number[][], b: number[][]) => {
    let s = 0;
    for (let j = 0; j < a.length; j++) {
      s += (a[j][0] - b[j][0]) ** 2 + (a[j][1] - b[j][1]) ** 2 + (a[j][2] - b[j][2]) ** 2;
    }
    return Math.sqrt(s);
  };
  const steps: number[] = [];
  for (let t = 1; t < T; t++) steps.push(dist(fr[t - 1], fr[t]));
  steps.sort((a, b) => a - b);
  const medianStep = steps[Math.floor(steps.length / 2)];
  return { seam: dist(fr[0], fr[T - 1]), medianStep };
}
