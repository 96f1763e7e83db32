// Keyframe palette logic. Soft keyframes live anywhere on the canvas (the
// dropped point becomes a constant example patch); hard keyframes must sit
// on the drawn curve, snapped to the nearest sample, and pin a window of
// curve time to a window of original-motion frames.

import type { HardKeyframePayload, SoftKeyframePayload } from './types';

export interface SoftKeyframe {
  x: number;
  y: number;
  motionFrame: number;
  weight: number;
}

export interface HardKeyframe {
  controlStart: number; // resampled-curve frame index
  motionFrame: number;
  length: number;
}

export function addSoftKeyframe(
  list: SoftKeyframe[],
  x: number,
  y: number,
  motionFrame: number,
  weight = 1.0,
): SoftKeyframe[] {
  if (weight <= 0) throw new Error('keyframe weight must be > 0');
  return [...list, { x, y, motionFrame, weight }];
}

/** Nearest resampled-curve sample to a canvas point, with its distance. */
export function nearestCurveSample(
  curve: number[][],
  x: number,
  y: number,
): { index: number; distance: number } {
  let best = 0;
  let bestD = Infinity;
  for (let i = 0; i < curve.length; i++) {
    const dx = curve[i][0] - x;
    const dy = curve[i][1] - y;
    const d = Math.hypot(dx, dy);
    if (d < bestD) {
      bestD = d;
      best = i;
    }
  }
  return { index: best, distance: bestD };
}

export function addHardKeyframe(
  list: HardKeyframe[],
  curve: number[][],
  x: number,
  y: number,
  motionFrame: number,
  length: number,
  snapRadius: number,
): HardKeyframe[] {
  const { index, distance } = nearestCurveSample(curve, x, y);
  if (distance > snapRadius) {
    throw new Error('hard keyframes must be placed on the curve');
  }
  const start = Math.max(0, Math.min(index - Math.floor(length / 2), curve.length - length));
  for (const kf of list) {
    if (start < kf.controlStart + kf.length && kf.controlStart < start + length) {
      throw new Error('hard keyframe ranges overlap');
    }
  }
  return [...list, { controlStart: start, motionFrame, length }];
}

export function softPayload(list: SoftKeyframe[]): SoftKeyframePayload[] {
  return list.map((kf) => ({
    canvas_patch: [kf.x, kf.y],
    motion_frame_start: kf.motionFrame,
    weight: kf.weight,
  }));
}

export function hardPayload(list: HardKeyframe[]): HardKeyframePayload[] {
  return list.map((kf) => ({
    control_start: kf.controlStart,
    control_end: kf.controlStart + kf.length,
    motion_start: kf.motionFrame,
  }));
}
