// API schema mirrored from the alignment service.

export interface SketchPoint {
  x: number;
  y: number;
  t_ms: number;
}

export interface AlignParams {
  alpha: number;
  lambda: number;
  epsilon: number;
  stages: number;
  iters_per_stage: number;
  patch_size: number;
  coarse_factor: number;
}

export interface SoftKeyframePayload {
  canvas_patch: [number, number];
  motion_frame_start: number;
  weight: number;
}

export interface HardKeyframePayload {
  control_start: number;
  control_end: number;
  motion_start: number;
}

export interface AlignRequest {
  motion_id: string;
  control_type: 'sketch';
  control: { points: SketchPoint[]; sigma: number; target_fps: number };
  params: AlignParams;
  soft_keyframes?: SoftKeyframePayload[];
  hard_keyframes?: HardKeyframePayload[];
  loop: boolean;
}

export interface MotionSummary {
  id: string;
  name: string;
  frames: number;
  fps: number;
  joints: number;
}

export interface AlignResult {
  frames: number[][][]; // frame -> joint -> xyz
  fps: number;
  joint_names: string[];
  bones: [number, number][];
  trace_summary: {
    records: number;
    final_objective: number | null;
    final_marginal_violation: number | null;
  };
}

export const DEFAULT_PARAMS: AlignParams = {
  alpha: 0.8,
  lambda: 0.05,
  epsilon: 1.0,
  stages: 6,
  iters_per_stage: 20,
  patch_size: 11,
  coarse_factor: 4.0,
};
