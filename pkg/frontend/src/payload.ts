// Assemble the /api/align request body from editor state. The shape must
// stay schema-exact with the service; contract tests compare against a
// recorded fixture.

import { hardPayload, softPayload } from './keyframes';
import type { HardKeyframe, SoftKeyframe } from './keyframes';
import type { AlignParams, AlignRequest, SketchPoint } from './types';

export interface EditorState {
  motionId: string;
  points: SketchPoint[];
  sigma: number;
  targetFps: number;
  params: AlignParams;
  softKeyframes: SoftKeyframe[];
  hardKeyframes: HardKeyframe[];
  loop: boolean;
}

export function buildAlignRequest(state: EditorState): AlignRequest {
  if (state.points.length < 2) {
    throw new Error('draw a curve first (at least 2 points)');
  }
  const body: AlignRequest = {
    motion_id: state.motionId,
    control_type: 'sketch',
    control: {
      points: state.points.map((p) => ({ x: p.x, y: p.y, t_ms: p.t_ms })),
      sigma: state.sigma,
      target_fps: state.targetFps,
    },
    params: { ...state.params },
    loop: state.loop,
  };
  if (state.softKeyframes.length > 0) body.soft_keyframes = softPayload(state.softKeyframes);
  if (state.hardKeyframes.length > 0) body.hard_keyframes = hardPayload(state.hardKeyframes);
  return body;
}
