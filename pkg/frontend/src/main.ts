// App wiring: motion picker, curve editor with keyframe palette, parameter
// panel, align button, and the stick-figure playback view.

import { ApiClient } from './api';
import { CurveEditor } from './curveEditor';
import { addHardKeyframe, addSoftKeyframe } from './keyframes';
import type { HardKeyframe, SoftKeyframe } from './keyframes';
import { buildAlignRequest } from './payload';
import {
  curveParameter, frameAtTime, frameSegments, resultBounds, wrapDistance,
} from './playback';
import type { ViewAxis } from './playback';
import { DEFAULT_PARAMS } from './types';
import type { AlignResult, MotionSummary } from './types';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function toast(message: string) {
  const el = $('toast');
  el.textContent = message;
  el.classList.add('visible');
  setTimeout(() => el.classList.remove('visible'), 4000);
}

class PlaybackView {
  result: AlignResult | null = null;
  playing = false;
  axis: ViewAxis = 'z';
  loop = false;
  frame = 0;
  private startedAt = 0;
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, private onFrame: (param: number) => void) {
    this.ctx = canvas.getContext('2d')!;
    requestAnimationFrame(() => this.tick());
  }

  show(result: AlignResult, loop: boolean) {
    this.result = result;
    this.loop = loop;
    this.frame = 0;
    this.playing = true;
    this.startedAt = performance.now();
  }

  scrub(frame: number) {
    this.playing = false;
    this.frame = frame;
  }

  private tick() {
    if (this.result) {
      if (this.playing) {
        this.frame = frameAtTime(performance.now() - this.startedAt, this.result.fps,
                                 this.result.frames.length, this.loop);
      }
      this.render();
      this.onFrame(curveParameter(this.frame, this.result.frames.length));
    }
    requestAnimationFrame(() => this.tick());
  }

  private render() {
    const result = this.result!;
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const b = resultBounds(result, this.axis);
    const pad = 20;
    const sx = (canvas.width - 2 * pad) / Math.max(1e-9, b.maxX - b.minX);
    const sy = (canvas.height - 2 * pad) / Math.max(1e-9, b.maxY - b.minY);
    const s = Math.min(sx, sy);
    const px = (x: number) => pad + (x - b.minX) * s;
    const py = (y: number) => canvas.height - pad - (y - b.minY) * s;
    ctx.strokeStyle = '#111827';
    ctx.lineWidth = 3;
    ctx.lineCap = 'round';
    for (const seg of frameSegments(result, this.frame, this.axis)) {
      ctx.beginPath();
      ctx.moveTo(px(seg.x1), py(seg.y1));
      ctx.lineTo(px(seg.x2), py(seg.y2));
      ctx.stroke();
    }
    $('frame-label').textContent = `frame ${this.frame + 1}/${result.frames.length}`;
  }
}

async function init() {
  const api = new ApiClient();
  const editor = new CurveEditor($('sketch-canvas') as HTMLCanvasElement);
  let soft: SoftKeyframe[] = [];
  let hard: HardKeyframe[] = [];
  let motions: MotionSummary[] = [];
  let tool: 'draw' | 'soft' | 'hard' = 'draw';
  let scrubFrame = 0;

  const playback = new PlaybackView($('playback-canvas') as HTMLCanvasElement, (param) => {
    editor.render(param, markers());
  });

  const markers = () => [
    ...soft.map((k) => ({ x: k.x, y: k.y, hard: false })),
    ...hard.map((k) => {
      const [x, y] = editor.preview[Math.min(k.controlStart, editor.preview.length - 1)] ?? [0, 0];
      return { x, y, hard: true };
    }),
  ];

  const motionSelect = $('motion-select') as HTMLSelectElement;
  try {
    motions = await api.listMotions();
    motionSelect.innerHTML = motions
      .map((m) => `<option value="${m.id}">${m.name} (${m.frames}f)</option>`)
      .join('');
  } catch (err) {
    toast(String(err));
  }

  const poseScrub = $('pose-scrub') as HTMLInputElement;
  motionSelect.addEventListener('change', () => {
    const m = motions.find((mm) => mm.id === motionSelect.value);
    poseScrub.max = String(Math.max(0, (m?.frames ?? 1) - DEFAULT_PARAMS.patch_size));
  });
  motionSelect.dispatchEvent(new Event('change'));

  for (const t of ['draw', 'soft', 'hard'] as const) {
    $(`tool-${t}`).addEventListener('click', () => {
      tool = t;
      ['draw', 'soft', 'hard'].forEach((u) =>
        $(`tool-${u}`).classList.toggle('active', u === t));
    });
  }

  ($('sketch-canvas') as HTMLCanvasElement).addEventListener('pointerdown', (e) => {
    if (tool === 'draw') return;
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * 800;
    const y = ((e.clientY - rect.top) / rect.height) * 500;
    const motionFrame = Number(poseScrub.value);
    const weight = Number(($('kf-weight') as HTMLInputElement).value);
    try {
      if (tool === 'soft') {
        soft = addSoftKeyframe(soft, x, y, motionFrame, weight);
      } else {
        hard = addHardKeyframe(hard, editor.preview, x, y, motionFrame,
                               DEFAULT_PARAMS.patch_size, 25);
      }
      editor.render(null, markers());
    } catch (err) {
      toast(String(err));
    }
    e.stopImmediatePropagation();
  }, true);

  editor.onChange = () => {
    hard = []; // the curve changed; snapped positions are stale
    editor.render(null, markers());
  };

  $('clear-kf').addEventListener('click', () => {
    soft = [];
    hard = [];
    editor.render(null, markers());
  });

  $('align-btn').addEventListener('click', async () => {
    const params = {
      ...DEFAULT_PARAMS,
      alpha: Number(($('param-alpha') as HTMLInputElement).value),
      lambda: Number(($('param-lambda') as HTMLInputElement).value),
    };
    editor.sigma = Number(($('param-sigma') as HTMLInputElement).value);
    editor.refresh();
    const loop = ($('param-loop') as HTMLInputElement).checked;
    let request;
    try {
      request = buildAlignRequest({
        motionId: motionSelect.value,
        points: editor.points,
        sigma: editor.sigma,
        targetFps: editor.targetFps,
        params,
        softKeyframes: soft,
        hardKeyframes: hard,
        loop,
      });
    } catch (err) {
      toast(String(err));
      return;
    }
    $('align-btn').setAttribute('disabled', '1');
    $('status').textContent = 'aligning…';
    try {
      const result = await api.align(request);
      playback.show(result, loop);
      const scrubber = $('frame-scrub') as HTMLInputElement;
      scrubber.max = String(result.frames.length - 1);
      if (loop) {
        const { seam, medianStep } = wrapDistance(result);
        $('status').textContent =
          `done; loop seam ${seam.toExponential(1)} vs median step ${medianStep.toExponential(1)}`;
      } else {
        $('status').textContent =
          `done (${result.trace_summary.records} solver records)`;
      }
    } catch (err) {
      if ((err as Error).name !== 'AbortError') toast(String(err));
      $('status').textContent = '';
    } finally {
      $('align-btn').removeAttribute('disabled');
    }
  });

  $('play-btn').addEventListener('click', () => {
    playback.playing = !playback.playing;
  });
  ($('frame-scrub') as HTMLInputElement).addEventListener('input', (e) => {
    scrubFrame = Number((e.target as HTMLInputElement).value);
    playback.scrub(scrubFrame);
  });
  ($('axis-select') as HTMLSelectElement).addEventListener('change', (e) => {
    playback.axis = (e.target as HTMLSelectElement).value as ViewAxis;
  });
}

init().catch((err) => toast(String(err)));
