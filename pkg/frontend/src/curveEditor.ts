// Freehand curve capture on a canvas. Each stroke replaces the previous
// curve; samples carry (x, y, t_ms) with t_ms measured from stroke start.

import { previewCurve } from './smoothing';
import type { SketchPoint } from './types';

export class CurveEditor {
  points: SketchPoint[] = [];
  preview: number[][] = [];
  sigma = 2.0;
  targetFps = 30;
  onChange: (() => void) | null = null;

  private ctx: CanvasRenderingContext2D;
  private drawing = false;
  private strokeStart = 0;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext('2d');
    if (!ctx) throw new Error('canvas 2D context unavailable');
    this.ctx = ctx;
    canvas.addEventListener('pointerdown', (e) => this.begin(e));
    canvas.addEventListener('pointermove', (e) => this.move(e));
    window.addEventListener('pointerup', () => this.end());
  }

  private canvasPos(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((e.clientX - rect.left) / rect.width) * this.canvas.width,
      ((e.clientY - rect.top) / rect.height) * this.canvas.height,
    ];
  }

  private begin(e: PointerEvent) {
    this.drawing = true;
    this.strokeStart = performance.now();
    this.points = [];
    const [x, y] = this.canvasPos(e);
    this.points.push({ x, y, t_ms: 0 });
  }

  private move(e: PointerEvent) {
    if (!this.drawing) return;
    const [x, y] = this.canvasPos(e);
    this.points.push({ x, y, t_ms: performance.now() - this.strokeStart });
    this.refresh();
  }

  private end() {
    if (!this.drawing) return;
    this.drawing = false;
    this.refresh();
    this.onChange?.();
  }

  refresh() {
    this.preview = this.points.length >= 2
      ? previewCurve(this.points, this.targetFps, this.sigma)
      : [];
    this.render();
  }

  render(dotParam: number | null = null, markers: Array<{ x: number; y: number; hard: boolean }> = []) {
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (this.points.length >= 2) {
      ctx.strokeStyle = '#8892a6';
      ctx.lineWidth = 1;
      ctx.beginPath();
      this.points.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
      ctx.stroke();
    }
    if (this.preview.length >= 2) {
      ctx.strokeStyle = '#2563eb';
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      this.preview.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.stroke();
    }
    for (const m of markers) {
      ctx.fillStyle = m.hard ? '#dc2626' : '#16a34a';
      ctx.beginPath();
      ctx.arc(m.x, m.y, 6, 0, Math.PI * 2);
      ctx.fill();
    }
    if (dotParam !== null && this.preview.length >= 2) {
      const idx = Math.min(
        this.preview.length - 1,
        Math.round(dotParam * (this.preview.length - 1)),
      );
      const [x, y] = this.preview[idx];
      ctx.fillStyle = '#f59e0b';
      ctx.beginPath();
      ctx.arc(x, y, 7, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}
