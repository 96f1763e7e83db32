// Thin fetch client. At most one align request is in flight; a newer
// submission aborts the pending one so stale results never land.

import type { AlignRequest, AlignResult, MotionSummary } from './types';

export class ApiClient {
  private pending: AbortController | null = null;

  constructor(private baseUrl = '') {}

  async listMotions(): Promise<MotionSummary[]> {
    const resp = await fetch(`${this.baseUrl}/api/motions`);
    if (!resp.ok) throw new Error(`listing motions failed (${resp.status})`);
    return resp.json();
  }

  async getMotion(id: string): Promise<AlignResult> {
    const resp = await fetch(`${this.baseUrl}/api/motions/${id}`);
    if (!resp.ok) throw new Error(`loading motion failed (${resp.status})`);
    return resp.json();
  }

  async align(request: AlignRequest): Promise<AlignResult> {
    this.pending?.abort();
    const controller = new AbortController();
    this.pending = controller;
    try {
      const resp = await fetch(`${this.baseUrl}/api/align`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
      if (!resp.ok) {
        const detail = await resp.json().catch(() => ({ detail: resp.statusText }));
        throw new Error(`alignment failed (${resp.status}): ${detail.detail ?? ''}`);
      }
      return await resp.json();
    } finally {
      if (this.pending === controller) this.pending = null;
    }
  }
}
