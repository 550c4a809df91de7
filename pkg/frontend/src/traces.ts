/** Rolling trace buffers for the angle/torque plots.
 *
 * Points are kept time-ordered over a sliding window; at the stream's 50 Hz
 * a 10 s window holds exactly 500 points, and MAX_POINTS hard-caps the
 * buffer even if frames ever arrive faster.
 */

export const WINDOW_SEC = 10;
export const MAX_POINTS = 500;

export interface TracePoint {
  t: number;
  v: number;
}

export class TraceBuffer {
  readonly points: TracePoint[] = [];

  /** Append a sample; out-of-order times are ignored to keep the buffer
   * time-ordered (a session restart should clear() instead). */
  push(t: number, v: number): void {
    const last = this.points[this.points.length - 1];
    if (last !== undefined && t <= last.t) return;
    this.points.push({ t, v });
    const cutoff = t - WINDOW_SEC;
    while (this.points.length > 0 && this.points[0].t < cutoff) {
      this.points.shift();
    }
    while (this.points.length > MAX_POINTS) {
      this.points.shift();
    }
  }

  clear(): void {
    this.points.length = 0;
  }

  get length(): number {
    return this.points.length;
  }
}
