/** Stream-freshness tracking for the stale-data overlay.
 *
 * The dashboard never extrapolates: when the stream stops (network loss,
 * server gone), the last snapshot stays on screen but must be visibly marked
 * within STALE_AFTER_MS. A deliberate pause also stops the stream; the view
 * layer suppresses the overlay in that case because the freeze is intended.
 */

export const STALE_AFTER_MS = 500;

export class StalenessTracker {
  private lastMs: number | null = null;

  /** Record that a snapshot arrived at `nowMs` (monotonic milliseconds). */
  feed(nowMs: number): void {
    this.lastMs = nowMs;
  }

  /** True when no snapshot has arrived within the staleness horizon. */
  isStale(nowMs: number): boolean {
    return this.lastMs === null || nowMs - this.lastMs >= STALE_AFTER_MS;
  }

  /** Milliseconds since the last snapshot, or null before the first one. */
  age(nowMs: number): number | null {
    return this.lastMs === null ? null : nowMs - this.lastMs;
  }

  reset(): void {
    this.lastMs = null;
  }
}
