/** Client-side session state: the single source the renderers read from.
 *
 * Everything here is reconstructed from the stream alone, so reloading the
 * page mid-session loses nothing but trace history. The view never
 * extrapolates: renderers draw the latest snapshot as-is and the staleness
 * tracker decides when that snapshot must be flagged as old.
 */

import type { AckMessage, RobotName, StateMessage } from "./protocol.js";
import { N_JOINTS, ROBOT_NAMES } from "./protocol.js";
import { StalenessTracker } from "./staleness.js";
import { TraceBuffer } from "./traces.js";

export type ConnectionState = "connecting" | "connected" | "closed";

export interface SaveInfo {
  tape: string;
  timeline: string;
  steps: number;
}

export class SessionView {
  connection: ConnectionState = "connecting";
  snapshot: StateMessage | null = null;
  /** Pause state; tracked from acks because the stream halts while paused. */
  paused = false;
  /** Blend ratio as last reported by the server. */
  alpha: number | null = null;
  droppedInterventions = 0;
  saveInfo: SaveInfo | null = null;
  lastError: string | null = null;
  /** 1-based joint shown in the plots; joint 4 carries the insertion story. */
  selectedJoint = 4;
  /** Drag force per meter of drag, set by the gain slider. */
  gain = 1.0;

  readonly staleness = new StalenessTracker();
  readonly angle: Record<RobotName, TraceBuffer>;
  readonly torque: Record<RobotName, TraceBuffer>;

  constructor() {
    this.angle = { tape: new TraceBuffer(), follower: new TraceBuffer(), editor: new TraceBuffer() };
    this.torque = { tape: new TraceBuffer(), follower: new TraceBuffer(), editor: new TraceBuffer() };
  }

  applySnapshot(msg: StateMessage, nowMs: number): void {
    this.snapshot = msg;
    this.staleness.feed(nowMs);
    this.paused = msg.config.paused;
    this.alpha = msg.config.alpha;
    this.droppedInterventions = msg.dropped_interventions;
    const j = this.selectedJoint - 1;
    for (const name of ROBOT_NAMES) {
      this.angle[name].push(msg.t, msg.robots[name].q[j]);
      this.torque[name].push(msg.t, msg.robots[name].tau_hat[j]);
    }
  }

  applyAck(msg: AckMessage): void {
    if (msg.action === "pause") this.paused = true;
    if (msg.action === "resume") this.paused = false;
    if (msg.action === "set_alpha" && typeof msg.detail?.alpha === "number") {
      this.alpha = msg.detail.alpha;
    }
    if (msg.action === "save" && msg.detail !== undefined) {
      const { tape, timeline, steps } = msg.detail as Partial<SaveInfo>;
      if (typeof tape === "string" && typeof timeline === "string"
          && typeof steps === "number") {
        this.saveInfo = { tape, timeline, steps };
      }
    }
  }

  applyError(reason: string): void {
    this.lastError = reason;
  }

  setConnection(state: ConnectionState): void {
    this.connection = state;
    if (state !== "connected") this.staleness.reset();
  }

  selectJoint(joint: number): void {
    const j = Math.min(N_JOINTS, Math.max(1, Math.round(joint)));
    if (j === this.selectedJoint) return;
    this.selectedJoint = j;
    for (const name of ROBOT_NAMES) {
      this.angle[name].clear();
      this.torque[name].clear();
    }
  }

  /** True when the scene must be grayed out: disconnected, or the stream
   * went silent without a deliberate pause. */
  overlay(nowMs: number): boolean {
    if (this.connection !== "connected") return true;
    if (this.paused) return false;
    return this.staleness.isStale(nowMs);
  }
}
