/** WebSocket client for a live session.
 *
 * Every outbound frame is validated against the protocol schema before it
 * reaches the socket, and interventions are rate-capped at 60 Hz with
 * client-side clamping, mirroring the engine's own policies. While
 * disconnected, interventions are dropped (never queued — a stale nudge must
 * not fire on reconnect) and the drop is surfaced so the UI can warn.
 *
 * The socket, clocks, and reconnect timer are injectable, so the whole
 * machine is testable without a network or real time.
 */

import { INTERVENTION_LIMIT, SEND_RATE_HZ, controlMessage, encodeClientMessage,
         interveneForce, interveneTau, parseServerMessage, ProtocolError }
  from "./protocol.js";
import type { AckMessage, ControlAction, StateMessage } from "./protocol.js";
import { REACH } from "./kinematics.js";
import type { ConnectionState } from "./view.js";

/** Largest planar drag force whose mapped joint torques stay inside the
 * server clamp regardless of arm pose (moment arm never exceeds REACH). */
export const DRAG_FORCE_LIMIT = INTERVENTION_LIMIT / REACH;

export const MIN_SEND_INTERVAL_MS = 1000 / SEND_RATE_HZ;
export const RECONNECT_MS = 1000;

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export interface ClientHooks {
  onState?: (msg: StateMessage) => void;
  onAck?: (msg: AckMessage) => void;
  /** `error` frames sent by the server. */
  onServerError?: (reason: string) => void;
  /** Inbound frames that fail schema validation client-side. */
  onProtocolError?: (reason: string) => void;
  onConnection?: (state: ConnectionState) => void;
  /** Called with the running total of interventions dropped while offline. */
  onDrop?: (count: number) => void;
}

export interface ClientOptions {
  socketFactory?: (url: string) => SocketLike;
  /** Monotonic clock in ms, for rate capping. */
  monotonicMs?: () => number;
  /** Wall clock in seconds, stamped on interventions for staleness checks. */
  wallClockSec?: () => number;
  /** Reconnect delay in ms; 0 disables automatic reconnects. */
  reconnectMs?: number;
  scheduler?: (fn: () => void, ms: number) => void;
}

function defaultSocketFactory(url: string): SocketLike {
  // the runtime shape of a browser WebSocket matches SocketLike for every
  // operation used here (handler assignment, send, close)
  return new WebSocket(url) as unknown as SocketLike;
}

export class SessionClient {
  readonly url: string;
  droppedCount = 0;

  private readonly hooks: ClientHooks;
  private readonly makeSocket: (url: string) => SocketLike;
  private readonly monotonicMs: () => number;
  private readonly wallClockSec: () => number;
  private readonly reconnectMs: number;
  private readonly schedule: (fn: () => void, ms: number) => void;

  private socket: SocketLike | null = null;
  private connState: ConnectionState = "closed";
  private closedByUser = false;
  private lastSendMs = -Infinity;

  constructor(url: string, hooks: ClientHooks = {}, opts: ClientOptions = {}) {
    this.url = url;
    this.hooks = hooks;
    this.makeSocket = opts.socketFactory ?? defaultSocketFactory;
    this.monotonicMs = opts.monotonicMs ?? (() => performance.now());
    this.wallClockSec = opts.wallClockSec ?? (() => Date.now() / 1000);
    this.reconnectMs = opts.reconnectMs ?? RECONNECT_MS;
    this.schedule = opts.scheduler
      ?? ((fn, ms) => { setTimeout(fn, ms); });
  }

  get state(): ConnectionState {
    return this.connState;
  }

  connect(): void {
    this.closedByUser = false;
    this.setState("connecting");
    const sock = this.makeSocket(this.url);
    this.socket = sock;
    sock.onopen = () => this.setState("connected");
    sock.onmessage = (ev) => this.handleFrame(ev.data);
    sock.onerror = () => { /* every error is followed by close */ };
    sock.onclose = () => {
      this.socket = null;
      this.setState("closed");
      if (!this.closedByUser && this.reconnectMs > 0) {
        this.schedule(() => {
          if (!this.closedByUser) this.connect();
        }, this.reconnectMs);
      }
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
    this.socket = null;
    this.setState("closed");
  }

  /** Send joint torques (clamped). Rate-capped unless it is a release. */
  sendTorque(tau: readonly number[]): boolean {
    const release = tau.every((v) => v === 0);
    return this.sendIntervention(
      () => interveneTau(tau, this.wallClockSec()), release);
  }

  /** Send a planar tip drag (clamped). Rate-capped unless it is a release. */
  sendDrag(fx: number, fy: number): boolean {
    const release = fx === 0 && fy === 0;
    return this.sendIntervention(
      () => interveneForce(fx, fy, this.wallClockSec(), DRAG_FORCE_LIMIT),
      release);
  }

  /** Send a zero drag, ending any held intervention. Never rate-capped. */
  release(): boolean {
    return this.sendDrag(0, 0);
  }

  /** Send a control command. Control frames are never rate-capped. */
  control(action: ControlAction, opts: { alpha?: number; id?: number } = {}): boolean {
    if (this.connState !== "connected" || this.socket === null) return false;
    this.socket.send(encodeClientMessage(controlMessage(action, opts)));
    return true;
  }

  private sendIntervention(build: () => ReturnType<typeof interveneTau>,
                           release: boolean): boolean {
    if (this.connState !== "connected" || this.socket === null) {
      this.droppedCount += 1;
      this.hooks.onDrop?.(this.droppedCount);
      return false;
    }
    const now = this.monotonicMs();
    if (!release && now - this.lastSendMs < MIN_SEND_INTERVAL_MS) {
      return false;
    }
    this.socket.send(encodeClientMessage(build()));
    this.lastSendMs = now;
    return true;
  }

  private handleFrame(data: unknown): void {
    let text: string;
    if (typeof data === "string") {
      text = data;
    } else {
      this.hooks.onProtocolError?.("expected a text frame");
      return;
    }
    let msg;
    try {
      msg = parseServerMessage(text);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.hooks.onProtocolError?.(err.message);
        return;
      }
      throw err;
    }
    if (msg.type === "state") this.hooks.onState?.(msg);
    else if (msg.type === "ack") this.hooks.onAck?.(msg);
    else this.hooks.onServerError?.(msg.reason);
  }

  private setState(state: ConnectionState): void {
    if (state === this.connState) return;
    this.connState = state;
    this.hooks.onConnection?.(state);
  }
}
