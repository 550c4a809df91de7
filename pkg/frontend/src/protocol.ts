/** Live-session message schema, mirroring docs/protocol.md.
 *
 * Inbound frames are parsed and validated before anything touches the view;
 * outbound frames are validated before anything touches the socket, so a
 * malformed message is a bug caught here, never an `error` frame from the
 * server. The numeric policies (torque clamp, staleness horizon, snapshot
 * decimation) repeat the server's constants so the engine never silently
 * alters user intent.
 */

export const N_JOINTS = 8;
/** Per-joint clamp on intervention torques, N*m (server enforces the same). */
export const INTERVENTION_LIMIT = 5.0;
/** Interventions older than this on arrival are dropped by the server, s. */
export const STALENESS_SEC = 0.2;
/** Server sends one state frame per this many 500 Hz ticks (50 Hz stream). */
export const SNAPSHOT_DECIMATION = 10;
/** Outbound intervention rate cap, Hz. */
export const SEND_RATE_HZ = 60;

export const ROBOT_NAMES = ["tape", "follower", "editor"] as const;
export type RobotName = (typeof ROBOT_NAMES)[number];

export const CONTROL_ACTIONS = ["pause", "resume", "save", "set_alpha", "quit"] as const;
export type ControlAction = (typeof CONTROL_ACTIONS)[number];

export interface RobotSnapshot {
  q: number[];
  dq: number[];
  tau_hat: number[];
}

export interface ContactSnapshot {
  in_contact: boolean;
  lateral_force: number;
  depth: number;
  tube_held: boolean;
  tip: [number, number];
}

export interface StateMessage {
  type: "state";
  seq: number;
  t: number;
  step: number;
  config: { alpha: number; paused: boolean };
  robots: Record<RobotName, RobotSnapshot>;
  contact: ContactSnapshot;
  dropped_interventions: number;
}

export interface AckMessage {
  type: "ack";
  action: string;
  id?: number | null;
  detail?: Record<string, unknown>;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage = StateMessage | AckMessage | ErrorMessage;

export interface InterveneMessage {
  type: "intervene";
  timestamp: number;
  tau?: number[];
  force?: [number, number];
}

export interface ControlMessage {
  type: "control";
  action: ControlAction;
  alpha?: number;
  id?: number;
}

export type ClientMessage = InterveneMessage | ControlMessage;

export class ProtocolError extends Error {}

/** Strict number check: rejects booleans, NaN, and infinities like the server. */
function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isNumberList(v: unknown, length: number): v is number[] {
  return Array.isArray(v) && v.length === length && v.every(isFiniteNumber);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

// ---------------------------------------------------------------------------
// outbound validation

/** Returns a reason string for an invalid client message, or null if valid. */
export function validateClientMessage(msg: unknown): string | null {
  if (!isRecord(msg)) return "message must be a JSON object";
  if (msg.type === "intervene") {
    if (!isFiniteNumber(msg.timestamp)) {
      return "intervene.timestamp must be a finite number";
    }
    const hasTau = msg.tau !== undefined;
    const hasForce = msg.force !== undefined;
    if (hasTau === hasForce) {
      return "intervene needs exactly one of 'tau' or 'force'";
    }
    if (hasTau && !isNumberList(msg.tau, N_JOINTS)) {
      return `intervene.tau must be a list of ${N_JOINTS} finite numbers`;
    }
    if (hasForce && !isNumberList(msg.force, 2)) {
      return "intervene.force must be a list of 2 finite numbers";
    }
    return null;
  }
  if (msg.type === "control") {
    if (typeof msg.action !== "string"
        || !(CONTROL_ACTIONS as readonly string[]).includes(msg.action)) {
      return "unknown control action";
    }
    if (msg.action === "set_alpha") {
      if (!isFiniteNumber(msg.alpha) || msg.alpha < 0 || msg.alpha > 1) {
        return "control.alpha must be in [0, 1]";
      }
    }
    if (msg.id !== undefined && !isFiniteNumber(msg.id)) {
      return "control.id must be a number";
    }
    return null;
  }
  return "unknown message type";
}

/** Serialize an outbound message, throwing on anything the server would reject. */
export function encodeClientMessage(msg: ClientMessage): string {
  const reason = validateClientMessage(msg);
  if (reason !== null) throw new ProtocolError(reason);
  return JSON.stringify(msg);
}

// ---------------------------------------------------------------------------
// outbound builders

/** Clamp a torque vector elementwise to the intervention limit. */
export function clampTorque(tau: readonly number[]): number[] {
  return tau.map((v) =>
    Math.min(INTERVENTION_LIMIT, Math.max(-INTERVENTION_LIMIT, v)));
}

export function interveneTau(tau: readonly number[], timestamp: number): InterveneMessage {
  return { type: "intervene", timestamp, tau: clampTorque(tau) };
}

export function interveneForce(fx: number, fy: number, timestamp: number,
                               limit: number): InterveneMessage {
  const mag = Math.hypot(fx, fy);
  const scale = mag > limit ? limit / mag : 1.0;
  return { type: "intervene", timestamp, force: [fx * scale, fy * scale] };
}

export function controlMessage(action: ControlAction,
                               opts: { alpha?: number; id?: number } = {}): ControlMessage {
  const msg: ControlMessage = { type: "control", action };
  if (opts.alpha !== undefined) msg.alpha = opts.alpha;
  if (opts.id !== undefined) msg.id = opts.id;
  return msg;
}

// ---------------------------------------------------------------------------
// inbound parsing

function parseRobot(v: unknown, name: string): RobotSnapshot {
  if (!isRecord(v)) throw new ProtocolError(`state.robots.${name} must be an object`);
  for (const field of ["q", "dq", "tau_hat"] as const) {
    if (!isNumberList(v[field], N_JOINTS)) {
      throw new ProtocolError(
        `state.robots.${name}.${field} must be a list of ${N_JOINTS} finite numbers`);
    }
  }
  return { q: v.q as number[], dq: v.dq as number[], tau_hat: v.tau_hat as number[] };
}

function parseContact(v: unknown): ContactSnapshot {
  if (!isRecord(v)) throw new ProtocolError("state.contact must be an object");
  if (typeof v.in_contact !== "boolean" || typeof v.tube_held !== "boolean") {
    throw new ProtocolError("state.contact flags must be booleans");
  }
  if (!isFiniteNumber(v.lateral_force) || !isFiniteNumber(v.depth)) {
    throw new ProtocolError("state.contact forces must be finite numbers");
  }
  if (!isNumberList(v.tip, 2)) {
    throw new ProtocolError("state.contact.tip must be a list of 2 finite numbers");
  }
  return {
    in_contact: v.in_contact,
    lateral_force: v.lateral_force,
    depth: v.depth,
    tube_held: v.tube_held,
    tip: [v.tip[0], v.tip[1]],
  };
}

function parseState(msg: Record<string, unknown>): StateMessage {
  for (const field of ["seq", "t", "step"] as const) {
    if (!isFiniteNumber(msg[field])) {
      throw new ProtocolError(`state.${field} must be a finite number`);
    }
  }
  if (!isRecord(msg.config) || !isFiniteNumber(msg.config.alpha)
      || typeof msg.config.paused !== "boolean") {
    throw new ProtocolError("state.config must hold alpha and paused");
  }
  if (!isRecord(msg.robots)) throw new ProtocolError("state.robots must be an object");
  const names = Object.keys(msg.robots).sort();
  if (names.join(",") !== "editor,follower,tape") {
    throw new ProtocolError("state.robots must hold exactly tape, follower, editor");
  }
  const robots = {} as Record<RobotName, RobotSnapshot>;
  for (const name of ROBOT_NAMES) robots[name] = parseRobot(msg.robots[name], name);
  if (!isFiniteNumber(msg.dropped_interventions)) {
    throw new ProtocolError("state.dropped_interventions must be a finite number");
  }
  return {
    type: "state",
    seq: msg.seq as number,
    t: msg.t as number,
    step: msg.step as number,
    config: { alpha: msg.config.alpha, paused: msg.config.paused },
    robots,
    contact: parseContact(msg.contact),
    dropped_interventions: msg.dropped_interventions as number,
  };
}

/** Parse one server frame; throws ProtocolError on anything off-schema. */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new ProtocolError("not valid JSON");
  }
  if (!isRecord(raw)) throw new ProtocolError("message must be a JSON object");
  if (raw.type === "state") return parseState(raw);
  if (raw.type === "ack") {
    if (typeof raw.action !== "string") {
      throw new ProtocolError("ack.action must be a string");
    }
    const ack: AckMessage = { type: "ack", action: raw.action };
    if (raw.id !== undefined && raw.id !== null) {
      if (!isFiniteNumber(raw.id)) throw new ProtocolError("ack.id must be a number");
      ack.id = raw.id;
    }
    if (raw.detail !== undefined) {
      if (!isRecord(raw.detail)) throw new ProtocolError("ack.detail must be an object");
      ack.detail = raw.detail;
    }
    return ack;
  }
  if (raw.type === "error") {
    if (typeof raw.reason !== "string") {
      throw new ProtocolError("error.reason must be a string");
    }
    return { type: "error", reason: raw.reason };
  }
  throw new ProtocolError("unknown message type");
}
