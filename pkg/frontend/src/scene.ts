/** Planar bench view: rack, holes, and the three overlaid arms.
 *
 * Renders from the latest snapshot only (no extrapolation). The drawing
 * context is typed as the small Ctx2D subset actually used, so tests can
 * pass a recording stub instead of a real canvas.
 */

import { armPose, HOLE_DEPTH, HOLE_MOUTH_HALF_WIDTH, SOURCE_HOLE,
         TARGET_HOLE } from "./kinematics.js";
import type { RobotName } from "./protocol.js";
import { ROBOT_NAMES } from "./protocol.js";
import type { SessionView } from "./view.js";

export interface Ctx2D {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  save(): void;
  restore(): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  setLineDash(segments: number[]): void;
  fillText(text: string, x: number, y: number): void;
}

export const ROBOT_COLORS: Record<RobotName, string> = {
  tape: "#9aa0a6",
  follower: "#1a73e8",
  editor: "#e8710a",
};

/** World box shown by the scene, meters. */
const WORLD = { x0: -0.30, x1: 0.55, y0: -0.08, y1: 0.62 };

export class Viewport {
  readonly scale: number;
  readonly offsetX: number;
  readonly offsetY: number;

  constructor(readonly width: number, readonly height: number) {
    this.scale = Math.min(width / (WORLD.x1 - WORLD.x0),
                          height / (WORLD.y1 - WORLD.y0));
    this.offsetX = -WORLD.x0 * this.scale;
    this.offsetY = WORLD.y1 * this.scale;
  }

  /** World (x up-right, meters) to screen (y down, px). */
  toScreen(x: number, y: number): [number, number] {
    return [this.offsetX + x * this.scale, this.offsetY - y * this.scale];
  }

  /** Screen pixel delta to world delta (flips y). */
  deltaToWorld(dxPx: number, dyPx: number): [number, number] {
    return [dxPx / this.scale, -dyPx / this.scale];
  }
}

export interface SceneReport {
  overlay: "disconnected" | "stale" | null;
  contactLit: boolean;
  tubeHeld: boolean;
  pausedBadge: boolean;
  armsDrawn: number;
}

function drawHole(ctx: Ctx2D, vp: Viewport, hole: readonly [number, number]): void {
  const [hx, hy] = hole;
  const w = HOLE_MOUTH_HALF_WIDTH;
  ctx.beginPath();
  const [x0, y0] = vp.toScreen(hx - w, hy);
  ctx.moveTo(x0, y0);
  const [x1, y1] = vp.toScreen(hx - w, hy - HOLE_DEPTH);
  ctx.lineTo(x1, y1);
  const [x2, y2] = vp.toScreen(hx + w, hy - HOLE_DEPTH);
  ctx.lineTo(x2, y2);
  const [x3, y3] = vp.toScreen(hx + w, hy);
  ctx.lineTo(x3, y3);
  ctx.stroke();
}

function drawRack(ctx: Ctx2D, vp: Viewport): void {
  ctx.strokeStyle = "#5f6368";
  ctx.lineWidth = 2;
  ctx.setLineDash([]);
  const y = SOURCE_HOLE[1];
  const spans: Array<[number, number]> = [
    [WORLD.x0 + 0.26, SOURCE_HOLE[0] - HOLE_MOUTH_HALF_WIDTH],
    [SOURCE_HOLE[0] + HOLE_MOUTH_HALF_WIDTH, TARGET_HOLE[0] - HOLE_MOUTH_HALF_WIDTH],
    [TARGET_HOLE[0] + HOLE_MOUTH_HALF_WIDTH, WORLD.x1 - 0.04],
  ];
  for (const [xa, xb] of spans) {
    ctx.beginPath();
    const [sx0, sy0] = vp.toScreen(xa, y);
    ctx.moveTo(sx0, sy0);
    const [sx1, sy1] = vp.toScreen(xb, y);
    ctx.lineTo(sx1, sy1);
    ctx.stroke();
  }
  drawHole(ctx, vp, SOURCE_HOLE);
  drawHole(ctx, vp, TARGET_HOLE);
}

function drawArm(ctx: Ctx2D, vp: Viewport, q: readonly number[],
                 color: string, ghost: boolean): void {
  const pose = armPose(q);
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = ghost ? 2 : 3;
  ctx.setLineDash(ghost ? [6, 4] : []);
  ctx.beginPath();
  const [sx, sy] = vp.toScreen(pose.shoulder[0], pose.shoulder[1]);
  ctx.moveTo(sx, sy);
  const [ex, ey] = vp.toScreen(pose.elbow[0], pose.elbow[1]);
  ctx.lineTo(ex, ey);
  const [tx, ty] = vp.toScreen(pose.tip[0], pose.tip[1]);
  ctx.lineTo(tx, ty);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.beginPath();
  ctx.arc(tx, ty, ghost ? 3 : 5, 0, 2 * Math.PI);
  ctx.fill();
}

export function renderScene(ctx: Ctx2D, width: number, height: number,
                            view: SessionView, nowMs: number): SceneReport {
  const vp = new Viewport(width, height);
  const report: SceneReport = {
    overlay: null,
    contactLit: false,
    tubeHeld: false,
    pausedBadge: false,
    armsDrawn: 0,
  };

  ctx.save();
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);
  drawRack(ctx, vp);

  const snap = view.snapshot;
  if (snap !== null) {
    for (const name of ROBOT_NAMES) {
      drawArm(ctx, vp, snap.robots[name].q, ROBOT_COLORS[name], name === "tape");
      report.armsDrawn += 1;
    }

    const [cx, cy] = vp.toScreen(snap.contact.tip[0], snap.contact.tip[1]);
    if (snap.contact.in_contact) {
      report.contactLit = true;
      ctx.fillStyle = "#d93025";
      ctx.beginPath();
      ctx.arc(cx, cy, 8, 0, 2 * Math.PI);
      ctx.fill();
      ctx.font = "12px sans-serif";
      ctx.fillText(`contact ${snap.contact.lateral_force.toFixed(2)} N`,
                   cx + 12, cy - 8);
    }
    if (snap.contact.tube_held) {
      report.tubeHeld = true;
      ctx.fillStyle = "#188038";
      ctx.font = "12px sans-serif";
      ctx.fillText("tube held", 10, 18);
    }
    if (view.paused) {
      report.pausedBadge = true;
      ctx.fillStyle = "#5f6368";
      ctx.font = "14px sans-serif";
      ctx.fillText("paused", 10, 36);
    }
  } else {
    ctx.fillStyle = "#5f6368";
    ctx.font = "13px sans-serif";
    ctx.fillText("waiting for the first snapshot...", 10, 18);
  }

  if (view.overlay(nowMs)) {
    report.overlay = view.connection !== "connected" ? "disconnected" : "stale";
    ctx.globalAlpha = 0.55;
    ctx.fillStyle = "#80868b";
    ctx.fillRect(0, 0, width, height);
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#202124";
    ctx.font = "16px sans-serif";
    const age = view.staleness.age(nowMs);
    const label = report.overlay === "disconnected"
      ? `disconnected (${view.connection})`
      : `stale: no data for ${age === null ? "?" : Math.round(age)} ms`;
    ctx.fillText(label, 12, height / 2);
  }

  ctx.restore();
  return report;
}
