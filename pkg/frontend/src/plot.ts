/** Rolling angle and load-estimate plots for the selected joint.
 *
 * Two stacked panels over the trace window: angle (rad) on top, estimated
 * load torque (N*m) below, one polyline per unit. Buffers cap themselves at
 * 500 points, so drawing cost is bounded. Empty buffers draw axes only.
 */

import type { Ctx2D } from "./scene.js";
import { ROBOT_COLORS } from "./scene.js";
import type { RobotName } from "./protocol.js";
import { ROBOT_NAMES } from "./protocol.js";
import type { TraceBuffer } from "./traces.js";
import { WINDOW_SEC } from "./traces.js";
import type { SessionView } from "./view.js";

export interface PlotReport {
  panels: number;
  pointsDrawn: number;
}

const MARGIN = { left: 46, right: 8, top: 18, bottom: 16 };

interface Panel {
  x: number;
  y: number;
  w: number;
  h: number;
}

function valueRange(buffers: Record<RobotName, TraceBuffer>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const name of ROBOT_NAMES) {
    for (const p of buffers[name].points) {
      if (p.v < lo) lo = p.v;
      if (p.v > hi) hi = p.v;
    }
  }
  if (lo > hi) return [-1, 1];
  if (hi - lo < 1e-6) return [lo - 0.5, hi + 0.5];
  const pad = 0.08 * (hi - lo);
  return [lo - pad, hi + pad];
}

function latestTime(buffers: Record<RobotName, TraceBuffer>): number {
  let t = 0;
  for (const name of ROBOT_NAMES) {
    const pts = buffers[name].points;
    if (pts.length > 0) t = Math.max(t, pts[pts.length - 1].t);
  }
  return t;
}

function drawPanel(ctx: Ctx2D, panel: Panel, title: string,
                   buffers: Record<RobotName, TraceBuffer>): number {
  ctx.strokeStyle = "#dadce0";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  ctx.beginPath();
  ctx.moveTo(panel.x, panel.y);
  ctx.lineTo(panel.x, panel.y + panel.h);
  ctx.lineTo(panel.x + panel.w, panel.y + panel.h);
  ctx.stroke();

  ctx.fillStyle = "#5f6368";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, panel.x, panel.y - 5);

  const [lo, hi] = valueRange(buffers);
  const t1 = latestTime(buffers);
  const t0 = t1 - WINDOW_SEC;
  ctx.fillText(hi.toFixed(2), 4, panel.y + 10);
  ctx.fillText(lo.toFixed(2), 4, panel.y + panel.h);

  const sx = (t: number) => panel.x + ((t - t0) / WINDOW_SEC) * panel.w;
  const sy = (v: number) => panel.y + (1 - (v - lo) / (hi - lo)) * panel.h;

  let drawn = 0;
  for (const name of ROBOT_NAMES) {
    const pts = buffers[name].points;
    if (pts.length === 0) continue;
    ctx.strokeStyle = ROBOT_COLORS[name];
    ctx.lineWidth = name === "tape" ? 1 : 1.8;
    ctx.beginPath();
    ctx.moveTo(sx(pts[0].t), sy(pts[0].v));
    for (let i = 1; i < pts.length; i++) {
      ctx.lineTo(sx(pts[i].t), sy(pts[i].v));
    }
    ctx.stroke();
    drawn += pts.length;
  }
  return drawn;
}

export function renderTraces(ctx: Ctx2D, width: number, height: number,
                             view: SessionView): PlotReport {
  ctx.save();
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);

  const panelH = (height - MARGIN.top - MARGIN.bottom - 26) / 2;
  const panelW = width - MARGIN.left - MARGIN.right;
  const j = view.selectedJoint;
  const top: Panel = { x: MARGIN.left, y: MARGIN.top, w: panelW, h: panelH };
  const bottom: Panel = { x: MARGIN.left, y: MARGIN.top + panelH + 26, w: panelW, h: panelH };

  let points = drawPanel(ctx, top, `joint ${j} angle (rad)`, view.angle);
  points += drawPanel(ctx, bottom, `joint ${j} load estimate (N*m)`, view.torque);

  ctx.restore();
  return { panels: 2, pointsDrawn: points };
}
