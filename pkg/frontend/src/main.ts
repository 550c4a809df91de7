/** Dashboard wiring: DOM controls, canvases, drag input, session client.
 *
 * Single-threaded by construction: network callbacks only mutate the
 * SessionView, and one requestAnimationFrame loop reads it to draw. Drags on
 * the editor tip become planar force interventions (client-clamped and
 * rate-capped in net.ts); release sends the zero message that ends the hold.
 */

import { DRAG_FORCE_LIMIT, SessionClient } from "./net.js";
import { N_JOINTS } from "./protocol.js";
import { armPose } from "./kinematics.js";
import { renderScene, Viewport } from "./scene.js";
import { renderTraces } from "./plot.js";
import { SessionView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8765";
const url = `ws://${host || "127.0.0.1"}:${port}`;

const view = new SessionView();
let clientWarnings = 0;

const client = new SessionClient(url, {
  onState: (msg) => view.applySnapshot(msg, performance.now()),
  onAck: (msg) => view.applyAck(msg),
  onServerError: (reason) => view.applyError(reason),
  onProtocolError: (reason) => view.applyError(`bad frame: ${reason}`),
  onConnection: (state) => view.setConnection(state),
  onDrop: (count) => { clientWarnings = count; },
});

const sceneCanvas = el<HTMLCanvasElement>("scene");
const plotCanvas = el<HTMLCanvasElement>("plots");
const sceneCtx = sceneCanvas.getContext("2d")!;
const plotCtx = plotCanvas.getContext("2d")!;

// --- controls ---------------------------------------------------------------

const jointSelect = el<HTMLSelectElement>("joint");
for (let j = 1; j <= N_JOINTS; j++) {
  const opt = document.createElement("option");
  opt.value = String(j);
  opt.textContent = `joint ${j}`;
  if (j === view.selectedJoint) opt.selected = true;
  jointSelect.appendChild(opt);
}
jointSelect.addEventListener("change", () => {
  view.selectJoint(Number(jointSelect.value));
});

const alphaSlider = el<HTMLInputElement>("alpha");
const alphaLabel = el<HTMLSpanElement>("alpha-value");
alphaSlider.addEventListener("input", () => {
  alphaLabel.textContent = Number(alphaSlider.value).toFixed(2);
});
alphaSlider.addEventListener("change", () => {
  client.control("set_alpha", { alpha: Number(alphaSlider.value) });
});

const gainSlider = el<HTMLInputElement>("gain");
const gainLabel = el<HTMLSpanElement>("gain-value");
const updateGain = () => {
  view.gain = Number(gainSlider.value);
  gainLabel.textContent = `${view.gain.toFixed(0)} N/m`;
};
gainSlider.addEventListener("input", updateGain);
updateGain();

let controlId = 0;
el<HTMLButtonElement>("pause").addEventListener("click",
  () => client.control("pause", { id: ++controlId }));
el<HTMLButtonElement>("resume").addEventListener("click",
  () => client.control("resume", { id: ++controlId }));
el<HTMLButtonElement>("save").addEventListener("click",
  () => client.control("save", { id: ++controlId }));
el<HTMLButtonElement>("quit").addEventListener("click",
  () => client.control("quit", { id: ++controlId }));

// --- drag intervention -------------------------------------------------------

let dragging = false;
let pointerPx: [number, number] = [0, 0];

function editorTipScreen(vp: Viewport): [number, number] | null {
  if (view.snapshot === null) return null;
  const tip = armPose(view.snapshot.robots.editor.q).tip;
  return vp.toScreen(tip[0], tip[1]);
}

function canvasPos(ev: PointerEvent): [number, number] {
  const rect = sceneCanvas.getBoundingClientRect();
  return [ev.clientX - rect.left, ev.clientY - rect.top];
}

sceneCanvas.addEventListener("pointerdown", (ev) => {
  const vp = new Viewport(sceneCanvas.width, sceneCanvas.height);
  const tip = editorTipScreen(vp);
  if (tip === null) return;
  const [px, py] = canvasPos(ev);
  if (Math.hypot(px - tip[0], py - tip[1]) > 30) return;
  dragging = true;
  pointerPx = [px, py];
  sceneCanvas.setPointerCapture(ev.pointerId);
});

sceneCanvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  pointerPx = canvasPos(ev);
  const vp = new Viewport(sceneCanvas.width, sceneCanvas.height);
  const tip = editorTipScreen(vp);
  if (tip === null) return;
  const [dx, dy] = vp.deltaToWorld(pointerPx[0] - tip[0], pointerPx[1] - tip[1]);
  client.sendDrag(view.gain * dx, view.gain * dy);
});

const endDrag = () => {
  if (!dragging) return;
  dragging = false;
  client.release();
};
sceneCanvas.addEventListener("pointerup", endDrag);
sceneCanvas.addEventListener("pointercancel", endDrag);

// --- render loop -------------------------------------------------------------

const statusLine = el<HTMLDivElement>("status");
const saveLine = el<HTMLDivElement>("save-info");

function statusText(): string {
  const parts = [`session ${url}`, view.connection];
  if (view.snapshot !== null) {
    parts.push(`t=${view.snapshot.t.toFixed(2)}s`,
               `seq=${view.snapshot.seq}`);
  }
  if (view.alpha !== null) parts.push(`alpha=${view.alpha.toFixed(2)}`);
  if (view.paused) parts.push("paused");
  if (view.droppedInterventions > 0) {
    parts.push(`server dropped ${view.droppedInterventions} stale`);
  }
  if (clientWarnings > 0) {
    parts.push(`dropped ${clientWarnings} while offline`);
  }
  if (view.lastError !== null) parts.push(`last error: ${view.lastError}`);
  return parts.join(" | ");
}

function frame(): void {
  const now = performance.now();
  renderScene(sceneCtx, sceneCanvas.width, sceneCanvas.height, view, now);
  if (dragging && view.snapshot !== null) {
    const vp = new Viewport(sceneCanvas.width, sceneCanvas.height);
    const tip = editorTipScreen(vp);
    if (tip !== null) {
      sceneCtx.strokeStyle = "#e8710a";
      sceneCtx.lineWidth = 2;
      sceneCtx.setLineDash([4, 3]);
      sceneCtx.beginPath();
      sceneCtx.moveTo(tip[0], tip[1]);
      sceneCtx.lineTo(pointerPx[0], pointerPx[1]);
      sceneCtx.stroke();
      sceneCtx.setLineDash([]);
    }
  }
  renderTraces(plotCtx, plotCanvas.width, plotCanvas.height, view);
  statusLine.textContent = statusText();
  saveLine.textContent = view.saveInfo === null
    ? ""
    : `saved ${view.saveInfo.steps} steps -> ${view.saveInfo.tape} `
      + `(timeline: ${view.saveInfo.timeline})`;
  requestAnimationFrame(frame);
}

client.connect();
requestAnimationFrame(frame);

// surfaced for debugging from the browser console
declare global {
  interface Window {
    retouch: { view: SessionView; client: SessionClient; dragForceLimit: number };
  }
}
window.retouch = { view, client, dragForceLimit: DRAG_FORCE_LIMIT };
