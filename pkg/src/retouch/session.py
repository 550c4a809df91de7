"""Live retouch sessions over a WebSocket.

One deterministic control loop (run_retouch's thread) owns all simulation
state. The server thread owns all sockets. They meet only at two bounded
thread-safe queues:

  inbound:  parsed client messages, tagged with their arrival wall time
  outbound: encoded frames (snapshots, acks, errors) fanned out to clients

The bridge applies interventions strictly at tick boundaries. A held torque
expires when no fresh message arrives within the staleness horizon, so a
client that vanishes mid-drag stops pushing within 200 ms. The per-tick
effective torque (after clamping, mapping, and staleness policy) lands in
RunLog.intervention, which is the canonical timeline: replaying it through
run_retouch(timeline=...) reproduces the session's retouched tape
bit-identically.

Timeline files (`# retouch-timeline v1`) store those effective torques; see
docs/protocol.md for the wire format and docs/tape-format.md for the files.
"""

import queue
import threading
import time
from pathlib import Path

import numpy as np

from .model import N_JOINTS
from .engine import run_retouch
from .tape import Tape, save_tape
from .scenario import Scenario
from .protocol import (SNAPSHOT_DECIMATION, STALENESS_SEC, ProtocolError,
                       ack_message, clamp_torque, drag_to_torque, encode,
                       error_message, parse, state_message)

TIMELINE_MAGIC = "# retouch-timeline v1"


class SessionError(RuntimeError):
    pass


def save_timeline(path, interventions: np.ndarray, dt: float) -> None:
    """Write per-tick intervention torques; only nonzero rows are stored."""
    path = Path(path)
    lines = [f"{TIMELINE_MAGIC}, dt={dt!r}",
             "step," + ",".join(f"tau{j}" for j in range(1, N_JOINTS + 1))]
    for k, row in enumerate(np.asarray(interventions, dtype=float)):
        if row.any():
            lines.append(f"{k}," + ",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def load_timeline(path) -> dict:
    """Read a timeline file into the {step: torque} dict run_retouch takes."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(TIMELINE_MAGIC):
        raise SessionError(f"{path}: not a retouch-timeline v1 file")
    timeline = {}
    for ln in lines[2:]:
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 1 + N_JOINTS:
            raise SessionError(f"{path}: bad timeline row {ln!r}")
        timeline[int(parts[0])] = np.array([float(v) for v in parts[1:]])
    return timeline


class LiveBridge:
    """Engine-side endpoint of a live session.

    run_retouch calls tick_start/tick_end from the control loop; the server
    thread feeds in_q and drains out_q. `clock` is injectable for tests.
    """

    def __init__(self, scn: Scenario, clock=time.time):
        self.gains = scn.gains
        self.params = scn.params
        self.clock = clock
        self.in_q = queue.Queue(maxsize=256)
        self.out_q = queue.Queue(maxsize=64)
        self.paused = False
        self.stop_reason = None          # None until "save" or "quit"
        self.pending_save_id = None
        self.dropped = 0                 # stale interventions discarded
        self._seq = 0
        self._tau = np.zeros(N_JOINTS)
        self._tau_expiry = -np.inf       # wall time when the held torque lapses

    # ---- server-thread side -------------------------------------------

    def post_text(self, text: str):
        """Queue an encoded frame for broadcast; drops the oldest when full."""
        while True:
            try:
                self.out_q.put_nowait(text)
                return
            except queue.Full:
                try:
                    self.out_q.get_nowait()
                except queue.Empty:
                    pass

    def post(self, msg: dict):
        self.post_text(encode(msg))

    def receive(self, msg: dict):
        """Queue a parsed client message; silently sheds load when full."""
        try:
            self.in_q.put_nowait((msg, self.clock()))
        except queue.Full:
            pass

    # ---- control-loop side ---------------------------------------------

    def tick_start(self, k: int, t: float, editor_state):
        self._drain(editor_state, block=False)
        while self.paused and self.stop_reason is None:
            self._drain(editor_state, block=True)
        if self.stop_reason is not None:
            return np.zeros(N_JOINTS), True
        if self.clock() >= self._tau_expiry and self._tau.any():
            self._tau = np.zeros(N_JOINTS)
        return self._tau.copy(), False

    def tick_end(self, k: int, t: float, log, tape: Tape, out_tape: Tape):
        if k % SNAPSHOT_DECIMATION != 0:
            return
        robots = {
            "tape": {"q": tape.q[k], "dq": tape.dq[k], "tau_hat": tape.tau[k]},
            "follower": _log_robot(log.robots["follower"], k),
            "editor": _log_robot(log.robots["editor"], k),
        }
        contact = {
            "in_contact": log.in_contact[k],
            "lateral_force": log.lateral_force[k],
            "depth": log.depth[k],
            "tube_held": log.tube_held[k],
            "tip": log.tip[k],
        }
        self._seq += 1
        self.post(state_message(self._seq, t, k, self.gains.alpha, self.paused,
                                robots, contact, self.dropped))

    def _drain(self, editor_state, block: bool):
        try:
            msg, arrived = self.in_q.get(timeout=0.05 if block else None) \
                if block else self.in_q.get_nowait()
        except queue.Empty:
            return
        while True:
            if msg["type"] == "intervene":
                self._apply_intervene(msg, arrived, editor_state)
            elif msg["type"] == "control":
                self._apply_control(msg)
            try:
                msg, arrived = self.in_q.get_nowait()
            except queue.Empty:
                return

    def _apply_intervene(self, msg: dict, arrived: float, editor_state):
        if arrived - msg["timestamp"] > STALENESS_SEC:
            self.dropped += 1
            return
        if "tau" in msg:
            tau = np.asarray(msg["tau"], dtype=float)
        else:
            tau = drag_to_torque(msg["force"], editor_state.q, self.params)
        self._tau = clamp_torque(tau)
        self._tau_expiry = arrived + STALENESS_SEC

    def _apply_control(self, msg: dict):
        action, msg_id = msg["action"], msg.get("id")
        if action == "pause":
            self.paused = True
            self.post(ack_message("pause", msg_id))
        elif action == "resume":
            self.paused = False
            self.post(ack_message("resume", msg_id))
        elif action == "set_alpha":
            self.gains.alpha = float(msg["alpha"])
            self.post(ack_message("set_alpha", msg_id, {"alpha": self.gains.alpha}))
        elif action == "save":
            self.stop_reason = "save"
            self.pending_save_id = msg_id
        elif action == "quit":
            self.stop_reason = "quit"
            self.post(ack_message("quit", msg_id))


def _log_robot(rob: dict, k: int) -> dict:
    return {"q": rob["q"][k], "dq": rob["dq"][k], "tau_hat": rob["tau_res_hat"][k]}


class SessionServer:
    """WebSocket fan-out for one bridge; all socket work stays on its thread."""

    def __init__(self, bridge: LiveBridge, host: str = "127.0.0.1", port: int = 8765):
        self.bridge = bridge
        self.host = host
        self.port = port
        self.clients = set()
        self._ready = threading.Event()
        self._startup_error = None
        self._loop = None
        self._stop_evt = None
        self._thread = None

    def start(self):
        self._thread = threading.Thread(target=self._run, name="retouch-session",
                                        daemon=True)
        self._thread.start()
        if not self._ready.wait(timeout=10):
            raise SessionError("session server failed to start")
        if self._startup_error is not None:
            raise SessionError(f"session server failed: {self._startup_error}")

    def _run(self):
        import asyncio

        async def main():
            import websockets

            self._loop = asyncio.get_running_loop()
            self._stop_evt = asyncio.Event()
            try:
                server = await websockets.serve(self._handler, self.host, self.port)
            except OSError as e:
                self._startup_error = e
                self._ready.set()
                return
            broadcaster = asyncio.create_task(self._broadcast())
            self._ready.set()
            await self._stop_evt.wait()
            broadcaster.cancel()
            server.close()
            await server.wait_closed()

        asyncio.run(main())

    async def _handler(self, ws):
        self.clients.add(ws)
        try:
            async for text in ws:
                try:
                    msg = parse(text)
                except ProtocolError as e:
                    await ws.send(encode(error_message(str(e))))
                    continue
                if msg["type"] in ("intervene", "control"):
                    self.bridge.receive(msg)
        except Exception:
            pass
        finally:
            self.clients.discard(ws)

    async def _broadcast(self):
        import asyncio

        loop = asyncio.get_running_loop()
        while True:
            text = await loop.run_in_executor(None, self.bridge.out_q.get)
            if text is None:          # shutdown sentinel
                return
            for ws in list(self.clients):
                try:
                    await ws.send(text)
                except Exception:
                    self.clients.discard(ws)

    def flush(self, timeout: float = 2.0):
        """Wait for queued outbound frames to reach the sockets."""
        deadline = time.monotonic() + timeout
        while not self.bridge.out_q.empty() and time.monotonic() < deadline:
            time.sleep(0.01)
        time.sleep(0.05)              # let the last ws.send complete

    def stop(self):
        if self._thread is None:
            return
        self.flush()
        self.bridge.out_q.put(None)
        if self._loop is not None and self._stop_evt is not None:
            self._loop.call_soon_threadsafe(self._stop_evt.set)
        self._thread.join(timeout=5)
        self._thread = None


def run_live_retouch(tape: Tape, scn: Scenario, out_path,
                     port: int = 8765, host: str = "127.0.0.1"):
    """Serve a live retouch session and run the tape to completion.

    The simulation runs at wall-clock rate; clients may connect at any time
    (with none, the run is simply unaffected). On a save command, or when the
    tape ends, the retouched tape and the intervention timeline are written
    and the save ack (carrying both paths) is sent. On quit nothing is
    written. Returns (out_tape, log, report, paths) where paths is
    (tape_path, timeline_path) or None.
    """
    out_path = Path(out_path)
    bridge = LiveBridge(scn)
    server = SessionServer(bridge, host, port)
    server.start()
    try:
        out_tape, log, report = run_retouch(tape, scn, bridge=bridge, realtime=True)
        paths = None
        if bridge.stop_reason != "quit":
            timeline_path = out_path.with_name(out_path.stem + ".timeline.csv")
            save_tape(out_tape, out_path)
            save_timeline(timeline_path, log.intervention, scn.dt)
            paths = (out_path, timeline_path)
            bridge.post(ack_message("save", bridge.pending_save_id,
                                    {"tape": str(out_path),
                                     "timeline": str(timeline_path),
                                     "steps": len(out_tape)}))
        return out_tape, log, report, paths
    finally:
        server.stop()
