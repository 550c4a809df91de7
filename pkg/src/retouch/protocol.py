"""Wire protocol for live retouch sessions.

Messages are single JSON objects sent as text frames, one message per frame,
each carrying a ``type`` field:

  server -> client: ``state`` (decimated telemetry snapshot), ``ack``
                    (reply to a control command), ``error`` (rejected input)
  client -> server: ``intervene`` (editor torque or planar tip drag),
                    ``control`` (pause / resume / save / set_alpha / quit)

The exact field layout is documented in docs/protocol.md. This module is
pure: it builds, serializes, parses, and validates messages, and hosts the
session policy constants (torque clamp, staleness horizon, snapshot
decimation). It never touches sockets or simulation state.
"""

import json
import math

import numpy as np

from .model import N_JOINTS, planar_jacobian

INTERVENTION_LIMIT = 5.0      # N*m, per-joint clamp on editor torque
STALENESS_SEC = 0.2           # s, interventions older than this are dropped
SNAPSHOT_DECIMATION = 10      # stream every Nth control tick (500 Hz -> 50 Hz)

MESSAGE_TYPES = ("state", "intervene", "control", "ack", "error")
CONTROL_ACTIONS = ("pause", "resume", "save", "set_alpha", "quit")


class ProtocolError(ValueError):
    """Raised when a message does not follow the documented layout."""


def encode(msg: dict) -> str:
    """Serialize a message dict to a compact single-line JSON text frame."""
    return json.dumps(msg, separators=(",", ":"), allow_nan=False)


def _expect(cond: bool, reason: str):
    if not cond:
        raise ProtocolError(reason)


def _check_vector(value, length: int, name: str):
    _expect(isinstance(value, list) and len(value) == length,
            f"{name} must be a list of {length} numbers")
    for v in value:
        _expect(isinstance(v, (int, float)) and not isinstance(v, bool)
                and math.isfinite(v), f"{name} must contain finite numbers")


def _check_number(value, name: str):
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool)
            and math.isfinite(value), f"{name} must be a finite number")


def parse(text: str) -> dict:
    """Parse and validate one inbound text frame.

    Returns the message dict. Raises ProtocolError with a human-readable
    reason for anything malformed; the session replies with an ``error``
    message carrying that reason.
    """
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"not valid JSON: {e.msg}") from e
    _expect(isinstance(msg, dict), "message must be a JSON object")
    mtype = msg.get("type")
    _expect(mtype in MESSAGE_TYPES,
            f"unknown message type {mtype!r}; expected one of {MESSAGE_TYPES}")
    if mtype == "intervene":
        _validate_intervene(msg)
    elif mtype == "control":
        _validate_control(msg)
    elif mtype == "state":
        _validate_state(msg)
    # ack and error frames sent by a client are ignored by the server, but
    # they still parse so a client library can reuse this function.
    return msg


def _validate_intervene(msg: dict):
    has_tau = "tau" in msg
    has_force = "force" in msg
    _expect(has_tau != has_force,
            "intervene needs exactly one of 'tau' (8 joints) or 'force' (planar x,y)")
    _check_number(msg.get("timestamp"), "intervene.timestamp")
    if has_tau:
        _check_vector(msg["tau"], N_JOINTS, "intervene.tau")
    else:
        _check_vector(msg["force"], 2, "intervene.force")


def _validate_control(msg: dict):
    action = msg.get("action")
    _expect(action in CONTROL_ACTIONS,
            f"unknown control action {action!r}; expected one of {CONTROL_ACTIONS}")
    if action == "set_alpha":
        _check_number(msg.get("alpha"), "control.alpha")
        _expect(0.0 <= msg["alpha"] <= 1.0, "control.alpha must be in [0, 1]")
    if "id" in msg:
        _check_number(msg["id"], "control.id")


def _validate_state(msg: dict):
    for key in ("seq", "t", "step"):
        _check_number(msg.get(key), f"state.{key}")
    _expect(isinstance(msg.get("config"), dict), "state.config must be an object")
    _check_number(msg["config"].get("alpha"), "state.config.alpha")
    _expect(isinstance(msg["config"].get("paused"), bool),
            "state.config.paused must be a boolean")
    robots = msg.get("robots")
    _expect(isinstance(robots, dict) and set(robots) == {"tape", "follower", "editor"},
            "state.robots must hold exactly tape, follower, editor")
    for name, rob in robots.items():
        _expect(isinstance(rob, dict), f"state.robots.{name} must be an object")
        for field in ("q", "dq", "tau_hat"):
            _check_vector(rob.get(field), N_JOINTS, f"state.robots.{name}.{field}")
    contact = msg.get("contact")
    _expect(isinstance(contact, dict), "state.contact must be an object")
    for flag in ("in_contact", "tube_held"):
        _expect(isinstance(contact.get(flag), bool),
                f"state.contact.{flag} must be a boolean")
    for field in ("lateral_force", "depth"):
        _check_number(contact.get(field), f"state.contact.{field}")
    _check_vector(contact.get("tip"), 2, "state.contact.tip")
    _check_number(msg.get("dropped_interventions"), "state.dropped_interventions")


def state_message(seq: int, t: float, step: int, alpha: float, paused: bool,
                  robots: dict, contact: dict, dropped: int) -> dict:
    """Build a snapshot message; robots maps name -> dict(q, dq, tau_hat)."""
    return {
        "type": "state",
        "seq": int(seq),
        "t": float(t),
        "step": int(step),
        "config": {"alpha": float(alpha), "paused": bool(paused)},
        "robots": {
            name: {
                "q": [float(v) for v in rob["q"]],
                "dq": [float(v) for v in rob["dq"]],
                "tau_hat": [float(v) for v in rob["tau_hat"]],
            }
            for name, rob in robots.items()
        },
        "contact": {
            "in_contact": bool(contact["in_contact"]),
            "lateral_force": float(contact["lateral_force"]),
            "depth": float(contact["depth"]),
            "tube_held": bool(contact["tube_held"]),
            "tip": [float(contact["tip"][0]), float(contact["tip"][1])],
        },
        "dropped_interventions": int(dropped),
    }


def intervene_message(timestamp: float, tau=None, force=None) -> dict:
    """Build an intervention message (exactly one of tau/force)."""
    if (tau is None) == (force is None):
        raise ProtocolError("give exactly one of tau or force")
    msg = {"type": "intervene", "timestamp": float(timestamp)}
    if tau is not None:
        msg["tau"] = [float(v) for v in tau]
    else:
        msg["force"] = [float(force[0]), float(force[1])]
    return msg


def control_message(action: str, alpha: float = None, msg_id: int = None) -> dict:
    msg = {"type": "control", "action": action}
    if alpha is not None:
        msg["alpha"] = float(alpha)
    if msg_id is not None:
        msg["id"] = int(msg_id)
    return msg


def ack_message(action: str, msg_id=None, detail: dict = None) -> dict:
    msg = {"type": "ack", "action": action}
    if msg_id is not None:
        msg["id"] = msg_id
    if detail:
        msg["detail"] = detail
    return msg


def error_message(reason: str) -> dict:
    return {"type": "error", "reason": str(reason)}


def clamp_torque(tau) -> np.ndarray:
    """Apply the per-joint intervention clamp."""
    return np.clip(np.asarray(tau, dtype=float),
                   -INTERVENTION_LIMIT, INTERVENTION_LIMIT)


def drag_to_torque(force, q, params) -> np.ndarray:
    """Map a planar tip force (N) to joint torques via the Jacobian transpose.

    The force drives the editor's planar joints (2 and 4); the result is a
    full joint vector, unclamped (callers clamp).
    """
    jac = planar_jacobian(q, params)
    tau24 = jac.T @ np.asarray(force, dtype=float)
    tau = np.zeros(N_JOINTS)
    tau[1] = tau24[0]
    tau[3] = tau24[1]
    return tau
