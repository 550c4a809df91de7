"""Run engine: teach, copy, and retouch loops plus logging and task scoring.

Tick order (500 Hz, dt = 2 ms), identical across run modes so that live and
scripted runs share one code path:

  1. measure joint angles (optional quantization noise), update observers
     (pseudo-diff velocity, RFOB with the fully-applied previous torque,
     DOB with the previous torque minus its feedforward share)
  2. evaluate the control law -> ControlOutput per driven unit
  3. saturate tau_ref to the actuator limit
  4. evaluate environment loads (hand impedance on the leader, rack contact
     on the follower, intervention on the editor) from the true state
  5. record log/tape rows, then integrate the dynamics one step

Determinism: nothing in the loop reads the wall clock; realtime pacing and
network sessions only influence the recorded intervention timeline, which is
itself an input replayable bit-for-bit.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .model import (N_JOINTS, ContactInfo, PegTaskEnv, RobotParams, RobotState,
                    WALL_BAND, contact_torque, forward_kinematics_planar,
                    gravity_vector, inertia_matrix, step_dynamics)
from .observers import ObserverBank, dob_update, pseudo_diff_update, rfob_update
from .control import (CommandFrame, Gains, UnitFeedback, bilateral_4ch_step,
                      motion_copy_step, retouch_step, saturate)
from .tape import Tape, TapeMeta, TapeSample, append_sample, sample_at
from .scenario import GRAB_HEIGHT, InterventionProfile, Scenario

GRASP_ZONE_RADIUS = 0.06    # m around the tube-top grab point at the source


class EngineError(RuntimeError):
    pass


@dataclass
class SuccessReport:
    success: bool
    failure_reason: str         # "", missed_grasp, dropped, insertion_failed,
                                # inserted_at_angle_proxy
    metrics: dict = field(default_factory=dict)


_ROBOT_FIELDS = ("q", "dq", "tau_res", "tau_res_hat", "tau_ref",
                 "diff", "common", "comp")


class RunLog:
    """Struct-of-arrays record of one run."""

    def __init__(self, n: int, robot_names, dt: float, meta: dict = None):
        self.dt = dt
        self.meta = dict(meta or {})
        self.n = n
        self.t = np.zeros(n)
        self.robots = {}
        for name in robot_names:
            self.robots[name] = {f: np.zeros((n, N_JOINTS)) for f in _ROBOT_FIELDS}
            self.robots[name]["saturated"] = np.zeros(n, dtype=bool)
        self.in_contact = np.zeros(n, dtype=bool)
        self.lateral_force = np.zeros(n)
        self.depth = np.zeros(n)
        self.tube_held = np.zeros(n, dtype=bool)
        self.tip = np.zeros((n, 2))
        self.intervention = np.zeros((n, N_JOINTS))

    def trim(self, n: int) -> None:
        """Shrink to the first n rows (live sessions can end early)."""
        if n >= self.n:
            return
        self.n = n
        self.t = self.t[:n]
        for rob in self.robots.values():
            for key in list(rob):
                rob[key] = rob[key][:n]
        self.in_contact = self.in_contact[:n]
        self.lateral_force = self.lateral_force[:n]
        self.depth = self.depth[:n]
        self.tube_held = self.tube_held[:n]
        self.tip = self.tip[:n]
        self.intervention = self.intervention[:n]

    def equals(self, other: "RunLog") -> bool:
        """Bitwise equality of every recorded array."""
        if self.n != other.n or self.dt != other.dt:
            return False
        if sorted(self.robots) != sorted(other.robots):
            return False
        if not np.array_equal(self.t, other.t):
            return False
        for name, rob in self.robots.items():
            for key, arr in rob.items():
                if not np.array_equal(arr, other.robots[name][key]):
                    return False
        for key in ("in_contact", "lateral_force", "depth", "tube_held",
                    "tip", "intervention"):
            if not np.array_equal(getattr(self, key), getattr(other, key)):
                return False
        return True


class _Unit:
    """One physical robot in the loop: plant state plus observer memory."""

    __slots__ = ("name", "state", "bank", "u_prev", "comp_prev")

    def __init__(self, name: str, q0, p: RobotParams, q0_meas):
        self.name = name
        self.state = RobotState.at_rest(q0)
        self.bank = ObserverBank.create(p, q0_meas)
        self.u_prev = np.zeros(N_JOINTS)
        self.comp_prev = np.zeros(N_JOINTS)


def _quantize(q, step: float):
    if step > 0.0:
        return np.round(q / step) * step
    return q


def _sense(unit: _Unit, p: RobotParams, dt: float, quant: float):
    """Observer updates for one unit; returns its feedback + control inputs."""
    q_meas = _quantize(unit.state.q, quant)
    dq_hat = pseudo_diff_update(unit.bank, q_meas, dt)
    jn = inertia_matrix(q_meas, p)
    fric = p.damping_arr * dq_hat
    grav = gravity_vector(q_meas, p)
    tau_res_hat = rfob_update(unit.bank, unit.u_prev, dq_hat, jn, fric, grav, dt)
    comp = fric + grav
    tau_dis_hat = dob_update(unit.bank, unit.u_prev - unit.comp_prev,
                             dq_hat, jn, comp, dt)
    return UnitFeedback(q=q_meas, dq=dq_hat, tau=tau_res_hat), jn, comp, tau_dis_hat


def _advance(unit: _Unit, tau_sat, comp, tau_env, p: RobotParams, dt: float, k: int):
    try:
        unit.state = step_dynamics(unit.state, tau_sat, tau_env, p, dt)
    except FloatingPointError as exc:
        raise EngineError(f"{unit.name} diverged at step {k}: {exc}") from None
    unit.u_prev = tau_sat
    unit.comp_prev = comp


def _record_robot(rob: dict, k: int, fb: UnitFeedback, out, tau_sat, sat, tau_env):
    rob["q"][k] = fb.q
    rob["dq"][k] = fb.dq
    rob["tau_res"][k] = tau_env
    rob["tau_res_hat"][k] = fb.tau
    rob["tau_ref"][k] = out.tau_ref
    rob["diff"][k] = out.diff_mode
    rob["common"][k] = out.common_mode
    rob["comp"][k] = out.compensation
    rob["saturated"][k] = sat


def _record_contact(log: RunLog, k: int, info: ContactInfo, tip):
    log.in_contact[k] = info.in_contact
    log.lateral_force[k] = info.lateral_force
    log.depth[k] = info.depth
    log.tube_held[k] = info.tube_held
    log.tip[k, 0] = tip[0]
    log.tip[k, 1] = tip[1]


def run_teach(scn: Scenario):
    """Bilateral teaching: scripted hand drives the leader, follower does the task.

    Returns (tape, log). The tape records the leader response values - the
    follower's command values - one sample per tick.
    """
    p, env, gains, dt = scn.params, scn.env, scn.gains, scn.dt
    n = scn.n_steps
    q0m = _quantize(scn.q0, scn.noise_quantize)
    leader = _Unit("leader", scn.q0, p, q0m)
    follower = _Unit("follower", scn.q0, p, q0m)
    tape = Tape(TapeMeta(dt=dt, source=f"teach {scn.name} seed={scn.seed}"))
    log = RunLog(n, ("leader", "follower"), dt,
                 meta={"mode": "teach", "scenario": scn.name, "seed": scn.seed})
    quant = scn.noise_quantize
    for k in range(n):
        t = k * dt
        log.t[k] = t
        fb_l, jn_l, comp_l, dis_l = _sense(leader, p, dt, quant)
        fb_f, jn_f, comp_f, dis_f = _sense(follower, p, dt, quant)
        out_l, out_f = bilateral_4ch_step(fb_l, fb_f, dis_l, dis_f, jn_l, jn_f, gains)
        u_l, sat_l = saturate(out_l.tau_ref)
        u_f, sat_f = saturate(out_f.tau_ref)
        tau_hand = scn.hand.torque(t, leader.state.q, leader.state.dq)
        tau_env_l = -tau_hand
        tau_env_f, cinfo = contact_torque(follower.state, env, p)
        tip = forward_kinematics_planar(follower.state.q, p)

        _record_robot(log.robots["leader"], k, fb_l, out_l, u_l, sat_l, tau_env_l)
        _record_robot(log.robots["follower"], k, fb_f, out_f, u_f, sat_f, tau_env_f)
        _record_contact(log, k, cinfo, tip)
        append_sample(tape, TapeSample(k, t, fb_l.q, fb_l.dq, fb_l.tau))

        _advance(leader, u_l, comp_l, tau_env_l, p, dt, k)
        _advance(follower, u_f, comp_f, tau_env_f, p, dt, k)
    return tape, log


def _check_tape(tape: Tape, scn: Scenario):
    if len(tape) == 0:
        raise EngineError("tape is empty")
    if abs(tape.meta.dt - scn.dt) > 1e-12:
        raise EngineError(
            f"tape dt {tape.meta.dt} does not match scenario dt {scn.dt}")


class _Pacer:
    """Wall-clock pacing for realtime runs.

    The deadline advances dt per tick. When the loop falls behind (a paused
    session, a slow tick) the deadline resets to now, so the loop resumes at
    the nominal rate instead of sprinting to catch up.
    """

    def __init__(self, dt: float):
        self.dt = dt
        self.deadline = time.monotonic()

    def wait(self):
        self.deadline += self.dt
        lag = self.deadline - time.monotonic()
        if lag > 0:
            time.sleep(lag)
        else:
            self.deadline = time.monotonic()


def run_copy(tape: Tape, scn: Scenario, realtime: bool = False):
    """Motion copying: replay a tape against a single live follower.

    Returns (log, report). The run length equals the tape length.
    """
    _check_tape(tape, scn)
    p, env, gains, dt = scn.params, scn.env, scn.gains, scn.dt
    n = len(tape)
    q0m = _quantize(scn.q0, scn.noise_quantize)
    follower = _Unit("follower", scn.q0, p, q0m)
    log = RunLog(n, ("follower",), dt,
                 meta={"mode": "copy", "scenario": scn.name, "seed": scn.seed,
                       "speed_factor": tape.meta.speed_factor})
    quant = scn.noise_quantize
    rob = log.robots["follower"]
    pacer = _Pacer(dt)
    for k in range(n):
        t = k * dt
        log.t[k] = t
        frame, _ = sample_at(tape, k)
        fb_f, jn_f, comp_f, dis_f = _sense(follower, p, dt, quant)
        out_f = motion_copy_step(frame, fb_f, dis_f, jn_f, gains)
        u_f, sat_f = saturate(out_f.tau_ref)
        tau_env_f, cinfo = contact_torque(follower.state, env, p)
        tip = forward_kinematics_planar(follower.state.q, p)

        _record_robot(rob, k, fb_f, out_f, u_f, sat_f, tau_env_f)
        _record_contact(log, k, cinfo, tip)

        _advance(follower, u_f, comp_f, tau_env_f, p, dt, k)
        if realtime:
            pacer.wait()
    return log, evaluate_success(log, env)


def run_retouch(tape: Tape, scn: Scenario, intervention: InterventionProfile = None,
                timeline: dict = None, bridge=None, realtime: bool = False):
    """Three-unit post-editing of a tape.

    The tape acts as the leader, the follower redoes the task, and the editor
    carries the intervention torque. Exactly one intervention source may be
    given: a scripted profile, a {step: torque} timeline (for replaying a
    recorded session), or a live session bridge. Returns
    (retouched_tape, log, report); the log's intervention rows hold the
    effective per-tick editor torque, which is the canonical timeline.
    """
    _check_tape(tape, scn)
    sources = sum(x is not None for x in (intervention, timeline, bridge))
    if sources > 1:
        raise EngineError("give at most one intervention source")
    p, env, gains, dt = scn.params, scn.env, scn.gains, scn.dt
    n = len(tape)
    q0m = _quantize(scn.q0, scn.noise_quantize)
    follower = _Unit("follower", scn.q0, p, q0m)
    editor = _Unit("editor", scn.q0, p, q0m)
    out_tape = Tape(TapeMeta(dt=dt, speed_factor=tape.meta.speed_factor,
                             source=f"retouch alpha={gains.alpha} of [{tape.meta.source}]"))
    log = RunLog(n, ("follower", "editor"), dt,
                 meta={"mode": "retouch", "scenario": scn.name, "seed": scn.seed,
                       "alpha": gains.alpha,
                       "speed_factor": tape.meta.speed_factor})
    quant = scn.noise_quantize
    rob_f = log.robots["follower"]
    rob_e = log.robots["editor"]
    pacer = _Pacer(dt)
    n_done = n
    for k in range(n):
        t = k * dt
        if bridge is not None:
            tau_i, stop = bridge.tick_start(k, t, editor.state)
            if stop:
                n_done = k
                break
        elif timeline is not None:
            tau_i = timeline.get(k)
            tau_i = np.zeros(N_JOINTS) if tau_i is None else np.asarray(tau_i, float)
        elif intervention is not None:
            tau_i = intervention.torque(t, editor.state.q, editor.state.dq)
        else:
            tau_i = np.zeros(N_JOINTS)

        log.t[k] = t
        frame, _ = sample_at(tape, k)
        fb_f, jn_f, comp_f, dis_f = _sense(follower, p, dt, quant)
        fb_e, jn_e, comp_e, dis_e = _sense(editor, p, dt, quant)
        out_f, out_e, blended = retouch_step(frame, fb_f, fb_e,
                                             dis_f, dis_e, jn_f, jn_e, gains)
        u_f, sat_f = saturate(out_f.tau_ref)
        u_e, sat_e = saturate(out_e.tau_ref)
        tau_env_f, cinfo = contact_torque(follower.state, env, p)
        tau_env_e = -tau_i
        tip = forward_kinematics_planar(follower.state.q, p)

        _record_robot(rob_f, k, fb_f, out_f, u_f, sat_f, tau_env_f)
        _record_robot(rob_e, k, fb_e, out_e, u_e, sat_e, tau_env_e)
        _record_contact(log, k, cinfo, tip)
        log.intervention[k] = tau_i
        append_sample(out_tape, TapeSample(k, t, blended.q_cmd, blended.dq_cmd,
                                           blended.tau_cmd))

        _advance(follower, u_f, comp_f, tau_env_f, p, dt, k)
        _advance(editor, u_e, comp_e, tau_env_e, p, dt, k)
        if bridge is not None:
            bridge.tick_end(k, t, log, tape, out_tape)
        if realtime:
            pacer.wait()
    log.trim(n_done)
    return out_tape, log, evaluate_success(log, env)


LOG_MAGIC = "# retouch-log v1"


def _joint_cols(prefix: str):
    return [f"{prefix}{j}" for j in range(1, N_JOINTS + 1)]


def save_log_csv(log: RunLog, path: str) -> None:
    """Write a run log as CSV with a one-line metadata header.

    Per robot the columns mirror the tape layout (q, dq, true load torque,
    estimated load torque), followed by contact, tip, and intervention columns.
    """
    names = sorted(log.robots)
    cols = ["step", "t"]
    blocks = []
    for name in names:
        rob = log.robots[name]
        for field_name, prefix in (("q", "q"), ("dq", "dq"),
                                   ("tau_res", "tau"), ("tau_res_hat", "tauhat")):
            cols += _joint_cols(f"{name}_{prefix}")
            blocks.append(rob[field_name])
    cols += ["in_contact", "lateral_force", "depth", "tube_held", "tip_x", "tip_y"]
    cols += _joint_cols("intervene")
    with open(path, "w") as f:
        f.write(f"{LOG_MAGIC}, dt={log.dt!r}, robots={';'.join(names)}\n")
        f.write(",".join(cols) + "\n")
        for k in range(log.n):
            row = [str(k), repr(float(log.t[k]))]
            for block in blocks:
                row += [repr(float(v)) for v in block[k]]
            row += [str(int(log.in_contact[k])), repr(float(log.lateral_force[k])),
                    repr(float(log.depth[k])), str(int(log.tube_held[k])),
                    repr(float(log.tip[k, 0])), repr(float(log.tip[k, 1]))]
            row += [repr(float(v)) for v in log.intervention[k]]
            f.write(",".join(row) + "\n")


def load_log_columns(path: str) -> dict:
    """Read a log CSV back as {column_name: array} plus a 'dt' entry."""
    with open(path) as f:
        head = f.readline().rstrip("\n")
        if not head.startswith(LOG_MAGIC):
            raise ValueError(f"{path}: not a retouch log file")
        dt = None
        for part in head[len(LOG_MAGIC):].split(","):
            part = part.strip()
            if part.startswith("dt="):
                dt = float(part[3:])
        if dt is None:
            raise ValueError(f"{path}: header is missing dt")
        names = f.readline().rstrip("\n").split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns for {len(names)} names")
    out = {name: data[:, i] for i, name in enumerate(names)}
    out["dt"] = dt
    return out


def evaluate_success(log: RunLog, env: PegTaskEnv) -> SuccessReport:
    """Score a run of the tube-transfer task from its log.

    Rules, checked in order: the tube must first be gripped near the source
    tube top (else missed_grasp); once gripped it must never be released
    outside the target hole interior (else dropped); the maximum insertion
    depth while held must reach the goal (else insertion_failed); the lateral
    wall force near the target mouth must stay under the limit (else
    inserted_at_angle_proxy).
    """
    held = log.tube_held
    tipx = log.tip[:, 0]
    tipy = log.tip[:, 1]
    sx, sy = env.source_hole
    tx, ty = env.target_hole

    grab = (tipx - sx) ** 2 + (tipy - (sy + GRAB_HEIGHT)) ** 2 <= GRASP_ZONE_RADIUS ** 2
    grasped = held & grab
    inside_target = (np.abs(tipx - tx) <= env.hole_clearance) & (tipy < ty)
    near_target = (np.abs(tipx - tx) <= env.hole_clearance + WALL_BAND) & (tipy < ty)

    depth_held = np.where(inside_target & held, ty - tipy, 0.0)
    final_depth = float(depth_held.max()) if len(depth_held) else 0.0
    max_lateral = float(log.lateral_force[near_target].max()) if near_target.any() else 0.0

    metrics = {"final_depth": final_depth, "max_lateral_force": max_lateral}

    if not grasped.any():
        return SuccessReport(False, "missed_grasp", metrics)
    first = int(np.argmax(grasped))
    metrics["grasp_time"] = first * log.dt

    release = np.flatnonzero(held[first:-1] & ~held[first + 1:]) + first
    for idx in release:
        if not inside_target[idx]:
            metrics["release_time"] = float((idx + 1) * log.dt)
            return SuccessReport(False, "dropped", metrics)
    if release.size:
        metrics["release_time"] = float((release[0] + 1) * log.dt)

    if final_depth < env.insertion_depth_goal:
        return SuccessReport(False, "insertion_failed", metrics)
    if max_lateral > env.lateral_force_limit:
        return SuccessReport(False, "inserted_at_angle_proxy", metrics)
    return SuccessReport(True, "", metrics)
