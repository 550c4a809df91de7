"""Run configuration: scenario files, the scripted hand, intervention profiles.

A scenario bundles everything a run needs: plant parameters, bench geometry,
controller gains, the scripted operator hand for teaching, timing, and the
initial pose. Scenarios load from and save to a plain-text key=value format
(see docs/scenario-format.md); the built-in tube-transfer scenario is also
constructible in code via default_tube_transfer().

The operator hand is an impedance: it pulls the leader toward a piecewise
linear joint-space waypoint trajectory. Interventions are the same idea
aimed at the editor during retouch runs, restricted to time windows, plus a
raw constant-torque window kind for tests.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import HOLE_DEPTH, N_JOINTS, PegTaskEnv, RobotParams, ik_planar
from .control import Gains


@dataclass
class HandModel:
    """Scripted operator impedance acting on the leader.

    times/targets define a piecewise linear joint trajectory; before the
    first and after the last waypoint the target holds with zero velocity.
    torque() returns the applied (driving) torque.

    The damping acts on the plant as an explicit damper, so it must stay
    below 2*J/dt for the smallest joint inertia (about 2 N*m*s/rad at the
    stock parameters) or the fixed-step integration goes unstable.
    """

    times: np.ndarray
    targets: np.ndarray              # (n_waypoints, N_JOINTS)
    stiffness: float = 150.0         # N*m/rad
    damping: float = 1.0             # N*m*s/rad

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.times.ndim != 1 or self.targets.shape != (len(self.times), N_JOINTS):
            raise ValueError("waypoint times/targets shape mismatch")
        if len(self.times) < 1 or (np.diff(self.times) <= 0).any():
            raise ValueError("waypoint times must be strictly increasing")

    def target_at(self, t: float):
        """Interpolated (q_target, dq_target) at time t."""
        times = self.times
        if t <= times[0]:
            return self.targets[0], np.zeros(N_JOINTS)
        if t >= times[-1]:
            return self.targets[-1], np.zeros(N_JOINTS)
        i = int(np.searchsorted(times, t, side="right")) - 1
        span = times[i + 1] - times[i]
        frac = (t - times[i]) / span
        delta = self.targets[i + 1] - self.targets[i]
        return self.targets[i] + frac * delta, delta / span

    def torque(self, t: float, q, dq) -> np.ndarray:
        q_t, dq_t = self.target_at(t)
        return self.stiffness * (q_t - q) + self.damping * (dq_t - dq)


@dataclass
class InterventionWindow:
    t0: float
    t1: float
    kind: str                        # "spring" or "torque"
    vec: np.ndarray                  # spring target pose, or torque vector
    stiffness: float = 0.0
    damping: float = 0.0

    def __post_init__(self):
        if self.kind not in ("spring", "torque"):
            raise ValueError(f"unknown intervention window kind {self.kind!r}")
        if self.t1 <= self.t0:
            raise ValueError("intervention window must have t1 > t0")
        self.vec = np.asarray(self.vec, dtype=float)
        if self.vec.shape != (N_JOINTS,):
            raise ValueError(f"intervention window needs {N_JOINTS} values")


@dataclass
class InterventionProfile:
    """Scripted editor-side intervention: zero torque outside the windows."""

    windows: list = field(default_factory=list)

    def torque(self, t: float, q, dq) -> np.ndarray:
        tau = np.zeros(N_JOINTS)
        for w in self.windows:
            if w.t0 <= t < w.t1:
                if w.kind == "spring":
                    tau += w.stiffness * (w.vec - q) - w.damping * dq
                else:
                    tau += w.vec
        return tau


@dataclass
class Scenario:
    name: str = "scenario"
    duration: float = 24.0
    dt: float = 0.002
    seed: int = 7
    noise_quantize: float = 0.0      # rad; 0 disables angle quantization
    params: RobotParams = field(default_factory=RobotParams)
    env: PegTaskEnv = field(default_factory=PegTaskEnv)
    gains: Gains = field(default_factory=Gains)
    hand: HandModel = None
    q0: np.ndarray = None            # defaults to the first hand waypoint

    def __post_init__(self):
        if self.dt <= 0 or self.duration <= 0:
            raise ValueError("duration and dt must be positive")
        if self.q0 is None:
            if self.hand is None:
                raise ValueError("scenario needs q0 or a hand trajectory")
            self.q0 = self.hand.targets[0].copy()
        self.q0 = np.asarray(self.q0, dtype=float)
        if self.q0.shape != (N_JOINTS,):
            raise ValueError(f"q0 needs {N_JOINTS} values")

    @property
    def n_steps(self) -> int:
        """Tick count including the sample at t = duration.

        A 24 s scenario at 500 Hz records 12001 ticks (t = 0 .. 24.0), so
        keeping every third row of its tape leaves 4001.
        """
        return int(round(self.duration / self.dt)) + 1


def _pose(p: RobotParams, x: float, y: float, grip: float) -> np.ndarray:
    """Joint waypoint with the planar tip at (x, y) and the gripper at grip."""
    th2, th4 = ik_planar(x, y, p)
    q = np.zeros(N_JOINTS)
    q[1] = th2
    q[3] = th4
    q[7] = grip
    return q


def _line(p: RobotParams, t0, t1, xy0, xy1, grip, n_seg):
    """Subdivided straight task-space segment, exclusive of its start point.

    Joint-space interpolation between two poses bows sideways in task space
    (millimeters over a decimeter), so precision moves like the insertion
    descent are split into short chords that stay on the straight line.
    """
    out = []
    for i in range(1, n_seg + 1):
        a = i / n_seg
        t = t0 + a * (t1 - t0)
        x = xy0[0] + a * (xy1[0] - xy0[0])
        y = xy0[1] + a * (xy1[1] - xy0[1])
        out.append((t, _pose(p, x, y, grip)))
    return out


# Gripper close command: past the tube contact angle (0.30) by enough margin
# that the squeeze torque comfortably exceeds the default hold threshold.
GRIP_CLOSED = 0.45

# Insertion choreography (task-plane meters). The taught motion swings to a
# point above the target hole and descends straight into it with no settling
# dwell between the two phases. At original speed the corner overshoot has
# decayed below the hole clearance by touchdown; replayed faster, the larger
# and fresher overshoot lands the tube tip on the hole rim instead, where the
# insertion press pins it by friction.
INSERT_DEPTH = 0.025
TRANSFER_HEIGHT = 0.06           # swing corridor height above the rack top
GRAB_HEIGHT = 0.05               # tube top sticks out this far above the rack


def default_tube_transfer(params: RobotParams = None, env: PegTaskEnv = None) -> Scenario:
    """The stock 24-second tube transfer teach scenario."""
    p = params or RobotParams()
    e = env or PegTaskEnv()
    sx, sy = e.source_hole
    tx, ty = e.target_hole
    grab_y = sy + GRAB_HEIGHT
    lift_y = sy + TRANSFER_HEIGHT
    insert_y = ty - INSERT_DEPTH
    wp = [
        (0.0,  _pose(p, 0.10, 0.42, 0.0)),          # home
        (1.0,  _pose(p, 0.10, 0.42, 0.0)),
        (3.0,  _pose(p, sx, sy + 0.08, 0.0)),       # over the source tube
        (5.0,  _pose(p, sx, grab_y, 0.0)),          # descend to the tube top
        (6.0,  _pose(p, sx, grab_y, 0.0)),
        (7.5,  _pose(p, sx, grab_y, GRIP_CLOSED)),  # close the gripper
        (9.0,  _pose(p, sx, lift_y, GRIP_CLOSED)),           # lift clear
        (11.0, _pose(p, tx, lift_y, GRIP_CLOSED)),           # swing over target
    ] + _line(p, 11.0, 13.2, (tx, lift_y), (tx, insert_y), GRIP_CLOSED, 6) + [
        (18.5, _pose(p, tx, insert_y, GRIP_CLOSED)),         # hold inserted
        (20.0, _pose(p, tx, insert_y, 0.0)),                 # release
        (21.5, _pose(p, tx, ty + 0.10, 0.0)),
        (24.0, _pose(p, 0.26, 0.40, 0.0)),
    ]
    hand = HandModel(times=[t for t, _ in wp], targets=[q for _, q in wp])
    return Scenario(name="tube-transfer", duration=24.0, params=p, env=e, hand=hand)


def default_fix3x_profile(scn: Scenario) -> InterventionProfile:
    """Scripted corrective intervention for the 3x-speed replay of the stock tape.

    At 3x the tube would land on the target hole rim and the insertion press
    would pin it there until the taped release drops it. The first window
    engages just before touchdown and pulls the editor above the mouth, so
    the blended follower command catches the tube mid-descent and recenters
    it over the hole; the second window pulls toward a deep insertion pose to
    finish before the taped release. Window times live on the 3x timeline.
    """
    p = scn.params
    tx, ty = scn.env.target_hole
    lift = _pose(p, tx, ty + 0.03, GRIP_CLOSED)
    deep = _pose(p, tx, ty - 0.02, GRIP_CLOSED)
    return InterventionProfile(windows=[
        InterventionWindow(t0=4.2, t1=5.4, kind="spring", vec=lift,
                           stiffness=120.0, damping=1.0),
        InterventionWindow(t0=5.4, t1=6.2, kind="spring", vec=deep,
                           stiffness=120.0, damping=1.0),
    ])


def press_scenario(params: RobotParams = None, env: PegTaskEnv = None) -> Scenario:
    """Short scenario: reach into the source hole and press on its bottom.

    Used to exercise steady bilateral contact. The hole bottom is a plain
    spring-damper with no sliding friction, which keeps the contact free of
    stick-slip chatter so instantaneous torques settle to constants.
    """
    p = params or RobotParams()
    e = env or PegTaskEnv()
    x, y = e.source_hole
    press_y = y - HOLE_DEPTH - 0.008     # 8 mm into the hole-bottom spring
    wp = [
        (0.0, _pose(p, x, y + 0.04, 0.0)),
        (1.0, _pose(p, x, y + 0.04, 0.0)),
    ] + _line(p, 1.0, 3.0, (x, y + 0.04), (x, press_y), 0.0, 8) + [
        (6.0, _pose(p, x, press_y, 0.0)),
    ]
    hand = HandModel(times=[t for t, _ in wp], targets=[q for _, q in wp])
    return Scenario(name="press", duration=6.0, params=p, env=e, hand=hand)


# ---------------------------------------------------------------------------
# plain-text serialization

def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in np.asarray(v, dtype=float))


def save_scenario(scn: Scenario, path) -> None:
    lines = [
        "# retouch scenario v1",
        f"name = {scn.name}",
        f"duration = {_fmt(scn.duration)}",
        f"dt = {_fmt(scn.dt)}",
        f"seed = {scn.seed}",
        f"noise_quantize = {_fmt(scn.noise_quantize)}",
        f"q0 = {_fmt_vec(scn.q0)}",
        f"gains.kp = {_fmt(scn.gains.kp)}",
        f"gains.kd = {_fmt(scn.gains.kd)}",
        f"gains.kf = {_fmt(scn.gains.kf)}",
        f"gains.alpha = {_fmt(scn.gains.alpha)}",
        f"hand.stiffness = {_fmt(scn.hand.stiffness)}",
        f"hand.damping = {_fmt(scn.hand.damping)}",
    ]
    e = scn.env
    lines += [
        f"env.source_hole = {_fmt(e.source_hole[0])} {_fmt(e.source_hole[1])}",
        f"env.target_hole = {_fmt(e.target_hole[0])} {_fmt(e.target_hole[1])}",
        f"env.hole_clearance = {_fmt(e.hole_clearance)}",
        f"env.wall_stiffness = {_fmt(e.wall_stiffness)}",
        f"env.wall_damping = {_fmt(e.wall_damping)}",
        f"env.grip_threshold = {_fmt(e.grip_threshold)}",
        f"env.insertion_depth_goal = {_fmt(e.insertion_depth_goal)}",
        f"env.lateral_force_limit = {_fmt(e.lateral_force_limit)}",
    ]
    p = scn.params
    for name in ("m2", "m3", "m4", "c2", "c3", "c4", "l24",
                 "ix2", "ix3", "iy2", "g0", "j_floor"):
        lines.append(f"params.{name} = {_fmt(getattr(p, name))}")
    lines.append(f"params.j_const = {_fmt_vec(p.j_const)}")
    lines.append(f"params.damping = {_fmt_vec(p.damping)}")
    lines.append(f"params.cutoff = {_fmt_vec(p.cutoff)}")
    for t, q in zip(scn.hand.times, scn.hand.targets):
        lines.append(f"waypoint = {_fmt(t)} {_fmt_vec(q)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_scenario(path) -> Scenario:
    """Parse a scenario file; unknown keys raise so typos surface early."""
    scalars = {}
    env_kw = {}
    par_kw = {}
    gains_kw = {}
    hand_kw = {}
    waypoints = []
    q0 = None
    name = "scenario"
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {ln}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            try:
                if key == "name":
                    name = val
                elif key in ("duration", "dt", "noise_quantize"):
                    scalars[key] = float(val)
                elif key == "seed":
                    scalars[key] = int(val)
                elif key == "q0":
                    q0 = [float(v) for v in val.split()]
                elif key == "waypoint":
                    nums = [float(v) for v in val.split()]
                    if len(nums) != 1 + N_JOINTS:
                        raise ValueError(f"waypoint needs t plus {N_JOINTS} joints")
                    waypoints.append((nums[0], nums[1:]))
                elif key.startswith("gains."):
                    gains_kw[key[6:]] = float(val)
                elif key.startswith("hand."):
                    hand_kw[key[5:]] = float(val)
                elif key.startswith("env."):
                    fname = key[4:]
                    nums = [float(v) for v in val.split()]
                    env_kw[fname] = tuple(nums) if len(nums) > 1 else nums[0]
                elif key.startswith("params."):
                    fname = key[7:]
                    nums = [float(v) for v in val.split()]
                    par_kw[fname] = tuple(nums) if len(nums) > 1 else nums[0]
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}: line {ln}: {exc}") from None
    if not waypoints:
        raise ValueError(f"{path}: scenario has no waypoints")
    try:
        params = RobotParams(**par_kw)
        env = PegTaskEnv(**env_kw)
        gains = Gains(**gains_kw)
        hand = HandModel(times=[t for t, _ in waypoints],
                         targets=[q for _, q in waypoints], **hand_kw)
        return Scenario(name=name, params=params, env=env, gains=gains,
                        hand=hand, q0=q0, **scalars)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_intervention(profile: InterventionProfile, path) -> None:
    lines = ["# retouch intervention v1"]
    for w in profile.windows:
        if w.kind == "spring":
            lines.append(f"window = {_fmt(w.t0)} {_fmt(w.t1)} spring "
                         f"{_fmt(w.stiffness)} {_fmt(w.damping)} {_fmt_vec(w.vec)}")
        else:
            lines.append(f"window = {_fmt(w.t0)} {_fmt(w.t1)} torque {_fmt_vec(w.vec)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_intervention(path) -> InterventionProfile:
    windows = []
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {ln}: expected window = ...")
            key, _, val = line.partition("=")
            if key.strip() != "window":
                raise ValueError(f"{path}: line {ln}: unknown key {key.strip()!r}")
            parts = val.split()
            try:
                t0, t1 = float(parts[0]), float(parts[1])
                kind = parts[2]
                if kind == "spring":
                    k, b = float(parts[3]), float(parts[4])
                    vec = [float(v) for v in parts[5:]]
                    windows.append(InterventionWindow(t0, t1, "spring", vec,
                                                      stiffness=k, damping=b))
                elif kind == "torque":
                    vec = [float(v) for v in parts[3:]]
                    windows.append(InterventionWindow(t0, t1, "torque", vec))
                else:
                    raise ValueError(f"unknown window kind {kind!r}")
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}: line {ln}: {exc}") from None
    return InterventionProfile(windows=windows)
