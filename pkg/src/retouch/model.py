"""Manipulator model: diagonal rigid-body dynamics, planar task kinematics, contact.

The arm has 8 joints. Joints 1-3 have pose-dependent diagonal inertias with
closed forms below; joints 4-8 use constant inertias. Gravity acts on joints
2-4. The task-space projection used by the contact model is the vertical plane
spanned by joints 2 and 4 (angles measured from the upward vertical), with the
proximal link l24 and a distal link of length c4 carrying the tool tip.

Sign conventions: tau_res is the load torque an external agent (wall, tube,
operator hand) exerts against joint motion. It enters the dynamics with a
minus sign, so a positive load decelerates positive joint velocity. A force F
applied to the tip therefore maps to tau_res = -J_planar^T F.
"""

import math
from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 8

# Gripper squeeze model (joint 8): one-sided spring past the contact angle.
GRIP_CONTACT_ANGLE = 0.30   # rad, gripper meets the tube surface here
GRIP_STIFFNESS = 8.0        # N*m/rad
GRIP_DAMPING = 0.05         # N*m*s/rad

# Rack surface details. The flat rack top is a thin penalty shell with
# regularized Coulomb friction, so a pressed tip resists lateral sliding
# instead of gliding across. Hole walls only engage deeper than the shell:
# a probe can only get that deep by entering through a mouth, which is what
# distinguishes "inside the hole" from "pressed onto the rack top" without
# carrying contact history.
WALL_BAND = 0.012           # m, lateral reach of the hole walls past the clearance
SURFACE_SHELL = 0.002       # m, rounding radius of the hole rim; shallower
                            # off-axis penetrations behave as rack-top surface
SURFACE_FRICTION = 0.8      # Coulomb coefficient on the rack top
FRICTION_VEL_EPS = 0.002    # m/s, tanh regularization knee
HOLE_DEPTH = 0.09           # m, hole bottom below the rack top


def _jointvec(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (N_JOINTS,):
        raise ValueError(f"expected {N_JOINTS} joint values, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("joint vector contains non-finite values")
    return arr


@dataclass
class RobotParams:
    """Identified plant constants (masses, COM offsets, inertias, friction).

    j_floor clamps the pose-dependent diagonal inertias: J3 vanishes at
    theta4 = 0 and J1 can drop below the rotor inertia near the upright
    pose, either of which would make the acceleration update singular.
    """

    m2: float = 0.0128          # kg
    m3: float = 0.0
    m4: float = 0.4505
    c2: float = 0.0002          # m, COM offsets
    c3: float = 0.0262
    c4: float = 0.2865
    l24: float = 0.2500         # m, proximal link length (l2 := l24, l3 := 0)
    ix2: float = 0.0197         # kg*m^2
    ix3: float = 0.0197
    iy2: float = 0.0008
    # constant diagonal inertias, joints 4-8
    j_const: tuple = (0.0370, 0.0054, 0.0066, 0.0049, 0.0055)
    # viscous friction, joints 1-8
    damping: tuple = (0.0443, 0.2343, 0.0501, 0.1820, 0.0122, 0.0196, 0.0170, 0.0105)
    # observer cutoff frequencies, joints 1-8 (rad/s)
    cutoff: tuple = (10.0, 15.0, 10.0, 15.0, 90.0, 90.0, 90.0, 90.0)
    g0: float = 9.81            # m/s^2
    j_floor: float = 0.002      # kg*m^2

    def __post_init__(self):
        # cached array views for the 500 Hz loop
        self.j_const_arr = np.asarray(self.j_const, dtype=float)
        self.damping_arr = np.asarray(self.damping, dtype=float)
        self.cutoff_arr = np.asarray(self.cutoff, dtype=float)


@dataclass
class RobotState:
    q: np.ndarray
    dq: np.ndarray

    @staticmethod
    def at_rest(q) -> "RobotState":
        return RobotState(q=_jointvec(q), dq=np.zeros(N_JOINTS))


def inertia_matrix(q, p: RobotParams) -> np.ndarray:
    """Diagonal inertia entries J1..J8 at pose q, clamped below by p.j_floor."""
    th2, th3, th4 = q[1], q[2], q[3]
    s2, c2_ = math.sin(th2), math.cos(th2)
    s3, c3_ = math.sin(th3), math.cos(th3)
    s4, c4_ = math.sin(th4), math.cos(th4)
    l2 = p.l24
    cm4 = p.c4 * p.c4 * p.m4

    j1 = (p.c2 * p.c2 * p.m2 * s2 * s2
          + p.c3 * p.c3 * p.m3 * s2 * s2
          + 2.0 * p.c3 * l2 * p.m3 * s2 * s2
          - 0.125 * cm4 * (math.cos(-2.0 * th2 + th3 + 2.0 * th4)
                           - math.cos(2.0 * th2 - th3 + 2.0 * th4)
                           + math.cos(2.0 * th2 + th3 - 2.0 * th4)
                           - math.cos(2.0 * th2 + th3 + 2.0 * th4))
          + cm4 * s2 * s2 * s3 * s3 * s4 * s4
          - 2.0 * cm4 * s2 * s2 * s4 * s4
          + cm4 * s2 * s2 + cm4 * s4 * s4
          - 2.0 * p.c4 * l2 * p.m4 * s2 * s2 * c4_
          + 2.0 * p.c4 * l2 * p.m4 * s2 * s4 * c2_ * c3_
          + (p.ix2 + p.ix3 - p.iy2) * s2 * s2 + p.iy2
          + l2 * l2 * (p.m3 + p.m4) * s2 * s2)

    j2 = (p.c2 * p.c2 * p.m2
          + p.c3 * p.c3 * p.m3
          + 2.0 * p.c3 * l2 * p.m3
          - cm4 * s3 * s3 * s4 * s4
          + cm4
          - 2.0 * p.c4 * l2 * p.m4 * c4_
          + p.ix2 + p.ix3
          + l2 * l2 * (p.m3 + p.m4))

    j3 = cm4 * s4 * s4

    out = np.empty(N_JOINTS)
    out[0] = j1
    out[1] = j2
    out[2] = j3
    out[3:] = p.j_const_arr
    np.maximum(out, p.j_floor, out=out)
    return out


def gravity_vector(q, p: RobotParams) -> np.ndarray:
    """Gravity torques; only joints 2-4 are loaded."""
    th2, th3, th4 = q[1], q[2], q[3]
    s2, c2_ = math.sin(th2), math.cos(th2)
    s3, c3_ = math.sin(th3), math.cos(th3)
    s4, c4_ = math.sin(th4), math.cos(th4)
    l2 = p.l24

    out = np.zeros(N_JOINTS)
    out[1] = p.g0 * (p.c2 * p.m2 * s2
                     + p.m3 * (p.c3 + l2) * s2
                     + p.m4 * (p.c4 * s4 * c2_ * c3_ + (l2 - p.c4 * c4_) * s2))
    out[2] = -p.c4 * p.g0 * p.m4 * s2 * s3 * s4
    out[3] = p.c4 * p.g0 * p.m4 * (s2 * c3_ * c4_ - s4 * c2_)
    return out


def step_dynamics(s: RobotState, tau_ref, tau_res, p: RobotParams, dt: float) -> RobotState:
    """One semi-implicit Euler step of J(q) ddq = tau_ref - tau_res - D dq - g(q)."""
    jn = inertia_matrix(s.q, p)
    acc = (tau_ref - tau_res - p.damping_arr * s.dq - gravity_vector(s.q, p)) / jn
    dq = s.dq + dt * acc
    q = s.q + dt * dq
    if not np.isfinite(q).all() or not np.isfinite(dq).all():
        raise FloatingPointError(
            f"dynamics step produced non-finite state (q={s.q}, tau_ref={tau_ref})")
    return RobotState(q=q, dq=dq)


def forward_kinematics_planar(q, p: RobotParams):
    """Tip position (x, y) in the joint-2/joint-4 vertical plane.

    Angles are measured from the upward vertical, so the all-zero pose points
    straight up at (0, l24 + c4).
    """
    th2 = q[1]
    th24 = th2 + q[3]
    x = p.l24 * math.sin(th2) + p.c4 * math.sin(th24)
    y = p.l24 * math.cos(th2) + p.c4 * math.cos(th24)
    return x, y


def planar_jacobian(q, p: RobotParams) -> np.ndarray:
    """2x2 Jacobian of the planar tip w.r.t. (theta2, theta4)."""
    th2 = q[1]
    th24 = th2 + q[3]
    c24 = p.c4 * math.cos(th24)
    s24 = p.c4 * math.sin(th24)
    return np.array([[p.l24 * math.cos(th2) + c24, c24],
                     [-p.l24 * math.sin(th2) - s24, -s24]])


def ik_planar(x: float, y: float, p: RobotParams):
    """Closed-form planar inverse kinematics, elbow bent toward +x.

    Returns (theta2, theta4) such that forward_kinematics_planar maps back to
    (x, y). Raises ValueError when the point is outside the annular workspace.
    """
    r2 = x * x + y * y
    c = (r2 - p.l24 * p.l24 - p.c4 * p.c4) / (2.0 * p.l24 * p.c4)
    if not -1.0 <= c <= 1.0:
        raise ValueError(f"planar target ({x:.3f}, {y:.3f}) out of reach")
    th4 = math.acos(c)
    th2 = math.atan2(x, y) - math.atan2(p.c4 * math.sin(th4),
                                        p.l24 + p.c4 * math.cos(th4))
    return th2, th4


@dataclass
class PegTaskEnv:
    """Tube-transfer bench: two vertical holes in a rack top.

    Hole positions are (x, y) of the mouth center; y is the rack-top height.
    Clearance is the lateral free play inside a hole. Wall stiffness/damping
    parameterize every penalty contact in the scene.
    """

    source_hole: tuple = (0.22, 0.26)
    target_hole: tuple = (0.34, 0.26)
    # lateral free play of the tube inside a hole; a real rack leaves about
    # a millimeter, which is what makes hurried insertions miss
    hole_clearance: float = 0.001       # m
    wall_stiffness: float = 2000.0      # N/m
    wall_damping: float = 20.0          # N*s/m
    grip_threshold: float = 0.3         # N*m of squeeze needed to hold the tube
    insertion_depth_goal: float = 0.02  # m below the rack top
    lateral_force_limit: float = 6.0    # N, angle-proxy threshold

    def __post_init__(self):
        if self.hole_clearance <= 0:
            raise ValueError("hole_clearance must be positive")
        if self.wall_stiffness <= 0 or self.wall_damping < 0:
            raise ValueError("wall stiffness/damping out of range")


@dataclass
class ContactInfo:
    in_contact: bool = False
    lateral_force: float = 0.0
    depth: float = 0.0
    tube_held: bool = False


def contact_torque(s: RobotState, env: PegTaskEnv, p: RobotParams):
    """Environment load torques at the current state.

    Returns (tau_res, ContactInfo). tau_res follows the load convention
    (positive opposes positive joint motion); it is zero exactly when
    ContactInfo.in_contact is false.

    Geometry, relative to the nearest hole: within the clearance the probe is
    inside the hole (free until the bottom). Off axis, penetrations up to
    SURFACE_SHELL count as the rack top / rounded hole rim and push straight
    up with sliding friction; the region below the rim rounding next to a
    mouth is only reachable by entering through the mouth first (surface
    contact never penetrates that deep), and there the hole wall pushes the
    probe back toward the axis. lateral_force reports that wall force.
    """
    q, dq = s.q, s.dq
    x, y = forward_kinematics_planar(q, p)
    jac = planar_jacobian(q, p)
    vx = jac[0, 0] * dq[1] + jac[0, 1] * dq[3]
    vy = jac[1, 0] * dq[1] + jac[1, 1] * dq[3]

    fx = 0.0
    fy = 0.0
    lateral = 0.0
    depth = 0.0

    holes = (env.source_hole, env.target_hole)
    hx, hy = holes[0] if abs(x - holes[0][0]) <= abs(x - holes[1][0]) else holes[1]
    band = env.hole_clearance + WALL_BAND

    if y < hy:
        pen_y = hy - y
        dxh = x - hx
        adx = abs(dxh)
        if adx <= env.hole_clearance:
            # cleanly inside the nearest hole
            depth = pen_y
            if pen_y > HOLE_DEPTH:
                fb = env.wall_stiffness * (pen_y - HOLE_DEPTH) - env.wall_damping * vy
                fy += max(fb, 0.0)
        elif pen_y <= SURFACE_SHELL or adx > band:
            # pressed onto the rack top or the rounded rim of a mouth
            fn = env.wall_stiffness * pen_y - env.wall_damping * vy
            fn = max(fn, 0.0)
            fy += fn
            fx -= SURFACE_FRICTION * fn * math.tanh(vx / FRICTION_VEL_EPS)
        else:
            # off axis below the rim rounding: entered through the mouth,
            # leaning on the hole wall
            depth = pen_y
            wpen = adx - env.hole_clearance
            fw = env.wall_stiffness * wpen
            fw += env.wall_damping * (vx if dxh > 0.0 else -vx)
            fw = max(fw, 0.0)
            fx -= math.copysign(fw, dxh)
            lateral = fw

    tau = np.zeros(N_JOINTS)
    if fx != 0.0 or fy != 0.0:
        # load convention: tau_res = -J^T F
        tau[1] = -(jac[0, 0] * fx + jac[1, 0] * fy)
        tau[3] = -(jac[0, 1] * fx + jac[1, 1] * fy)

    grip = 0.0
    if q[7] > GRIP_CONTACT_ANGLE:
        grip = GRIP_STIFFNESS * (q[7] - GRIP_CONTACT_ANGLE) + GRIP_DAMPING * dq[7]
        grip = max(grip, 0.0)
        tau[7] = grip

    info = ContactInfo(in_contact=bool(tau.any()),
                       lateral_force=lateral,
                       depth=depth,
                       tube_held=grip >= env.grip_threshold)
    return tau, info
