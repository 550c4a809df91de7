"""Bilateral / multilateral control laws.

Every law produces a ControlOutput whose tau_ref is built as
diff_mode + common_mode + compensation in exactly that order, so the
decomposition can be checked bit-for-bit. Saturation is applied by the caller
(see saturate) after the decomposition, never inside the laws.

The position channel (differential mode) is an acceleration-scaled PD,
(Jn/2) * (Kp * e + Kd * de), acting between unit responses. The force channel
(common mode) drives the sum of reaction torques across all units to zero
with gain Kf/N. Retouching blends a tape-backed leader with a live editor
through the internal division ratio alpha and is algebraically the N = 3
multilateral law when alpha = 0.5.
"""

from dataclasses import dataclass, field

import numpy as np

TORQUE_LIMIT = 10.0  # N*m, actuator saturation applied before the plant


@dataclass
class Gains:
    kp: float = 256.0   # 1/s^2
    kd: float = 32.0    # 1/s
    kf: float = 0.7
    alpha: float = 0.5  # internal division ratio, 0 = tape only, 1 = editor only

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class CommandFrame:
    """Position/velocity/torque command triple fed to a follower controller."""

    q_cmd: np.ndarray
    dq_cmd: np.ndarray
    tau_cmd: np.ndarray


@dataclass
class UnitFeedback:
    """Response values of one unit: measured angle, velocity estimate, RFOB torque.

    Tape-backed units report recorded values here and never receive commands.
    """

    q: np.ndarray
    dq: np.ndarray
    tau: np.ndarray


@dataclass
class ControlOutput:
    tau_ref: np.ndarray
    diff_mode: np.ndarray
    common_mode: np.ndarray
    compensation: np.ndarray


def position_pd(q_cmd, dq_cmd, q, dq, jn, gains: Gains) -> np.ndarray:
    """Differential-mode torque (Jn/2) * (Kp*(q_cmd-q) + Kd*(dq_cmd-dq)).

    dq_cmd comes from the commanding unit's velocity signal, never from
    numerical differentiation of q_cmd.
    """
    return 0.5 * jn * (gains.kp * (q_cmd - q) + gains.kd * (dq_cmd - dq))


def force_p(tau_sum, gains: Gains, n_units: int) -> np.ndarray:
    """Common-mode torque -(Kf/N) * sum of unit reaction torques."""
    if n_units < 2:
        raise ValueError("force distribution needs at least 2 units")
    return -(gains.kf / n_units) * tau_sum


def _output(diff, common, comp) -> ControlOutput:
    return ControlOutput(tau_ref=diff + common + comp,
                         diff_mode=diff, common_mode=common, compensation=comp)


def bilateral_4ch_step(leader: UnitFeedback, follower: UnitFeedback,
                       comp_l, comp_f, jn_l, jn_f, gains: Gains):
    """Four-channel coupling of two live units. Returns (leader_out, follower_out)."""
    tau_sum = leader.tau + follower.tau
    common = force_p(tau_sum, gains, 2)
    diff_l = position_pd(follower.q, follower.dq, leader.q, leader.dq, jn_l, gains)
    diff_f = position_pd(leader.q, leader.dq, follower.q, follower.dq, jn_f, gains)
    return _output(diff_l, common, comp_l), _output(diff_f, common.copy(), comp_f)


def motion_copy_step(cmd: CommandFrame, follower: UnitFeedback,
                     comp_f, jn_f, gains: Gains) -> ControlOutput:
    """Replay a recorded command triple against a single live follower."""
    common = force_p(cmd.tau_cmd + follower.tau, gains, 2)
    diff = position_pd(cmd.q_cmd, cmd.dq_cmd, follower.q, follower.dq, jn_f, gains)
    return _output(diff, common, comp_f)


def blend_command(tape: CommandFrame, editor: UnitFeedback, alpha: float) -> CommandFrame:
    """Internal-division command for the follower.

    Position and velocity blend as alpha * editor + (1 - alpha) * tape; the
    torque command sums both sources so a later two-unit replay reproduces
    the three-unit force balance.
    """
    return CommandFrame(
        q_cmd=alpha * editor.q + (1.0 - alpha) * tape.q_cmd,
        dq_cmd=alpha * editor.dq + (1.0 - alpha) * tape.dq_cmd,
        tau_cmd=tape.tau_cmd + editor.tau,
    )


def retouch_step(tape: CommandFrame, follower: UnitFeedback, editor: UnitFeedback,
                 comp_f, comp_e, jn_f, jn_e, gains: Gains):
    """Three-unit post-editing step.

    The follower tracks the internal division of tape and editor responses;
    the editor symmetrically tracks the division of tape and follower. Both
    share the common mode built from the three-way torque sum. Returns
    (follower_out, editor_out, blended) where blended is the command frame to
    record onto the retouched tape.
    """
    tau_sum = tape.tau_cmd + follower.tau + editor.tau
    common = force_p(tau_sum, gains, 3)

    blended = blend_command(tape, editor, gains.alpha)
    diff_f = position_pd(blended.q_cmd, blended.dq_cmd,
                         follower.q, follower.dq, jn_f, gains)

    q_cmd_e = gains.alpha * follower.q + (1.0 - gains.alpha) * tape.q_cmd
    dq_cmd_e = gains.alpha * follower.dq + (1.0 - gains.alpha) * tape.dq_cmd
    diff_e = position_pd(q_cmd_e, dq_cmd_e, editor.q, editor.dq, jn_e, gains)

    return _output(diff_f, common, comp_f), _output(diff_e, common.copy(), comp_e), blended


def multilateral_step(units: list, comps: list, jns: list, gains: Gains) -> list:
    """General N-unit coupling.

    units is an ordered list of UnitFeedback. comps[i]/jns[i] are the
    compensation torque and nominal inertia for unit i, or None for
    tape-backed units, which contribute feedback but receive no command
    (their output slot is None). Each driven unit tracks the mean of all
    other units; everyone shares the common mode -(Kf/N) * sum(tau).
    """
    n = len(units)
    if n < 2:
        raise ValueError("multilateral coupling needs at least 2 units")
    tau_sum = units[0].tau
    for u in units[1:]:
        tau_sum = tau_sum + u.tau
    outputs = []
    for i, u in enumerate(units):
        if comps[i] is None:
            outputs.append(None)
            continue
        q_t = None
        dq_t = None
        for j, other in enumerate(units):
            if j == i:
                continue
            q_t = other.q if q_t is None else q_t + other.q
            dq_t = other.dq if dq_t is None else dq_t + other.dq
        q_t = q_t / (n - 1)
        dq_t = dq_t / (n - 1)
        common = force_p(tau_sum, gains, n)
        diff = position_pd(q_t, dq_t, u.q, u.dq, jns[i], gains)
        outputs.append(_output(diff, common, comps[i]))
    return outputs


def saturate(tau_ref, limit: float = TORQUE_LIMIT):
    """Clip to the actuator limit. Returns (clipped, was_active)."""
    clipped = np.clip(tau_ref, -limit, limit)
    return clipped, bool((clipped != tau_ref).any())
