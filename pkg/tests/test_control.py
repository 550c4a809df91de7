"""Control-law tests.

The laws are pure ndarray functions, so most checks are exact: hand-derived
PD values, bitwise decomposition, IEEE negation symmetry for the
action-reaction structure, and the algebraic identity between the three-unit
retouch step and the general multilateral law at alpha = 0.5.
"""

import numpy as np
import pytest

from retouch.control import (TORQUE_LIMIT, CommandFrame, ControlOutput, Gains,
                             UnitFeedback, bilateral_4ch_step, blend_command,
                             force_p, motion_copy_step, multilateral_step,
                             position_pd, retouch_step, saturate)
from retouch.model import N_JOINTS

RNG_SEED = 20240917


def rand_feedback(rng, scale=1.0):
    return UnitFeedback(q=rng.uniform(-2, 2, N_JOINTS),
                        dq=rng.uniform(-3, 3, N_JOINTS),
                        tau=rng.uniform(-scale, scale, N_JOINTS))


def rand_frame(rng):
    return CommandFrame(q_cmd=rng.uniform(-2, 2, N_JOINTS),
                        dq_cmd=rng.uniform(-3, 3, N_JOINTS),
                        tau_cmd=rng.uniform(-1, 1, N_JOINTS))


class TestGains:
    def test_defaults(self):
        g = Gains()
        assert (g.kp, g.kd, g.kf, g.alpha) == (256.0, 32.0, 0.7, 0.5)

    @pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0])
    def test_alpha_boundaries_accepted(self, alpha):
        assert Gains(alpha=alpha).alpha == alpha

    @pytest.mark.parametrize("alpha", [-0.1, 1.0001, 2.0])
    def test_alpha_out_of_range_rejected(self, alpha):
        with pytest.raises(ValueError, match="alpha"):
            Gains(alpha=alpha)


class TestPositionPd:
    def test_hand_derived_values(self):
        # jn = 0.037, kp = 256: unit angle error -> 0.5 * 0.037 * 256 = 4.736
        # jn = 0.037, kd = 32: unit velocity error -> 0.5 * 0.037 * 32 = 0.592
        g = Gains()
        jn = np.full(N_JOINTS, 0.037)
        zero = np.zeros(N_JOINTS)
        one = np.ones(N_JOINTS)
        tau_p = position_pd(one, zero, zero, zero, jn, g)
        tau_d = position_pd(zero, one, zero, zero, jn, g)
        assert tau_p == pytest.approx(np.full(N_JOINTS, 4.736), rel=1e-12)
        assert tau_d == pytest.approx(np.full(N_JOINTS, 0.592), rel=1e-12)

    def test_zero_error_zero_torque(self):
        g = Gains()
        rng = np.random.default_rng(RNG_SEED)
        q = rng.uniform(-2, 2, N_JOINTS)
        dq = rng.uniform(-3, 3, N_JOINTS)
        jn = np.full(N_JOINTS, 0.05)
        assert np.all(position_pd(q, dq, q, dq, jn, g) == 0.0)

    def test_elementwise_inertia_scaling(self):
        g = Gains(kp=100.0, kd=0.0)
        jn = np.arange(1.0, N_JOINTS + 1)
        e = np.ones(N_JOINTS)
        z = np.zeros(N_JOINTS)
        out = position_pd(e, z, z, z, jn, g)
        assert out == pytest.approx(0.5 * jn * 100.0, rel=1e-12)


class TestForceP:
    def test_exact_formula(self):
        g = Gains()
        rng = np.random.default_rng(RNG_SEED)
        tau_sum = rng.uniform(-4, 4, N_JOINTS)
        for n in (2, 3, 5):
            assert np.array_equal(force_p(tau_sum, g, n),
                                  -(g.kf / n) * tau_sum)

    def test_rejects_single_unit(self):
        with pytest.raises(ValueError, match="at least 2"):
            force_p(np.zeros(N_JOINTS), Gains(), 1)

    def test_sign_opposes_torque_sum(self):
        # a positive reaction-torque sum produces a negative common-mode
        # command on every unit, driving the sum toward zero
        out = force_p(np.full(N_JOINTS, 2.0), Gains(), 2)
        assert np.all(out < 0.0)


class TestBilateral:
    def setup_method(self):
        self.rng = np.random.default_rng(RNG_SEED)
        self.g = Gains()
        self.jn = np.full(N_JOINTS, 0.04)
        self.comp_l = self.rng.uniform(-1, 1, N_JOINTS)
        self.comp_f = self.rng.uniform(-1, 1, N_JOINTS)

    def test_decomposition_is_bitwise(self):
        for _ in range(50):
            fl = rand_feedback(self.rng)
            ff = rand_feedback(self.rng)
            out_l, out_f = bilateral_4ch_step(fl, ff, self.comp_l, self.comp_f,
                                              self.jn, self.jn, self.g)
            for out in (out_l, out_f):
                assert np.array_equal(
                    out.tau_ref, out.diff_mode + out.common_mode + out.compensation)

    def test_common_mode_shared(self):
        fl = rand_feedback(self.rng)
        ff = rand_feedback(self.rng)
        out_l, out_f = bilateral_4ch_step(fl, ff, self.comp_l, self.comp_f,
                                          self.jn, self.jn, self.g)
        assert np.array_equal(out_l.common_mode, out_f.common_mode)
        assert out_l.common_mode is not out_f.common_mode

    def test_differential_modes_are_exact_negations(self):
        # equal nominal inertias: IEEE negation symmetry makes the two PD
        # torques exact mirrors, the discrete form of action-reaction
        for _ in range(20):
            fl = rand_feedback(self.rng)
            ff = rand_feedback(self.rng)
            out_l, out_f = bilateral_4ch_step(fl, ff, self.comp_l, self.comp_f,
                                              self.jn, self.jn, self.g)
            assert np.array_equal(out_l.diff_mode, -out_f.diff_mode)

    def test_force_channel_off_leaves_pure_position_coupling(self):
        g = Gains(kf=0.0)
        fl = rand_feedback(self.rng)
        ff = rand_feedback(self.rng)
        out_l, out_f = bilateral_4ch_step(fl, ff, self.comp_l, self.comp_f,
                                          self.jn, self.jn, g)
        assert np.all(out_l.common_mode == 0.0)
        assert np.all(out_f.common_mode == 0.0)

    def test_position_channel_off_leaves_pure_force_coupling(self):
        g = Gains(kp=0.0, kd=0.0)
        fl = rand_feedback(self.rng)
        ff = rand_feedback(self.rng)
        out_l, out_f = bilateral_4ch_step(fl, ff, self.comp_l, self.comp_f,
                                          self.jn, self.jn, g)
        assert np.all(out_l.diff_mode == 0.0)
        assert np.all(out_f.diff_mode == 0.0)


class TestMotionCopy:
    def test_matches_bilateral_follower_side(self):
        # replaying the leader's recorded response must command the follower
        # exactly as the live coupling would have
        rng = np.random.default_rng(RNG_SEED)
        g = Gains()
        jn = np.full(N_JOINTS, 0.04)
        comp_f = rng.uniform(-1, 1, N_JOINTS)
        for _ in range(20):
            fl = rand_feedback(rng)
            ff = rand_feedback(rng)
            _, out_live = bilateral_4ch_step(fl, ff, np.zeros(N_JOINTS),
                                             comp_f, jn, jn, g)
            cmd = CommandFrame(q_cmd=fl.q, dq_cmd=fl.dq, tau_cmd=fl.tau)
            out_replay = motion_copy_step(cmd, ff, comp_f, jn, g)
            assert np.array_equal(out_replay.tau_ref, out_live.tau_ref)
            assert np.array_equal(out_replay.diff_mode, out_live.diff_mode)
            assert np.array_equal(out_replay.common_mode, out_live.common_mode)


class TestBlendCommand:
    def test_exact_internal_division_formula(self):
        # the blended target equals alpha * editor + (1 - alpha) * tape with
        # exactly that operation order, checked on 10^4 random inputs
        rng = np.random.default_rng(RNG_SEED)
        for _ in range(10_000):
            tape = rand_frame(rng)
            editor = rand_feedback(rng)
            alpha = float(rng.uniform(0, 1))
            b = blend_command(tape, editor, alpha)
            assert np.array_equal(b.q_cmd, alpha * editor.q + (1.0 - alpha) * tape.q_cmd)
            assert np.array_equal(b.dq_cmd, alpha * editor.dq + (1.0 - alpha) * tape.dq_cmd)
            assert np.array_equal(b.tau_cmd, tape.tau_cmd + editor.tau)

    def test_alpha_zero_returns_tape(self):
        rng = np.random.default_rng(RNG_SEED)
        tape = rand_frame(rng)
        editor = rand_feedback(rng)
        b = blend_command(tape, editor, 0.0)
        assert np.array_equal(b.q_cmd, tape.q_cmd)
        assert np.array_equal(b.dq_cmd, tape.dq_cmd)

    def test_alpha_one_returns_editor(self):
        rng = np.random.default_rng(RNG_SEED)
        tape = rand_frame(rng)
        editor = rand_feedback(rng)
        b = blend_command(tape, editor, 1.0)
        assert np.array_equal(b.q_cmd, editor.q)
        assert np.array_equal(b.dq_cmd, editor.dq)

    def test_half_alpha_is_midpoint_of_equal_inputs(self):
        # alpha = 0.5 scales by an exact power of two, so blending two equal
        # inputs reproduces them bit for bit
        rng = np.random.default_rng(RNG_SEED)
        q = rng.uniform(-2, 2, N_JOINTS)
        dq = rng.uniform(-3, 3, N_JOINTS)
        tape = CommandFrame(q_cmd=q.copy(), dq_cmd=dq.copy(),
                            tau_cmd=np.zeros(N_JOINTS))
        editor = UnitFeedback(q=q.copy(), dq=dq.copy(), tau=np.zeros(N_JOINTS))
        b = blend_command(tape, editor, 0.5)
        assert np.array_equal(b.q_cmd, q)
        assert np.array_equal(b.dq_cmd, dq)


class TestRetouchStep:
    def setup_method(self):
        self.rng = np.random.default_rng(RNG_SEED)
        self.jn = np.full(N_JOINTS, 0.04)

    def _random_inputs(self):
        tape = rand_frame(self.rng)
        follower = rand_feedback(self.rng)
        editor = rand_feedback(self.rng)
        comp_f = self.rng.uniform(-1, 1, N_JOINTS)
        comp_e = self.rng.uniform(-1, 1, N_JOINTS)
        return tape, follower, editor, comp_f, comp_e

    def test_half_alpha_equals_three_unit_multilateral_bitwise(self):
        # at alpha = 0.5, "track the blend of the other two" is the same
        # arithmetic as "track the mean of the other two": 0.5 is a power of
        # two, so both roundings agree bit for bit
        g = Gains(alpha=0.5)
        for _ in range(200):
            tape, follower, editor, comp_f, comp_e = self._random_inputs()
            out_f, out_e, _ = retouch_step(tape, follower, editor,
                                           comp_f, comp_e, self.jn, self.jn, g)
            tape_fb = UnitFeedback(q=tape.q_cmd, dq=tape.dq_cmd, tau=tape.tau_cmd)
            outs = multilateral_step([tape_fb, follower, editor],
                                     [None, comp_f, comp_e],
                                     [None, self.jn, self.jn], g)
            assert outs[0] is None
            for ml, rt in ((outs[1], out_f), (outs[2], out_e)):
                assert np.array_equal(ml.tau_ref, rt.tau_ref)
                assert np.array_equal(ml.diff_mode, rt.diff_mode)
                assert np.array_equal(ml.common_mode, rt.common_mode)
                assert np.array_equal(ml.compensation, rt.compensation)

    def test_alpha_zero_tracks_tape_only(self):
        g = Gains(alpha=0.0)
        tape, follower, editor, comp_f, comp_e = self._random_inputs()
        out_f, out_e, blended = retouch_step(tape, follower, editor,
                                             comp_f, comp_e, self.jn, self.jn, g)
        expect_f = position_pd(tape.q_cmd, tape.dq_cmd, follower.q, follower.dq,
                               self.jn, g)
        expect_e = position_pd(tape.q_cmd, tape.dq_cmd, editor.q, editor.dq,
                               self.jn, g)
        assert np.array_equal(out_f.diff_mode, expect_f)
        assert np.array_equal(out_e.diff_mode, expect_e)
        assert np.array_equal(blended.q_cmd, tape.q_cmd)

    def test_alpha_one_cross_couples_live_units(self):
        g = Gains(alpha=1.0)
        tape, follower, editor, comp_f, comp_e = self._random_inputs()
        out_f, out_e, blended = retouch_step(tape, follower, editor,
                                             comp_f, comp_e, self.jn, self.jn, g)
        expect_f = position_pd(editor.q, editor.dq, follower.q, follower.dq,
                               self.jn, g)
        expect_e = position_pd(follower.q, follower.dq, editor.q, editor.dq,
                               self.jn, g)
        assert np.array_equal(out_f.diff_mode, expect_f)
        assert np.array_equal(out_e.diff_mode, expect_e)
        assert np.array_equal(blended.q_cmd, editor.q)

    def test_common_mode_uses_three_way_sum(self):
        g = Gains()
        tape, follower, editor, comp_f, comp_e = self._random_inputs()
        out_f, out_e, _ = retouch_step(tape, follower, editor,
                                       comp_f, comp_e, self.jn, self.jn, g)
        expect = -(g.kf / 3) * (tape.tau_cmd + follower.tau + editor.tau)
        assert np.array_equal(out_f.common_mode, expect)
        assert np.array_equal(out_e.common_mode, expect)

    def test_blended_frame_records_torque_sum(self):
        g = Gains()
        tape, follower, editor, comp_f, comp_e = self._random_inputs()
        _, _, blended = retouch_step(tape, follower, editor,
                                     comp_f, comp_e, self.jn, self.jn, g)
        assert np.array_equal(blended.tau_cmd, tape.tau_cmd + editor.tau)


class TestMultilateral:
    def test_rejects_single_unit(self):
        u = UnitFeedback(q=np.zeros(N_JOINTS), dq=np.zeros(N_JOINTS),
                         tau=np.zeros(N_JOINTS))
        with pytest.raises(ValueError, match="at least 2"):
            multilateral_step([u], [np.zeros(N_JOINTS)], [np.ones(N_JOINTS)],
                              Gains())

    def test_two_units_match_bilateral(self):
        rng = np.random.default_rng(RNG_SEED)
        g = Gains()
        jn = np.full(N_JOINTS, 0.04)
        comp_l = rng.uniform(-1, 1, N_JOINTS)
        comp_f = rng.uniform(-1, 1, N_JOINTS)
        fl = rand_feedback(rng)
        ff = rand_feedback(rng)
        out_l, out_f = bilateral_4ch_step(fl, ff, comp_l, comp_f, jn, jn, g)
        outs = multilateral_step([fl, ff], [comp_l, comp_f], [jn, jn], g)
        assert np.array_equal(outs[0].tau_ref, out_l.tau_ref)
        assert np.array_equal(outs[1].tau_ref, out_f.tau_ref)

    def test_tape_slots_produce_no_output(self):
        rng = np.random.default_rng(RNG_SEED)
        jn = np.full(N_JOINTS, 0.04)
        units = [rand_feedback(rng) for _ in range(3)]
        outs = multilateral_step(units, [None, np.zeros(N_JOINTS), None],
                                 [None, jn, None], Gains())
        assert outs[0] is None and outs[2] is None
        assert isinstance(outs[1], ControlOutput)


class TestSaturate:
    def test_within_limit_passthrough(self):
        tau = np.array([-10.0, -5.0, 0.0, 5.0, 10.0, 0.0, 0.0, 0.0])
        clipped, active = saturate(tau)
        assert np.array_equal(clipped, tau)
        assert active is False

    def test_above_limit_clips_and_flags(self):
        tau = np.zeros(N_JOINTS)
        tau[3] = 10.0001
        clipped, active = saturate(tau)
        assert clipped[3] == TORQUE_LIMIT
        assert active is True

    def test_symmetric_negative_clip(self):
        tau = np.full(N_JOINTS, -25.0)
        clipped, active = saturate(tau)
        assert np.all(clipped == -TORQUE_LIMIT)
        assert active is True

    def test_custom_limit(self):
        tau = np.full(N_JOINTS, 3.0)
        clipped, active = saturate(tau, limit=2.0)
        assert np.all(clipped == 2.0)
        assert active is True
