"""Tape container, speed-up resampling, and file-format tests.

The save format uses shortest round-trip float formatting, so the strongest
checks here are byte-level: save -> load -> save must reproduce the file
exactly, and speed_up must copy q/tau bit-unchanged while scaling dq.
"""

import numpy as np
import pytest

from retouch.model import N_JOINTS
from retouch.tape import (MAGIC, Tape, TapeMeta, TapeSample, append_sample,
                          load_tape, sample_at, save_tape, speed_up)

DT = 0.002


def random_tape(rng, n, dt=DT, source=""):
    tape = Tape(TapeMeta(dt=dt, source=source))
    for i in range(n):
        append_sample(tape, TapeSample(
            step=i, t=i * dt,
            q_cmd=rng.uniform(-3, 3, N_JOINTS),
            dq_cmd=rng.uniform(-5, 5, N_JOINTS),
            tau_cmd=rng.uniform(-10, 10, N_JOINTS)))
    return tape


class TestTapeContainer:
    def test_duration_spans_samples(self):
        rng = np.random.default_rng(1)
        assert random_tape(rng, 5).duration == pytest.approx(4 * DT)
        assert Tape(TapeMeta(dt=DT)).duration == 0.0
        assert random_tape(rng, 1).duration == 0.0

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError, match="dt"):
            Tape(TapeMeta(dt=0.0))

    def test_rejects_wrong_joint_count(self):
        with pytest.raises(ValueError, match="joint"):
            Tape(TapeMeta(dt=DT, joint_count=7))

    def test_equals_is_bitwise(self):
        rng = np.random.default_rng(2)
        a = random_tape(rng, 10)
        b = Tape(TapeMeta(dt=DT))
        for i in range(10):
            append_sample(b, TapeSample(a.steps[i], a.t[i], a.q[i].copy(),
                                        a.dq[i].copy(), a.tau[i].copy()))
        assert a.equals(b)
        b.q[3] = np.nextafter(b.q[3], np.inf)  # one ulp up
        assert not a.equals(b)

    def test_equals_checks_factor(self):
        rng = np.random.default_rng(3)
        a = random_tape(rng, 4)
        b = random_tape(np.random.default_rng(3), 4)
        b.meta.speed_factor = 3
        assert not a.equals(b)


class TestAppendSample:
    def test_rejects_step_gap(self):
        tape = Tape(TapeMeta(dt=DT))
        with pytest.raises(ValueError, match="expected step 0"):
            append_sample(tape, TapeSample(1, DT, np.zeros(N_JOINTS),
                                           np.zeros(N_JOINTS), np.zeros(N_JOINTS)))

    def test_rejects_inconsistent_time(self):
        tape = Tape(TapeMeta(dt=DT))
        with pytest.raises(ValueError, match="deviates"):
            append_sample(tape, TapeSample(0, 0.1, np.zeros(N_JOINTS),
                                           np.zeros(N_JOINTS), np.zeros(N_JOINTS)))

    def test_rejects_wrong_shape(self):
        tape = Tape(TapeMeta(dt=DT))
        with pytest.raises(ValueError, match="joint"):
            append_sample(tape, TapeSample(0, 0.0, np.zeros(3),
                                           np.zeros(N_JOINTS), np.zeros(N_JOINTS)))

    def test_rejects_non_finite(self):
        tape = Tape(TapeMeta(dt=DT))
        q = np.zeros(N_JOINTS)
        q[2] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            append_sample(tape, TapeSample(0, 0.0, q, np.zeros(N_JOINTS),
                                           np.zeros(N_JOINTS)))


class TestSampleAt:
    def test_in_range_returns_row(self):
        rng = np.random.default_rng(4)
        tape = random_tape(rng, 6)
        frame, held = sample_at(tape, 3)
        assert held is False
        assert np.array_equal(frame.q_cmd, tape.q[3])
        assert np.array_equal(frame.dq_cmd, tape.dq[3])
        assert np.array_equal(frame.tau_cmd, tape.tau[3])

    def test_past_end_holds_last(self):
        rng = np.random.default_rng(5)
        tape = random_tape(rng, 6)
        frame, held = sample_at(tape, 100)
        assert held is True
        assert np.array_equal(frame.q_cmd, tape.q[-1])

    def test_negative_step_raises(self):
        rng = np.random.default_rng(6)
        tape = random_tape(rng, 3)
        with pytest.raises(IndexError, match="negative"):
            sample_at(tape, -1)

    def test_empty_tape_raises(self):
        with pytest.raises(IndexError, match="empty"):
            sample_at(Tape(TapeMeta(dt=DT)), 0)


class TestSpeedUp:
    def test_keeps_every_kth_row_bitwise(self):
        rng = np.random.default_rng(7)
        tape = random_tape(rng, 101)
        fast = speed_up(tape, 3)
        assert len(fast) == 34  # kept indices 0, 3, ..., 99: ceil(101 / 3)
        for i in range(len(fast)):
            src = 3 * i
            assert np.array_equal(fast.q[i], tape.q[src])
            assert np.array_equal(fast.tau[i], tape.tau[src])
            assert np.array_equal(fast.dq[i], tape.dq[src] * 3.0)
            assert fast.steps[i] == i
            assert fast.t[i] == i * DT

    def test_row_count_rule(self):
        # keeping indices 0, k, 2k, ... of n rows leaves ceil(n / k) rows;
        # a (3600 * k + 1)-row tape maps to 3600 + 1 rows
        rng = np.random.default_rng(8)
        tape = random_tape(rng, 12001 // 100 + 1)  # 121 rows, cheap analog
        assert len(speed_up(tape, 3)) == 41
        assert len(speed_up(tape, 2)) == 61
        assert len(speed_up(tape, 1)) == 121

    def test_factor_accumulates(self):
        rng = np.random.default_rng(9)
        tape = random_tape(rng, 30)
        fast = speed_up(speed_up(tape, 2), 3)
        assert fast.meta.speed_factor == 6

    def test_factor_one_is_identity_copy(self):
        rng = np.random.default_rng(10)
        tape = random_tape(rng, 20)
        same = speed_up(tape, 1)
        assert same.equals(tape)
        assert same.q[0] is not tape.q[0]

    def test_velocity_scale_is_exact_float_multiply(self):
        rng = np.random.default_rng(11)
        tape = random_tape(rng, 10)
        fast = speed_up(tape, 3)
        for i in range(len(fast)):
            assert np.array_equal(fast.dq[i], tape.dq[3 * i] * float(3))

    @pytest.mark.parametrize("bad", [0, -1, 1.5, "3", None])
    def test_rejects_bad_factor(self, bad):
        rng = np.random.default_rng(12)
        tape = random_tape(rng, 5)
        with pytest.raises(ValueError, match="positive integer"):
            speed_up(tape, bad)

    def test_source_preserved(self):
        rng = np.random.default_rng(13)
        tape = random_tape(rng, 5, source="bench run 7")
        assert speed_up(tape, 2).meta.source == "bench run 7"


class TestFileRoundTrip:
    def test_save_load_save_byte_identical(self, tmp_path):
        rng = np.random.default_rng(14)
        for trial in range(100):
            tape = random_tape(rng, 7, source="trial" if trial % 2 else "")
            p1 = tmp_path / f"a{trial}.tape"
            p2 = tmp_path / f"b{trial}.tape"
            save_tape(tape, p1)
            loaded = load_tape(p1)
            assert loaded.equals(tape)
            save_tape(loaded, p2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_header_carries_metadata(self, tmp_path):
        rng = np.random.default_rng(15)
        tape = random_tape(rng, 3, source="teach, run 1")
        tape.meta.speed_factor = 3
        p = tmp_path / "t.tape"
        save_tape(tape, p)
        header = p.read_text().splitlines()[0]
        assert header.startswith(MAGIC)
        assert "dt=0.002" in header
        assert "factor=3" in header
        # commas in source are replaced so the header stays parseable
        assert "source=teach; run 1" in header
        assert load_tape(p).meta.source == "teach; run 1"

    def test_speed_up_then_save_matches_load_then_speed_up(self, tmp_path):
        rng = np.random.default_rng(16)
        tape = random_tape(rng, 31)
        p = tmp_path / "t.tape"
        save_tape(tape, p)
        a = speed_up(load_tape(p), 3)
        b = speed_up(tape, 3)
        assert a.equals(b)


class TestLoadErrors:
    def _write(self, tmp_path, text):
        p = tmp_path / "bad.tape"
        p.write_text(text)
        return p

    def test_wrong_magic(self, tmp_path):
        p = self._write(tmp_path, "# other-format v9\nstep,t\n")
        with pytest.raises(ValueError, match="line 1: not a retouch-tape"):
            load_tape(p)

    def test_missing_dt(self, tmp_path):
        p = self._write(tmp_path, f"{MAGIC}, factor=1\nstep,t\n")
        with pytest.raises(ValueError, match="missing dt"):
            load_tape(p)

    def test_unknown_header_field(self, tmp_path):
        p = self._write(tmp_path, f"{MAGIC}, dt=0.002, color=red\nstep,t\n")
        with pytest.raises(ValueError, match="unknown header field"):
            load_tape(p)

    def test_missing_column_row(self, tmp_path):
        p = self._write(tmp_path, f"{MAGIC}, dt=0.002\n")
        with pytest.raises(ValueError, match="line 2: missing column header"):
            load_tape(p)

    def test_wrong_column_count(self, tmp_path):
        p = self._write(tmp_path,
                        f"{MAGIC}, dt=0.002\nstep,t\n0,0.0,1.0\n")
        with pytest.raises(ValueError, match="line 3: expected 26 columns"):
            load_tape(p)

    def test_non_contiguous_steps(self, tmp_path):
        row0 = ",".join(["0", "0.0"] + ["0.0"] * 24)
        row2 = ",".join(["2", "0.004"] + ["0.0"] * 24)
        p = self._write(tmp_path, f"{MAGIC}, dt=0.002\nstep,t\n{row0}\n{row2}\n")
        with pytest.raises(ValueError, match="line 4: non-contiguous step 2"):
            load_tape(p)

    def test_non_finite_value(self, tmp_path):
        row = ",".join(["0", "0.0"] + ["inf"] + ["0.0"] * 23)
        p = self._write(tmp_path, f"{MAGIC}, dt=0.002\nstep,t\n{row}\n")
        with pytest.raises(ValueError, match="line 3: non-finite"):
            load_tape(p)

    def test_unparseable_float(self, tmp_path):
        row = ",".join(["0", "0.0"] + ["abc"] + ["0.0"] * 23)
        p = self._write(tmp_path, f"{MAGIC}, dt=0.002\nstep,t\n{row}\n")
        with pytest.raises(ValueError, match="line 3"):
            load_tape(p)
