"""Motion tapes: recorded command triples and the retouch-tape v1 file format.

A tape stores one command triple (q_cmd, dq_cmd, tau_cmd) per control tick.
On disk a tape is a comma-separated text file:

    # retouch-tape v1, dt=0.002, factor=1
    step,t,q1..q8,dq1..dq8,tau1..tau8
    0,0.0,...

The first line carries the metadata (an optional ", source=<text>" field may
follow factor); the second names the 26 data columns; every further line is
one sample. Floats are written with shortest round-trip formatting, so
save -> load -> save is byte-identical. See docs/tape-format.md.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import N_JOINTS
from .control import CommandFrame

MAGIC = "# retouch-tape v1"
N_COLUMNS = 2 + 3 * N_JOINTS


@dataclass
class TapeMeta:
    dt: float
    joint_count: int = N_JOINTS
    speed_factor: int = 1
    source: str = ""
    schema_version: int = 1


@dataclass
class TapeSample:
    step: int
    t: float
    q_cmd: np.ndarray
    dq_cmd: np.ndarray
    tau_cmd: np.ndarray


class Tape:
    """Append-only recording of command triples at fixed dt."""

    def __init__(self, meta: TapeMeta):
        if meta.dt <= 0:
            raise ValueError("tape dt must be positive")
        if meta.joint_count != N_JOINTS:
            raise ValueError(f"only {N_JOINTS}-joint tapes are supported")
        self.meta = meta
        self.steps: list[int] = []
        self.t: list[float] = []
        self.q: list[np.ndarray] = []
        self.dq: list[np.ndarray] = []
        self.tau: list[np.ndarray] = []

    def __len__(self):
        return len(self.steps)

    @property
    def duration(self) -> float:
        """Time spanned by the samples: (n - 1) * dt, 0 for empty tapes."""
        return max(len(self.steps) - 1, 0) * self.meta.dt

    def equals(self, other: "Tape") -> bool:
        """Bitwise equality of metadata and every sample."""
        if (self.meta.dt != other.meta.dt
                or self.meta.speed_factor != other.meta.speed_factor
                or len(self) != len(other)):
            return False
        if self.steps != other.steps or self.t != other.t:
            return False
        for mine, theirs in ((self.q, other.q), (self.dq, other.dq), (self.tau, other.tau)):
            for a, b in zip(mine, theirs):
                if not np.array_equal(a, b):
                    return False
        return True


def append_sample(tape: Tape, sample: TapeSample) -> None:
    """Append one sample; steps must be contiguous and t consistent with step*dt."""
    expected_step = len(tape.steps)
    if sample.step != expected_step:
        raise ValueError(f"expected step {expected_step}, got {sample.step}")
    if abs(sample.t - sample.step * tape.meta.dt) > tape.meta.dt / 2:
        raise ValueError(
            f"sample t={sample.t} deviates from step*dt={sample.step * tape.meta.dt} "
            f"by more than dt/2")
    for arr in (sample.q_cmd, sample.dq_cmd, sample.tau_cmd):
        if np.asarray(arr).shape != (N_JOINTS,):
            raise ValueError(f"expected {N_JOINTS}-joint sample arrays")
        if not np.isfinite(arr).all():
            raise ValueError(f"non-finite values in sample at step {sample.step}")
    tape.steps.append(sample.step)
    tape.t.append(sample.t)
    tape.q.append(np.array(sample.q_cmd, dtype=float))
    tape.dq.append(np.array(sample.dq_cmd, dtype=float))
    tape.tau.append(np.array(sample.tau_cmd, dtype=float))


def sample_at(tape: Tape, step: int):
    """Command triple at a step index. Past the end the last sample is held.

    Returns (CommandFrame, held). The arrays are views into the tape; treat
    them as read-only.
    """
    if step < 0:
        raise IndexError("negative tape step")
    if len(tape) == 0:
        raise IndexError("empty tape")
    held = step >= len(tape)
    k = len(tape) - 1 if held else step
    return CommandFrame(q_cmd=tape.q[k], dq_cmd=tape.dq[k], tau_cmd=tape.tau[k]), held


def speed_up(tape: Tape, k: int) -> Tape:
    """Keep every k-th sample and scale velocities by k.

    Positions and torques are copied bit-unchanged; dq is multiplied by k;
    steps are renumbered and t re-stamped at dt spacing, so the result plays
    k times faster through the same controller. The cumulative factor is
    tracked in the metadata.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"speed-up factor must be a positive integer, got {k!r}")
    meta = TapeMeta(dt=tape.meta.dt, speed_factor=tape.meta.speed_factor * k,
                    source=tape.meta.source, schema_version=tape.meta.schema_version)
    out = Tape(meta)
    kf = float(k)
    for i, src in enumerate(range(0, len(tape), k)):
        out.steps.append(i)
        out.t.append(i * tape.meta.dt)
        out.q.append(tape.q[src].copy())
        out.dq.append(tape.dq[src] * kf)
        out.tau.append(tape.tau[src].copy())
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def save_tape(tape: Tape, path) -> None:
    header = f"{MAGIC}, dt={_fmt(tape.meta.dt)}, factor={tape.meta.speed_factor}"
    if tape.meta.source:
        header += f", source={tape.meta.source.replace(',', ';')}"
    names = (["step", "t"]
             + [f"q{j}" for j in range(1, N_JOINTS + 1)]
             + [f"dq{j}" for j in range(1, N_JOINTS + 1)]
             + [f"tau{j}" for j in range(1, N_JOINTS + 1)])
    lines = [header, ",".join(names)]
    for i in range(len(tape)):
        row = [str(tape.steps[i]), _fmt(tape.t[i])]
        row += [_fmt(v) for v in tape.q[i]]
        row += [_fmt(v) for v in tape.dq[i]]
        row += [_fmt(v) for v in tape.tau[i]]
        lines.append(",".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_tape(path) -> Tape:
    """Parse a retouch-tape v1 file; raises ValueError naming the offending line."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise ValueError(f"{path}: line 1: not a retouch-tape v1 file")
    meta = _parse_header(lines[0], path)
    tape = Tape(meta)
    # line 2 is the column-name row
    if len(lines) < 2 or not lines[1].startswith("step,"):
        raise ValueError(f"{path}: line 2: missing column header")
    for ln, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != N_COLUMNS:
            raise ValueError(
                f"{path}: line {ln}: expected {N_COLUMNS} columns, got {len(fields)}")
        try:
            step = int(fields[0])
            vals = [float(v) for v in fields[1:]]
        except ValueError as e:
            raise ValueError(f"{path}: line {ln}: {e}") from None
        expected = len(tape.steps)
        if step != expected:
            raise ValueError(f"{path}: line {ln}: non-contiguous step {step}, "
                             f"expected {expected}")
        row = np.asarray(vals)
        if not np.isfinite(row).all():
            raise ValueError(f"{path}: line {ln}: non-finite value")
        tape.steps.append(step)
        tape.t.append(vals[0])
        tape.q.append(row[1:9].copy())
        tape.dq.append(row[9:17].copy())
        tape.tau.append(row[17:25].copy())
    return tape


def _parse_header(line: str, path) -> TapeMeta:
    rest = line[len(MAGIC):]
    dt = None
    factor = 1
    source = ""
    for part in rest.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"{path}: line 1: malformed header field {part!r}")
        key, _, val = part.partition("=")
        key = key.strip()
        if key == "dt":
            dt = float(val)
        elif key == "factor":
            factor = int(val)
        elif key == "source":
            source = val
        else:
            raise ValueError(f"{path}: line 1: unknown header field {key!r}")
    if dt is None:
        raise ValueError(f"{path}: line 1: header missing dt")
    return TapeMeta(dt=dt, speed_factor=factor, source=source)
