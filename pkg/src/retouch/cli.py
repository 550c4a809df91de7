"""Command-line pipeline: teach, speed up, copy, retouch, export.

Every command echoes its effective configuration (including the seed) before
running, so any result can be reproduced from the printed line alone. Exit
codes: 0 success, 1 runtime failure, 2 usage or configuration error.

The --scenario flag takes a scenario file path; the name ``default`` selects
the built-in tube-transfer scenario. Bare names are also looked up in
$RETOUCH_SCENARIO_DIR when set.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .engine import (EngineError, load_log_columns, run_copy, run_retouch,
                     run_teach, save_log_csv)
from .scenario import default_tube_transfer, load_intervention, load_scenario
from .session import TIMELINE_MAGIC, load_timeline, run_live_retouch
from .tape import load_tape, save_tape, speed_up

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
SCENARIO_DIR_ENV = "RETOUCH_SCENARIO_DIR"


def _resolve_scenario_path(name: str):
    """Resolve a --scenario value to a path, or None for the built-in."""
    if name == "default":
        return None
    path = Path(name)
    if path.exists():
        return path
    env_dir = os.environ.get(SCENARIO_DIR_ENV)
    if env_dir and not path.is_absolute():
        candidate = Path(env_dir) / name
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"scenario file not found: {name}")


def _load_scenario(args):
    path = _resolve_scenario_path(args.scenario)
    scn = default_tube_transfer() if path is None else load_scenario(path)
    if args.seed is not None:
        scn.seed = args.seed
    return scn


def _echo_config(args, scn, extra=""):
    fields = [f"command={args.command}", f"scenario={args.scenario}",
              f"seed={scn.seed}", f"dt={scn.dt}", f"duration={scn.duration}",
              f"alpha={scn.gains.alpha}", f"noise_quantize={scn.noise_quantize}"]
    if extra:
        fields.append(extra)
    print("config:", " ".join(fields))


def _default_log_path(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + ".log.csv")


def cmd_teach(args) -> int:
    scn = _load_scenario(args)
    _echo_config(args, scn, f"out={args.out}")
    tape, log = run_teach(scn)
    save_tape(tape, args.out)
    log_path = args.log or _default_log_path(args.out)
    save_log_csv(log, log_path)
    print(f"teach: {len(tape)} samples over {tape.duration:.3f} s "
          f"-> {args.out} (log: {log_path})")
    return EXIT_OK


def cmd_speedup(args) -> int:
    tape = load_tape(args.input)
    fast = speed_up(tape, args.factor)
    save_tape(fast, args.out)
    print(f"config: command=speedup input={args.input} factor={args.factor} "
          f"out={args.out}")
    print(f"speedup: {len(tape)} rows -> {len(fast)} rows, "
          f"{tape.duration:.3f} s -> {fast.duration:.3f} s")
    return EXIT_OK


def cmd_copy(args) -> int:
    scn = _load_scenario(args)
    tape = load_tape(args.tape)
    _echo_config(args, scn, f"tape={args.tape} trials={args.trials}")
    successes = 0
    for trial in range(1, args.trials + 1):
        log, report = run_copy(tape, scn)
        successes += report.success
        verdict = "success" if report.success else report.failure_reason
        print(f"trial {trial}: {verdict} "
              f"(depth {report.metrics['final_depth']:.4f} m, "
              f"lateral {report.metrics['max_lateral_force']:.2f} N)")
        if args.log:
            path = Path(f"{args.log}-{trial}.csv")
            save_log_csv(log, path)
    print(f"copy: {successes}/{args.trials} succeeded")
    return EXIT_OK


def _load_intervention_source(path):
    """Return run_retouch kwargs for a scripted profile or a timeline file."""
    with open(path) as f:
        head = f.readline()
    if head.startswith(TIMELINE_MAGIC):
        return {"timeline": load_timeline(path)}
    return {"intervention": load_intervention(path)}


def cmd_retouch(args) -> int:
    if bool(args.intervention) == bool(args.live):
        raise UsageError("give exactly one of --intervention FILE or --live")
    scn = _load_scenario(args)
    if args.alpha is not None:
        scn.gains.alpha = args.alpha
    tape = load_tape(args.tape)
    mode = "live" if args.live else f"intervention={args.intervention}"
    _echo_config(args, scn, f"tape={args.tape} out={args.out} {mode}")
    if args.live:
        out_tape, log, report, paths = run_live_retouch(
            tape, scn, args.out, port=args.port)
        if paths is None:
            print("retouch: session quit without saving")
            return EXIT_OK
        print(f"retouch: saved {len(out_tape)} samples -> {paths[0]} "
              f"(timeline: {paths[1]})")
    else:
        source = _load_intervention_source(args.intervention)
        out_tape, log, report = run_retouch(tape, scn, **source)
        save_tape(out_tape, args.out)
        print(f"retouch: saved {len(out_tape)} samples -> {args.out}")
    if args.log:
        save_log_csv(log, args.log)
        print(f"retouch: log -> {args.log}")
    verdict = "success" if report.success else report.failure_reason
    print(f"retouch: follower outcome {verdict} "
          f"(depth {report.metrics['final_depth']:.4f} m, "
          f"lateral {report.metrics['max_lateral_force']:.2f} N)")
    return EXIT_OK


def cmd_export(args) -> int:
    column = f"{args.robot}_{'q' if args.what == 'angle' else 'tauhat'}{args.joint}"
    print(f"config: command=export what={args.what} joint={args.joint} "
          f"robot={args.robot} out={args.out} logs={','.join(args.logs)}")
    traces = []
    t = None
    dt = None
    for path in args.logs:
        cols = load_log_columns(path)
        if column not in cols:
            raise EngineError(f"{path}: no column {column} "
                              f"(robot {args.robot!r} not in this log?)")
        if t is None:
            t, dt = cols["t"], cols["dt"]
        elif len(cols["t"]) != len(t) or cols["dt"] != dt:
            raise EngineError(f"{path}: log shape differs from {args.logs[0]}")
        traces.append(cols[column])
    mean = np.mean(traces, axis=0)
    with open(args.out, "w") as f:
        f.write(f"t,{args.what}{args.joint}\n")
        for ti, vi in zip(t, mean):
            f.write(f"{float(ti)!r},{float(vi)!r}\n")
    print(f"export: {len(t)} rows (mean of {len(traces)} run(s)) -> {args.out}")
    return EXIT_OK


class UsageError(Exception):
    pass


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retouch-sim",
        description="Bilateral teaching, motion copying, and retouch editing "
                    "of recorded motion, on a simulated two-arm bench.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        p.add_argument("--scenario", default="default",
                       help="scenario file, or 'default' for the built-in "
                            "tube transfer (searched in $RETOUCH_SCENARIO_DIR)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")

    p = sub.add_parser("teach", help="record a tape through bilateral teaching")
    add_scenario_args(p)
    p.add_argument("--out", required=True, help="output tape file")
    p.add_argument("--log", default=None,
                   help="output log file (default: <out>.log.csv)")
    p.set_defaults(func=cmd_teach)

    p = sub.add_parser("speedup", help="time-compress a tape")
    p.add_argument("--in", dest="input", required=True, help="input tape file")
    p.add_argument("--factor", type=_positive_int, required=True,
                   help="integer speed factor (keep every factor-th sample)")
    p.add_argument("--out", required=True, help="output tape file")
    p.set_defaults(func=cmd_speedup)

    p = sub.add_parser("copy", help="replay a tape and score the task")
    add_scenario_args(p)
    p.add_argument("--tape", required=True, help="input tape file")
    p.add_argument("--trials", type=_positive_int, default=1,
                   help="number of replay trials (default 1)")
    p.add_argument("--log", default=None,
                   help="log file prefix; writes <prefix>-<trial>.csv")
    p.set_defaults(func=cmd_copy)

    p = sub.add_parser("retouch", help="post-edit a tape with a third unit")
    add_scenario_args(p)
    p.add_argument("--tape", required=True, help="input tape file")
    p.add_argument("--out", required=True, help="output (retouched) tape file")
    p.add_argument("--intervention", default=None,
                   help="scripted intervention profile or recorded timeline file")
    p.add_argument("--live", action="store_true",
                   help="serve a live editing session instead")
    p.add_argument("--port", type=int, default=8765,
                   help="live session port (default 8765)")
    p.add_argument("--alpha", type=float, default=None,
                   help="override the editor/tape blend ratio in [0, 1]")
    p.add_argument("--log", default=None, help="also write the run log here")
    p.set_defaults(func=cmd_retouch)

    p = sub.add_parser("export", help="export plot data from run logs")
    p.add_argument("--what", choices=("angle", "torque"), required=True,
                   help="angle (response) or torque (load estimate)")
    p.add_argument("--joint", type=int, choices=range(1, 9), required=True,
                   metavar="1..8", help="joint number")
    p.add_argument("--robot", choices=("leader", "follower", "editor"),
                   default="follower", help="which unit (default follower)")
    p.add_argument("--out", required=True, help="output t,value file")
    p.add_argument("logs", nargs="+", help="one or more run log files; "
                   "multiple logs export the per-step mean")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
