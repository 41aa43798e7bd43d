"""Command-line entry point: ``suitload {run,synth,compare,suit}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .analysis import comparison_csv, format_report, report_json, trial_report
from .model import Anthropometry, build_default_suit, save_suit
from .pipeline import (OUTLIER_MODES, ConfigError, PipelineConfig, TrialSpec, config_text,
                       load_config, run_pipeline)
from .synth import KINDS, generate_synthetic_trial

log = logging.getLogger("suitload")


def _truth_csv(truth):
    header = ["time_s"]
    header += [f"base_{a}" for a in "xyz"] + [f"base_vel_{a}" for a in "xyz"]
    header += [f"{s}_foot_{a}" for s in ("left", "right") for a in "xyz"]
    header += ["left_stance", "right_stance"]
    rows = []
    for i, t in enumerate(truth.time):
        vals = [t, *truth.position[i], *truth.velocity[i], *truth.feet[i, 0], *truth.feet[i, 1]]
        rows.append([repr(float(v)) for v in vals] + [str(int(f)) for f in truth.stance[i]])
    return ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.outlier_mode:
            overrides["outlier_mode"] = args.outlier_mode
        if args.dump_points:
            overrides["dump_points"] = True
        if args.workers:
            overrides["workers"] = args.workers
        if overrides:
            cfg = replace(cfg, **overrides)
        status, report = run_pipeline(cfg)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(format_report(report), end="")
    for f in report["failures"]:
        print(f"error: trial {f['trial']}: {f['error']}", file=sys.stderr)
    print(f"wrote {Path(cfg.output_dir) / 'report.json'}", file=sys.stderr)
    return status


def cmd_synth(args):
    rec, truth = generate_synthetic_trial(args.kind, args.duration, args.seed,
                                          accel_noise_sd=args.accel_noise,
                                          joint_noise_deg=args.joint_noise)
    out = Path(args.out)
    io.write_recording(rec, out / "recording.csv", args.orientation)
    io.atomic_write_text(out / "truth.csv", _truth_csv(truth))
    cfg = PipelineConfig(
        output_dir=out / "results",
        trials=(TrialSpec(args.kind, out / "recording.csv", motion=args.kind),),
    )
    io.atomic_write_text(out / "config.ini", config_text(cfg, base=out))
    print(f"wrote {out / 'recording.csv'} ({len(rec)} samples), truth.csv and config.ini")
    return 0


def cmd_compare(args):
    try:
        sim = io.read_loads(args.sim)
        meas = io.read_measured(args.meas)
        regions = sorted(set(sim) & set(meas))
        if not regions:
            raise ValueError(f"no common regions between {args.sim} and {args.meas}")
        sim = {r: sim[r] for r in regions}
        meas = {r: meas[r] for r in regions}
        report = trial_report([{"name": Path(args.sim).stem, "motion": args.motion,
                                "simulated": sim, "measured": meas}],
                              args.outlier_mode or "sigma")
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(format_report(report), end="")
    if args.out:
        out = Path(args.out)
        io.atomic_write_text(out / "report.json", report_json(report))
        for r in regions:
            io.atomic_write_text(out / f"comparison_{r}.csv", comparison_csv(sim[r], meas[r]))
    return 0


def cmd_suit(args):
    anthro = Anthropometry() if args.height is None else Anthropometry.from_height(args.height,
                                                                                   args.mass)
    suit = build_default_suit(anthro)
    save_suit(suit, args.out)
    print(f"wrote {args.out}: {len(suit.segments)} segments, total weight "
          f"{suit.total_weight:.2f} N")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="suitload",
                                description="Interface loads between a protective suit and its wearer.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the pipeline over the trials of a config file")
    r.add_argument("--config", required=True, help="pipeline INI file")
    r.add_argument("--outlier-mode", choices=OUTLIER_MODES, help="override the config")
    r.add_argument("--dump-points", action="store_true", help="write per-point forces")
    r.add_argument("--workers", type=int, help="trials processed concurrently")
    r.add_argument("--quiet", action="store_true", help="do not print the report")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("synth", help="write a synthetic trial and a config to run it")
    s.add_argument("--kind", choices=KINDS, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration", type=float, help="seconds (default depends on the kind)")
    s.add_argument("--accel-noise", type=float, default=0.0, help="accelerometer noise SD, m/s^2")
    s.add_argument("--joint-noise", type=float, default=0.0, help="joint angle noise SD, degrees")
    s.add_argument("--orientation", choices=("matrix", "quaternion"), default="matrix")
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("compare", help="RMS comparison of simulated and measured loads")
    c.add_argument("--sim", required=True, help="loads.csv written by run")
    c.add_argument("--meas", required=True, help="measured loads CSV (time_s, left_N, right_N)")
    c.add_argument("--outlier-mode", choices=OUTLIER_MODES)
    c.add_argument("--motion", default="unspecified", help="motion label for the RMS table")
    c.add_argument("--out", help="directory for report.json and comparison CSVs")
    c.set_defaults(func=cmd_compare)

    m = sub.add_parser("suit", help="write the default suit model config")
    m.add_argument("--out", required=True)
    m.add_argument("--height", type=float, help="subject height, m (scales the body)")
    m.add_argument("--mass", type=float, default=60.0, help="subject mass, kg")
    m.set_defaults(func=cmd_suit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
