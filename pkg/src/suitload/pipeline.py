"""Batch pipeline: recordings -> state estimate -> interface loads -> report.

Pipeline config (INI, paths relative to the config file)::

    [pipeline]
    output_dir = out                   ; created if missing
    suit = suit.ini                    ; optional; default suit model when omitted
    regions = left_shoulder, right_shoulder
    outlier_mode = sigma               ; sigma | iqr
    outlier_k = 1.5
    workers = 1                        ; trials processed concurrently
    dump_points = false                ; per-point force dump per trial
    cutoff_hz = 6.0                    ; low-pass cutoff before differencing
    belt_weight = 1.0                  ; belt tension cost relative to contact forces

    [anthropometry]                    ; optional, metres and kg
    thigh_length_m = 0.414
    shank_length_m = 0.416
    left_hip_m = 0 0.085 -0.07
    ...

    [noise]                            ; optional
    accel_sd = 0.2                     ; m/s^2
    support_foot_sd = 1e-5             ; m
    swing_foot_sd = 1e8                ; m
    joint_angle_sd_deg = 10
    gravity = 0 0 -9.81                ; m/s^2, world frame

    [trial.<name>]
    recording = walk01.csv
    measured = walk01_pedar.csv        ; optional
    motion = flat_walk                 ; groups trials in the report

Outputs under ``output_dir``: ``<trial>/states.csv``, ``<trial>/loads.csv``,
optional ``<trial>/points.csv`` and ``<trial>/comparison_<region>.csv``, plus
``report.json`` and ``report.txt`` for the batch.
"""

from __future__ import annotations

import configparser
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from io import StringIO
from pathlib import Path

import numpy as np

from . import io
from .analysis import TrialStats, comparison_csv, format_report, report_json, trial_report
from .dynamics import DEFAULT_REGIONS, inverse_dynamics_trial
from .estimator import NoiseConfig, run_filter, states_to_array
from .kinematics import differentiate_poses
from .model import Anthropometry, build_default_suit, load_suit

log = logging.getLogger(__name__)

OUTLIER_MODES = ("sigma", "iqr")
_ANTHRO_KEYS = {
    "left_hip_m": "left_hip",
    "right_hip_m": "right_hip",
    "thigh_length_m": "thigh_length",
    "shank_length_m": "shank_length",
    "ankle_to_sole_m": "ankle_to_sole",
    "subject_height_m": "subject_height",
    "subject_mass_kg": "subject_mass",
    "shoulder_height_m": "shoulder_height",
    "shoulder_half_width_m": "shoulder_half_width",
}
_NOISE_KEYS = {
    "accel_sd": "accel_sd",
    "support_foot_sd": "support_foot_sd",
    "swing_foot_sd": "swing_foot_sd",
    "joint_angle_sd_deg": "joint_angle_sd",
    "gravity": "gravity",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrialSpec:
    name: str
    recording: Path
    measured: Path = None
    motion: str = "unspecified"


@dataclass(frozen=True)
class PipelineConfig:
    output_dir: Path
    trials: tuple
    suit_path: Path = None
    anthropometry: Anthropometry = field(default_factory=Anthropometry)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    regions: tuple = DEFAULT_REGIONS
    outlier_mode: str = "sigma"
    outlier_k: float = 1.5
    workers: int = 1
    dump_points: bool = False
    cutoff_hz: float = 6.0
    belt_weight: float = 1.0

    def __post_init__(self):
        if self.outlier_mode not in OUTLIER_MODES:
            raise ConfigError(f"outlier_mode must be one of {OUTLIER_MODES}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not self.trials:
            raise ConfigError("config lists no [trial.<name>] sections")
        names = [t.name for t in self.trials]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate trial names")

    def suit(self):
        if self.suit_path is None:
            return build_default_suit(self.anthropometry)
        return load_suit(self.suit_path)

    def validate(self):
        """Check that referenced files exist and regions exist in the suit model."""
        if self.suit_path is not None and not Path(self.suit_path).is_file():
            raise ConfigError(f"suit model file not found: {self.suit_path}")
        suit = self.suit()
        for rid in self.regions:
            try:
                suit.region(rid)
            except KeyError:
                raise ConfigError(f"region {rid!r} is not defined in the suit model") from None
        return suit


def _floats(text):
    vals = [float(v) for v in text.replace(",", " ").split()]
    return vals[0] if len(vals) == 1 else tuple(vals)


def _section_values(sec, keys, where):
    out = {}
    for key, value in sec.items():
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        try:
            out[keys[key]] = _floats(value)
        except ValueError:
            raise ConfigError(f"[{where}] {key}: expected numbers, got {value!r}") from None
    return out


def load_config(path):
    """Parse a pipeline config file into a :class:`PipelineConfig`."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";",))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent
    if not cp.has_section("pipeline"):
        raise ConfigError(f"{path}: missing [pipeline] section")
    p = cp["pipeline"]

    def rel(value):
        return (base / value).resolve() if value else None

    try:
        anthro = Anthropometry()
        if cp.has_section("anthropometry"):
            anthro = replace(anthro, **_section_values(cp["anthropometry"], _ANTHRO_KEYS,
                                                       "anthropometry"))
        noise = NoiseConfig()
        if cp.has_section("noise"):
            noise = replace(noise, **_section_values(cp["noise"], _NOISE_KEYS, "noise"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    trials = []
    for name in cp.sections():
        if name.startswith("trial."):
            sec = cp[name]
            if "recording" not in sec:
                raise ConfigError(f"[{name}] needs a recording path")
            trials.append(TrialSpec(name.split(".", 1)[1], rel(sec["recording"]),
                                    rel(sec.get("measured", "")), sec.get("motion", "unspecified")))
    regions = tuple(r.strip() for r in p.get("regions", ",".join(DEFAULT_REGIONS)).split(",")
                    if r.strip())
    try:
        return PipelineConfig(
            output_dir=rel(p.get("output_dir", "out")),
            trials=tuple(trials),
            suit_path=rel(p.get("suit", "")),
            anthropometry=anthro,
            noise=noise,
            regions=regions,
            outlier_mode=p.get("outlier_mode", "sigma"),
            outlier_k=p.getfloat("outlier_k", 1.5),
            workers=p.getint("workers", 1),
            dump_points=p.getboolean("dump_points", False),
            cutoff_hz=p.getfloat("cutoff_hz", 6.0),
            belt_weight=p.getfloat("belt_weight", 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_text(cfg, base=None):
    """INI text for ``cfg``; paths are written relative to ``base`` when given."""

    def show(p):
        if p is None:
            return ""
        p = Path(p)
        if base is not None:
            try:
                return str(p.relative_to(base))
            except ValueError:
                pass
        return str(p)

    cp = configparser.ConfigParser()
    cp["pipeline"] = {
        "output_dir": show(cfg.output_dir),
        "suit": show(cfg.suit_path),
        "regions": ", ".join(cfg.regions),
        "outlier_mode": cfg.outlier_mode,
        "outlier_k": repr(cfg.outlier_k),
        "workers": str(cfg.workers),
        "dump_points": str(cfg.dump_points).lower(),
        "cutoff_hz": repr(cfg.cutoff_hz),
        "belt_weight": repr(cfg.belt_weight),
    }
    def fmt(v):
        return " ".join(repr(float(x)) for x in np.atleast_1d(v))

    cp["anthropometry"] = {k: fmt(getattr(cfg.anthropometry, a)) for k, a in _ANTHRO_KEYS.items()}
    cp["noise"] = {k: fmt(getattr(cfg.noise, a)) for k, a in _NOISE_KEYS.items()}
    for t in cfg.trials:
        sec = {"recording": show(t.recording), "motion": t.motion}
        if t.measured is not None:
            sec["measured"] = show(t.measured)
        cp[f"trial.{t.name}"] = sec
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def process_trial(cfg, trial):
    """Run one trial end to end and write its per-trial artifacts.

    Returns a dict for :func:`~suitload.analysis.trial_report` plus
    diagnostics.  Exceptions propagate to the caller.
    """
    suit = cfg.suit()
    rec = io.read_recording(trial.recording)
    measured = io.read_measured(trial.measured) if trial.measured is not None else {}
    if measured:
        missing = [r for r in cfg.regions if r not in measured]
        if missing:
            raise ValueError(f"measured file {trial.measured} lacks regions {missing}")
        measured = {r: measured[r] for r in cfg.regions}
    states = states_to_array(run_filter(rec, cfg.anthropometry, cfg.noise))
    kin = differentiate_poses(rec, suit, states, cfg.anthropometry, cfg.cutoff_hz)
    result = inverse_dynamics_trial(suit, kin, cfg.regions, np.asarray(cfg.noise.gravity),
                                    cfg.belt_weight)
    out = Path(cfg.output_dir) / trial.name
    io.atomic_write_text(out / "states.csv", io.states_csv(rec.time, states))
    io.atomic_write_text(out / "loads.csv", io.loads_csv(result))
    if cfg.dump_points:
        io.atomic_write_text(out / "points.csv", io.points_csv(result))
    for rid, series in measured.items():
        io.atomic_write_text(out / f"comparison_{rid}.csv", comparison_csv(result.loads[rid], series))
    tang = {rid: _finite_stats(v) for rid, v in result.tangential.items()}
    return {
        "name": trial.name,
        "motion": trial.motion,
        "simulated": result.loads,
        "measured": measured,
        "diagnostics": {
            "samples": len(rec),
            "vertical_total_N": _finite_stats(result.vertical_total),
            "max_residual_N": float(result.max_residual.max()),
            "tangential_ratio": tang,
        },
    }


def _finite_stats(values):
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return None
    s = TrialStats.of(v)
    return {"mean": s.mean, "min": s.min, "max": s.max, "sd": s.sd}


def _run_one(args):
    cfg, trial = args
    try:
        return trial.name, process_trial(cfg, trial), None
    except Exception as exc:  # isolate per-trial failures
        return trial.name, None, f"{type(exc).__name__}: {exc}"


def run_pipeline(cfg):
    """Process every trial and write batch reports.

    Returns
    -------
    (int, dict)
        Exit status (0 when every trial succeeded, 1 otherwise) and the report.
    """
    cfg.validate()
    jobs = [(cfg, t) for t in cfg.trials]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]
    done = [res for _, res, err in outcomes if res is not None]
    failures = [{"trial": name, "error": err} for name, _, err in outcomes if err is not None]
    for f in failures:
        log.info("trial %s failed: %s", f["trial"], f["error"])
    report = trial_report(done, cfg.outlier_mode, cfg.outlier_k, failures=failures)
    out = Path(cfg.output_dir)
    io.atomic_write_text(out / "report.json", report_json(report))
    io.atomic_write_text(out / "report.txt", format_report(report))
    return (1 if failures else 0), report
