"""Resultant loads, outlier rejection, trial statistics and simulated-vs-measured RMS."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

SOURCES = ("simulated", "measured")

# RMS errors (N) reported for the pilot subject, kept as reference rows.
REFERENCE_RMS = {
    ("flat_walk", "left_shoulder"): 19.56,
    ("flat_walk", "right_shoulder"): 25.96,
    ("stairs_up", "left_shoulder"): 19.32,
    ("stairs_up", "right_shoulder"): 8.22,
    ("stairs_down", "left_shoulder"): 8.22,
    ("stairs_down", "right_shoulder"): 10.16,
}


@dataclass(frozen=True)
class LoadSeries:
    region: str
    source: str
    time: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time, float)
        v = np.asarray(self.values, float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("time and values must be 1-D arrays of equal length")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("load series time must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("load series contains non-finite values")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TrialStats:
    mean: float
    min: float
    max: float
    sd: float
    retained_fraction: float

    @classmethod
    def of(cls, values, retained_fraction=1.0):
        v = np.asarray(values, float)
        return cls(float(v.mean()), float(v.min()), float(v.max()), float(v.std()),
                   float(retained_fraction))


def resultant_load(solution, region):
    """Sum of the normal force components over one region's points."""
    mask = solution.region_mask(region)
    if not mask.any():
        raise KeyError(f"solution has no points of region {region!r}")
    return float(np.einsum("ij,ij->", solution.forces[mask], solution.normals[mask]))


def outlier_band(values, mode="sigma", k=1.5):
    """Acceptance interval for ``values``.

    ``sigma``: mean +/- k population standard deviations.
    ``iqr``: [Q1 - k IQR, Q3 + k IQR].
    """
    v = np.asarray(values, float)
    if mode == "sigma":
        mu, sd = v.mean(), v.std()
        return mu - k * sd, mu + k * sd
    if mode == "iqr":
        q1, q3 = np.percentile(v, [25.0, 75.0])
        return q1 - k * (q3 - q1), q3 + k * (q3 - q1)
    raise ValueError(f"outlier mode must be 'sigma' or 'iqr', got {mode!r}")


def outlier_mask(values, mode="sigma", k=1.5):
    """Boolean mask of the samples inside the band.

    In ``sigma`` mode membership is decided in exact rational arithmetic as
    ``(x - mu)^2 <= k^2 sigma^2``, so rounding in the mean or an underflowing
    variance cannot misplace a sample; a constant series is kept whole.
    """
    v = np.asarray(values, float)
    if mode != "sigma":
        lo, hi = outlier_band(v, mode, k)
        return (v >= lo) & (v <= hi)
    x = [Fraction(float(a)) for a in v]
    mu = sum(x, Fraction(0)) / len(x)
    dev2 = [(a - mu) ** 2 for a in x]
    limit = Fraction(k) ** 2 * sum(dev2, Fraction(0)) / len(x)
    return np.array([d <= limit for d in dev2], bool)


def remove_outliers(series, mode="sigma", k=1.5):
    """Drop samples outside the band in a single pass.

    Returns
    -------
    (LoadSeries, TrialStats)
        The retained samples and statistics computed over them.
    """
    if len(series) < 3:
        raise ValueError(f"need at least 3 samples for outlier removal, got {len(series)}")
    keep = outlier_mask(series.values, mode, k)
    kept = LoadSeries(series.region, series.source, series.time[keep], series.values[keep])
    return kept, TrialStats.of(kept.values, keep.mean())


def _period(t):
    return float(np.median(np.diff(t))) if len(t) > 1 else np.inf


def common_grid(a, b):
    """Samples of both series on the coarser of the two time grids, over their overlap."""
    lo, hi = max(a.time[0], b.time[0]), min(a.time[-1], b.time[-1])
    coarse = a if _period(a.time) >= _period(b.time) else b
    grid = coarse.time[(coarse.time >= lo - 1e-12) & (coarse.time <= hi + 1e-12)]
    if hi < lo or len(grid) == 0:
        raise ValueError("series do not overlap in time")
    return grid, np.interp(grid, a.time, a.values), np.interp(grid, b.time, b.values)


def rms_error(sim, meas):
    """Root-mean-square difference after linear resampling onto the coarser grid."""
    _, x, y = common_grid(sim, meas)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def trial_report(trials, outlier_mode="sigma", k=1.5, failures=()):
    """Per-trial and per-motion statistics plus an RMS table.

    Parameters
    ----------
    trials : list of dict
        Each with ``name``, ``motion``, ``simulated`` and ``measured``
        (region id -> LoadSeries; ``measured`` may be empty).  An optional
        ``diagnostics`` dict is copied into the trial entry.
    failures : sequence of dict
        ``{"trial", "error"}`` records of trials that could not be processed;
        with failures present, ``trials`` may be empty.

    Returns
    -------
    dict
        JSON-serializable report.  ``rms`` rows carry the motion, region,
        mean RMS over trials and the reference value where one exists.
    """
    if not trials and not failures:
        raise ValueError("need at least one trial")
    per_trial = []
    pooled = {}
    rms_rows = {}
    for trial in trials:
        sim, meas = trial["simulated"], trial.get("measured") or {}
        if meas and set(sim) != set(meas):
            raise ValueError(f"trial {trial['name']!r}: simulated regions {sorted(sim)} "
                             f"do not match measured regions {sorted(meas)}")
        entry = {"name": trial["name"], "motion": trial["motion"], "regions": {}}
        if "diagnostics" in trial:
            entry["diagnostics"] = trial["diagnostics"]
        for rid in sorted(sim):
            region = {"simulated": asdict(TrialStats.of(sim[rid].values))}
            pooled.setdefault((trial["motion"], rid, "simulated"), []).append(sim[rid].values)
            if rid in meas:
                cleaned, stats = remove_outliers(meas[rid], outlier_mode, k)
                region["measured_raw"] = asdict(TrialStats.of(meas[rid].values))
                region["measured"] = asdict(stats)
                region["rms"] = rms_error(sim[rid], meas[rid])
                region["rms_cleaned"] = rms_error(sim[rid], cleaned)
                pooled.setdefault((trial["motion"], rid, "measured"), []).append(cleaned.values)
                rms_rows.setdefault((trial["motion"], rid), []).append(region["rms"])
            entry["regions"][rid] = region
        per_trial.append(entry)
    aggregate = [
        {"motion": m, "region": r, "source": s, **asdict(TrialStats.of(np.concatenate(v)))}
        for (m, r, s), v in sorted(pooled.items())
    ]
    rms = [
        {"motion": m, "region": r, "rms": float(np.mean(v)), "trials": len(v),
         "reference": REFERENCE_RMS.get((m, r))}
        for (m, r), v in sorted(rms_rows.items())
    ]
    reference = [{"motion": m, "region": r, "rms": v} for (m, r), v in REFERENCE_RMS.items()]
    return {
        "outlier_mode": outlier_mode,
        "outlier_k": k,
        "trials": per_trial,
        "aggregate": aggregate,
        "rms": rms,
        "reference_rms": reference,
        "failures": list(failures),
    }


def format_report(report):
    """Plain-text rendering of :func:`trial_report` output."""
    out = io.StringIO()
    out.write(f"Outlier rule: {report['outlier_mode']} (k = {report['outlier_k']})\n\n")
    out.write(f"{'trial':<20}{'region':<18}{'source':<11}{'mean':>9}{'min':>9}{'max':>9}"
              f"{'sd':>8}{'kept':>7}\n")
    for t in report["trials"]:
        for rid, reg in t["regions"].items():
            for src in ("simulated", "measured"):
                if src in reg:
                    s = reg[src]
                    out.write(f"{t['name']:<20}{rid:<18}{src:<11}{s['mean']:9.2f}{s['min']:9.2f}"
                              f"{s['max']:9.2f}{s['sd']:8.2f}{s['retained_fraction']:7.2f}\n")
    diag = [t for t in report["trials"] if t.get("diagnostics")]
    if diag:
        out.write("\nTotal vertical interface load (N) and worst equality residual\n")
        out.write(f"{'trial':<20}{'mean':>10}{'min':>10}{'max':>10}{'residual':>12}\n")
        for t in diag:
            v = t["diagnostics"]["vertical_total_N"]
            out.write(f"{t['name']:<20}{v['mean']:10.2f}{v['min']:10.2f}{v['max']:10.2f}"
                      f"{t['diagnostics']['max_residual_N']:12.2e}\n")
    out.write("\nRMS error (N)\n")
    out.write(f"{'motion':<14}{'region':<18}{'rms':>9}{'trials':>8}{'reference':>11}\n")
    for row in report["rms"]:
        ref = "" if row["reference"] is None else f"{row['reference']:.2f}"
        out.write(f"{row['motion']:<14}{row['region']:<18}{row['rms']:9.2f}{row['trials']:8d}"
                  f"{ref:>11}\n")
    out.write("\nReference RMS (N)\n")
    for row in report["reference_rms"]:
        out.write(f"{row['motion']:<14}{row['region']:<18}{row['rms']:9.2f}\n")
    if report.get("failures"):
        out.write("\nFailed trials\n")
        for f in report["failures"]:
            out.write(f"{f['trial']}: {f['error']}\n")
    return out.getvalue()


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def comparison_csv(sim, meas):
    """Plot-ready per-sample CSV of two series on their common grid."""
    grid, x, y = common_grid(sim, meas)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "simulated_N", "measured_N", "difference_N"])
    for row in zip(grid, x, y, x - y):
        w.writerow([f"{v:.6f}" for v in row])
    return buf.getvalue()


class OutlierRemover(TransformerMixin, BaseEstimator):
    """Band-based outlier filter for 1-D load samples.

    ``fit`` learns the band, ``transform`` keeps only samples inside it.
    """

    def __init__(self, mode="sigma", k=1.5):
        self.mode = mode
        self.k = k

    def fit(self, X, y=None):
        X = self._check(X)
        if len(X) < 3:
            raise ValueError("need at least 3 samples")
        self.lower_, self.upper_ = outlier_band(X, self.mode, self.k)
        return self

    def _check(self, X):
        X = np.asarray(X, float).ravel()
        if not np.all(np.isfinite(X)):
            raise ValueError("input contains non-finite values")
        return X

    def mask(self, X):
        X = self._check(X)
        return (X >= self.lower_) & (X <= self.upper_)

    def transform(self, X):
        if not hasattr(self, "lower_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("OutlierRemover is not fitted yet")
        X = self._check(X)
        return X[self.mask(X)]
