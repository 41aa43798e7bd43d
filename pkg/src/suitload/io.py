"""Delimited-text formats for recordings, measured loads and pipeline outputs.

Recording CSV
-------------
One header row, one row per sample.  Columns in order:

``time_s``
    Sample time in seconds, strictly increasing.
``r00 r01 r02 r10 ... r22`` or ``qw qx qy qz``
    Base-to-world orientation, either a row-major rotation matrix or a unit
    quaternion (scalar first).  The header names select the layout.
``ax ay az``
    Accelerometer specific force in the base frame, m/s^2.
12 joint angles in degrees
    ``left_hip_flexion_deg`` ... ``right_ankle_inversion_deg``: the left leg's
    six angles in the order of :data:`suitload.kinematics.JOINT_NAMES`, then
    the right leg's.
``left_stance right_stance``
    Optional 0/1 contact flags.

Measured loads CSV
------------------
``time_s, left_N, right_N`` (left and right shoulder resultants, N).  Further
``<region>_N`` columns are accepted for other regions.
"""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .analysis import LoadSeries
from .kinematics import JOINT_NAMES, SIDES, TrialRecording

MATRIX_COLUMNS = tuple(f"r{i}{j}" for i in range(3) for j in range(3))
QUAT_COLUMNS = ("qw", "qx", "qy", "qz")
ACCEL_COLUMNS = ("ax", "ay", "az")
JOINT_COLUMNS = tuple(f"{side}_{name}_deg" for side in SIDES for name in JOINT_NAMES)
STANCE_COLUMNS = ("left_stance", "right_stance")
MEASURED_ALIASES = {"left_N": "left_shoulder", "right_N": "right_shoulder"}
QUAT_NORM_TOL = 1e-3


class FormatError(ValueError):
    """A file does not follow its documented layout."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def _fmt(x):
    return repr(float(x))


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


FILE_MODE = 0o666 & ~_umask()


def atomic_write_text(path, text):
    """Write ``text`` so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, FILE_MODE)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def _read_table(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise FormatError(path, "needs a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise FormatError(path, f"non-numeric value ({exc})") from None
    if data.shape[1] != len(header):
        raise FormatError(path, f"rows have {data.shape[1]} values but the header has {len(header)}")
    return header, data


def _columns(path, header, data, names):
    missing = [n for n in names if n not in header]
    if missing:
        raise FormatError(path, f"missing columns {missing}")
    return data[:, [header.index(n) for n in names]]


def read_recording(path):
    """Parse a recording CSV into a :class:`TrialRecording` (angles in radians)."""
    header, data = _read_table(path)
    if header[0] != "time_s":
        raise FormatError(path, "first column must be time_s")
    time = data[:, 0]
    if all(c in header for c in MATRIX_COLUMNS):
        R = _columns(path, header, data, MATRIX_COLUMNS).reshape(-1, 3, 3)
    elif all(c in header for c in QUAT_COLUMNS):
        q = _columns(path, header, data, QUAT_COLUMNS)
        norms = np.linalg.norm(q, axis=1)
        if np.any(np.abs(norms - 1.0) > QUAT_NORM_TOL):
            raise FormatError(path, "quaternions must have unit norm")
        R = Rotation.from_quat(q[:, [1, 2, 3, 0]] / norms[:, None]).as_matrix()
    else:
        raise FormatError(path, "needs orientation columns r00..r22 or qw, qx, qy, qz")
    accel = _columns(path, header, data, ACCEL_COLUMNS)
    joints = np.radians(_columns(path, header, data, JOINT_COLUMNS))
    contact = None
    if all(c in header for c in STANCE_COLUMNS):
        flags = _columns(path, header, data, STANCE_COLUMNS)
        if not np.all(np.isin(flags, (0.0, 1.0))):
            raise FormatError(path, "stance flags must be 0 or 1")
        contact = flags.astype(bool)
    try:
        return TrialRecording(time, R, accel, joints, contact)
    except ValueError as exc:
        raise FormatError(path, str(exc)) from None


def recording_csv(recording, orientation="matrix"):
    """Serialize a recording; the inverse of :func:`read_recording`."""
    if orientation == "matrix":
        ori_cols = MATRIX_COLUMNS
        ori = recording.orientation.reshape(-1, 9)
    elif orientation == "quaternion":
        ori_cols = QUAT_COLUMNS
        ori = Rotation.from_matrix(recording.orientation).as_quat()[:, [3, 0, 1, 2]]
    else:
        raise ValueError("orientation must be 'matrix' or 'quaternion'")
    header = ["time_s", *ori_cols, *ACCEL_COLUMNS, *JOINT_COLUMNS]
    cols = [recording.time[:, None], ori, recording.accel, np.degrees(recording.joints)]
    if recording.contact is not None:
        header += STANCE_COLUMNS
        cols.append(recording.contact.astype(float))
    table = np.hstack(cols)
    n_flag = 2 if recording.contact is not None else 0
    rows = []
    for row in table:
        vals = [_fmt(v) for v in row[:len(row) - n_flag]]
        vals += [str(int(v)) for v in row[len(row) - n_flag:]]
        rows.append(vals)
    return _csv_text(header, rows)


def write_recording(recording, path, orientation="matrix"):
    atomic_write_text(path, recording_csv(recording, orientation))


def read_measured(path):
    """Measured resultant loads as ``{region id: LoadSeries}``."""
    header, data = _read_table(path)
    if header[0] != "time_s":
        raise FormatError(path, "first column must be time_s")
    out = {}
    for k, name in enumerate(header[1:], start=1):
        if not name.endswith("_N"):
            raise FormatError(path, f"load column {name!r} must end in _N")
        region = MEASURED_ALIASES.get(name, name[:-2])
        try:
            out[region] = LoadSeries(region, "measured", data[:, 0], data[:, k])
        except ValueError as exc:
            raise FormatError(path, str(exc)) from None
    if not out:
        raise FormatError(path, "no load columns")
    return out


def read_loads(path, source="simulated"):
    """Read a loads CSV written by :func:`loads_csv` (``<region>_N`` columns)."""
    header, data = _read_table(path)
    if header[0] != "time_s":
        raise FormatError(path, "first column must be time_s")
    out = {}
    for k, name in enumerate(header):
        if name.endswith("_N") and name not in ("vertical_total_N", "max_residual_N"):
            region = MEASURED_ALIASES.get(name, name[:-2])
            out[region] = LoadSeries(region, source, data[:, 0], data[:, k])
    if not out:
        raise FormatError(path, "no load columns")
    return out


def measured_csv(series):
    """Serialize ``{region: LoadSeries}`` sharing one time base."""
    regions = sorted(series)
    time = series[regions[0]].time
    for r in regions:
        if not np.array_equal(series[r].time, time):
            raise ValueError("measured series must share one time base")
    names = {v: k for k, v in MEASURED_ALIASES.items()}
    header = ["time_s"] + [names.get(r, f"{r}_N") for r in regions]
    rows = ([_fmt(t)] + [_fmt(series[r].values[i]) for r in regions] for i, t in enumerate(time))
    return _csv_text(header, rows)


def states_csv(time, states):
    """Estimated base and foot trajectory, one row per sample."""
    X = np.asarray(states, float)
    header = ["time_s"]
    for part in ("base", "base_vel", "left_foot", "right_foot"):
        header += [f"{part}_{a}" for a in "xyz"]
    rows = ([_fmt(t)] + [_fmt(v) for v in x] for t, x in zip(time, X))
    return _csv_text(header, rows)


def loads_csv(result):
    """Simulated region resultants and per-sample diagnostics of a :class:`TrialLoads`."""
    regions = sorted(result.loads)
    header = (["time_s"] + [f"{r}_N" for r in regions] + [f"{r}_tangential_ratio" for r in regions]
              + ["vertical_total_N", "max_residual_N"])
    rows = []
    for i, t in enumerate(result.time):
        row = [_fmt(t)]
        row += [_fmt(result.loads[r].values[i]) for r in regions]
        row += [_fmt(result.tangential[r][i]) for r in regions]
        row += [_fmt(result.vertical_total[i]), _fmt(result.max_residual[i])]
        rows.append(row)
    return _csv_text(header, rows)


def points_csv(result):
    """Per-point contact force dump: sample, region, point index, force components (N)."""
    rows = []
    for region in sorted(result.point_forces):
        F = result.point_forces[region]
        for i in range(F.shape[0]):
            for k in range(F.shape[1]):
                rows.append([str(i), region, str(k), *(_fmt(v) for v in F[i, k])])
    rows.sort(key=lambda r: (int(r[0]), r[1], int(r[2])))
    return _csv_text(["sample", "region", "point", "fx_N", "fy_N", "fz_N"], rows)
