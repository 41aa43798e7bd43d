"""Leg forward kinematics and pose differentiation.

Joint conventions (radians, per leg, left leg first in the 12-vector)::

    hip_flexion, hip_abduction, hip_rotation, knee_flexion, ankle_flexion, ankle_inversion

The hip is an intrinsic flexion -> abduction -> rotation sequence about the
lateral (y), forward (x) and longitudinal (z) axes.  Positive hip flexion
swings the thigh forward, positive knee flexion folds the shank backward,
positive ankle flexion lifts the toes.  Abduction, rotation and inversion
change sign between legs so that equal angle values mirror across the
sagittal plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt
from scipy.spatial.transform import Rotation

from .validation import check_positive, check_rotations

JOINT_NAMES = (
    "hip_flexion",
    "hip_abduction",
    "hip_rotation",
    "knee_flexion",
    "ankle_flexion",
    "ankle_inversion",
)
SIDES = ("left", "right")


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


@dataclass(frozen=True)
class JointAngles:
    """Twelve leg joint angles in radians."""

    values: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.values, dtype=float)
        if q.shape != (12,):
            raise ValueError(f"joint angles must have 12 entries, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("joint angles must be finite")
        for k in (3, 9):
            if not 0.0 <= q[k] <= np.pi:
                raise ValueError(f"knee angle {q[k]:.4g} rad outside [0, pi]")
        object.__setattr__(self, "values", q)

    @classmethod
    def from_degrees(cls, values):
        return cls(np.radians(np.asarray(values, dtype=float)))

    def leg(self, side):
        return self.values[:6] if side == "left" else self.values[6:]


def _as_q(q):
    if isinstance(q, JointAngles):
        return q.values
    q = np.asarray(q, dtype=float)
    if q.shape != (12,):
        raise ValueError(f"joint angles must have 12 entries, got shape {q.shape}")
    return q


def _side_sign(side):
    if side not in SIDES:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return 1.0 if side == "left" else -1.0


def leg_chain(q, side, anthro):
    """Frames of one leg in the base frame.

    Returns a dict with the rotations ``R_thigh``, ``R_shank``, ``R_foot`` and
    the points ``hip``, ``knee``, ``ankle``, ``sole``.
    """
    s = _side_sign(side)
    qv = _as_q(q)
    f, a, r, k, af, ai = qv[:6] if side == "left" else qv[6:]
    hip = anthro.hip(side)
    R_thigh = rot_y(-f) @ rot_x(s * a) @ rot_z(s * r)
    R_shank = R_thigh @ rot_y(k)
    R_foot = R_shank @ rot_y(-af) @ rot_x(s * ai)
    knee = hip + R_thigh @ [0.0, 0.0, -anthro.thigh_length]
    ankle = knee + R_shank @ [0.0, 0.0, -anthro.shank_length]
    offset = np.asarray(anthro.ankle_to_sole, float) * [1.0, s, 1.0]
    sole = ankle + R_foot @ offset
    return {
        "R_thigh": R_thigh,
        "R_shank": R_shank,
        "R_foot": R_foot,
        "hip": hip,
        "knee": knee,
        "ankle": ankle,
        "sole": sole,
    }


def foot_fk(q, side, anthro):
    """Foot-sole position of one leg in the base frame."""
    return leg_chain(q, side, anthro)["sole"]


def fk_jacobian(q, side, anthro):
    """Analytic 3x12 Jacobian of :func:`foot_fk` with respect to all joints.

    Each column is ``axis x (sole - joint_centre)`` for the joint's current
    axis; columns of the other leg are zero.
    """
    s = _side_sign(side)
    c = leg_chain(q, side, anthro)
    qv = _as_q(q)
    f, a = (qv[0], qv[1]) if side == "left" else (qv[6], qv[7])
    af = qv[4] if side == "left" else qv[10]
    ex, ey, ez = np.eye(3)
    R_f = rot_y(-f)
    R_fa = R_f @ rot_x(s * a)
    axes = [
        (-ey, c["hip"]),
        (s * (R_f @ ex), c["hip"]),
        (s * (R_fa @ ez), c["hip"]),
        (c["R_thigh"] @ ey, c["knee"]),
        (-(c["R_shank"] @ ey), c["ankle"]),
        (s * (c["R_shank"] @ rot_y(-af) @ ex), c["ankle"]),
    ]
    J = np.zeros((3, 12))
    col0 = 0 if side == "left" else 6
    for j, (axis, centre) in enumerate(axes):
        J[:, col0 + j] = np.cross(axis, c["sole"] - centre)
    return J


def body_poses(joints, orientations, positions, anthro):
    """World poses of the wearer's body frames over a trial.

    ``trunk`` and ``pelvis`` coincide with the base frame.  Thigh frames sit at
    the hip joint, shank frames at the knee.

    Returns
    -------
    dict
        frame name -> ``(R, origin)`` with shapes ``(n, 3, 3)`` and ``(n, 3)``.
    """
    joints = np.asarray(joints, float)
    Rb = np.asarray(orientations, float)
    pb = np.asarray(positions, float)
    n = len(joints)
    out = {"trunk": (Rb.copy(), pb.copy()), "pelvis": (Rb.copy(), pb.copy())}
    for side in SIDES:
        Rt, ot = np.empty((n, 3, 3)), np.empty((n, 3))
        Rs, os_ = np.empty((n, 3, 3)), np.empty((n, 3))
        for i in range(n):
            c = leg_chain(joints[i], side, anthro)
            Rt[i] = Rb[i] @ c["R_thigh"]
            ot[i] = pb[i] + Rb[i] @ c["hip"]
            Rs[i] = Rb[i] @ c["R_shank"]
            os_[i] = pb[i] + Rb[i] @ c["knee"]
        out[f"{side}_thigh"] = (Rt, ot)
        out[f"{side}_shank"] = (Rs, os_)
    return out


@dataclass(frozen=True)
class TrialRecording:
    """Sensor streams of one trial.

    Attributes
    ----------
    time : (n,) seconds, strictly increasing
    orientation : (n, 3, 3) base-to-world rotations
    accel : (n, 3) accelerometer specific force in the base frame, m/s^2
    joints : (n, 12) joint angles, radians
    contact : (n, 2) bool (left, right stance) or None when unknown
    """

    time: np.ndarray
    orientation: np.ndarray
    accel: np.ndarray
    joints: np.ndarray
    contact: np.ndarray = None

    def __post_init__(self):
        t = np.asarray(self.time, float)
        n = len(t)
        if n == 0:
            raise ValueError("recording is empty")
        if n > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("recording time must be strictly increasing")
        R = check_rotations(self.orientation, name="orientation")
        acc = np.asarray(self.accel, float)
        q = np.asarray(self.joints, float)
        if R.shape[0] != n or acc.shape != (n, 3) or q.shape != (n, 12):
            raise ValueError("recording streams have inconsistent lengths")
        if not (np.all(np.isfinite(acc)) and np.all(np.isfinite(q))):
            raise ValueError("recording contains non-finite samples")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "orientation", R)
        object.__setattr__(self, "accel", acc)
        object.__setattr__(self, "joints", q)
        if self.contact is not None:
            c = np.asarray(self.contact, bool)
            if c.shape != (n, 2):
                raise ValueError(f"contact flags must have shape ({n}, 2)")
            object.__setattr__(self, "contact", c)

    def __len__(self):
        return len(self.time)

    @property
    def sample_period(self):
        if len(self.time) < 2:
            return 1.0 / 128.0
        return float(np.median(np.diff(self.time)))


@dataclass(frozen=True)
class SegmentKinematics:
    """Per-segment motion over a trial, all in the world frame.

    ``segments`` maps segment id to a dict of arrays: ``R`` (n, 3, 3), ``com``,
    ``com_accel``, ``omega``, ``alpha`` (each (n, 3)).  ``bodies`` holds the
    body-frame poses used to place belt anchors.
    """

    time: np.ndarray
    segments: dict
    bodies: dict

    def __len__(self):
        return len(self.time)

    def sample(self, segment_id, i):
        s = self.segments[segment_id]
        return {k: v[i] for k, v in s.items()}


def smooth(x, dt, cutoff):
    """Zero-phase second-order Butterworth low-pass along axis 0.

    The straight line through the end samples is removed before filtering and
    restored afterwards, so constant and linear signals pass unchanged.
    """
    x = np.asarray(x, float)
    n = len(x)
    nyquist = 0.5 / dt
    if cutoff is None or cutoff >= nyquist or n < 3:
        return x.copy()
    ramp = np.linspace(0.0, 1.0, n).reshape((n,) + (1,) * (x.ndim - 1))
    trend = x[0] + ramp * (x[-1] - x[0])
    b, a = butter(2, cutoff / nyquist)
    padlen = min(3 * max(len(a), len(b)) * 10, n - 1)
    return trend + filtfilt(b, a, x - trend, axis=0, padlen=padlen)


def second_difference(x, dt):
    """Central second derivative with second-order one-sided end stencils."""
    x = np.asarray(x, float)
    out = np.empty_like(x)
    out[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) / dt**2
    out[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / dt**2
    out[-1] = (2.0 * x[-1] - 5.0 * x[-2] + 4.0 * x[-3] - x[-4]) / dt**2
    return out


def angular_velocity(Rs, dt):
    """World-frame angular velocity from a rotation sequence by central log differences."""
    Rs = np.asarray(Rs, float)
    w = np.empty((len(Rs), 3))
    rel = np.einsum("nij,nkj->nik", Rs[2:], Rs[:-2])
    w[1:-1] = Rotation.from_matrix(rel).as_rotvec() / (2.0 * dt)
    w[0] = Rotation.from_matrix(Rs[1] @ Rs[0].T).as_rotvec() / dt
    w[-1] = Rotation.from_matrix(Rs[-1] @ Rs[-2].T).as_rotvec() / dt
    return w


def differentiate_poses(recording, suit, states, anthro, cutoff=6.0):
    """Velocities and accelerations of every suit segment over a trial.

    Suit segments are slaved to the body frame they are attached to.  Base
    positions come from the filter ``states`` (an ``(n, 12)`` array or a list
    of :class:`~suitload.estimator.FilterState`); orientation and joint
    angles come from the recording.

    Raises
    ------
    ValueError
        If fewer than five samples are given.
    """
    n = len(recording)
    if n < 5:
        raise ValueError(f"need at least 5 samples to differentiate, got {n}")
    if not isinstance(states, np.ndarray):
        states = np.array([s.x for s in states])
    positions = np.asarray(states, float)[:, :3]
    if len(positions) != n:
        raise ValueError("state series and recording have different lengths")
    dt = recording.sample_period
    check_positive(dt, "sample period")
    bodies = body_poses(recording.joints, recording.orientation, positions, anthro)
    segments = {}
    for sid, seg in suit.segments.items():
        R, origin = bodies[seg.body_frame]
        com = origin + R @ seg.com_offset
        com_s = smooth(com, dt, cutoff)
        omega = smooth(angular_velocity(R, dt), dt, cutoff)
        segments[sid] = {
            "R": R,
            "com": com,
            "com_accel": second_difference(com_s, dt),
            "omega": omega,
            "alpha": np.gradient(omega, dt, axis=0, edge_order=2),
        }
    return SegmentKinematics(recording.time.copy(), segments, bodies)


def differentiate_series(x, dt, cutoff=6.0):
    """Smoothed first and second derivatives of a sampled signal (axis 0)."""
    x = np.asarray(x, float)
    if len(x) < 5:
        raise ValueError(f"need at least 5 samples to differentiate, got {len(x)}")
    xs = smooth(x, dt, cutoff)
    return np.gradient(xs, dt, axis=0, edge_order=2), second_difference(xs, dt)
