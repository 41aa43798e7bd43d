"""Input validation helpers shared by the estimators and the plain functions."""

from __future__ import annotations

import numpy as np

ROTATION_TOL = 1e-6


def check_vector(v, size=3, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_rotation(R, tol=ROTATION_TOL, name="rotation"):
    """Return ``R`` as a float array after checking it is a proper rotation.

    Raises
    ------
    ValueError
        If ``R`` is not 3x3, not orthonormal within ``tol`` or has det -1.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError(f"{name} contains non-finite values")
    err = np.max(np.abs(R @ R.T - np.eye(3)))
    if err > tol or np.linalg.det(R) < 0:
        raise ValueError(f"{name} is not orthonormal (max |RR^T - I| = {err:.3g})")
    return R


def check_rotations(Rs, tol=ROTATION_TOL, name="rotations"):
    Rs = np.asarray(Rs, dtype=float)
    if Rs.ndim != 3 or Rs.shape[1:] != (3, 3):
        raise ValueError(f"{name} must have shape (n, 3, 3), got {Rs.shape}")
    err = np.abs(np.einsum("nij,nkj->nik", Rs, Rs) - np.eye(3)).max(axis=(1, 2))
    bad = np.flatnonzero(~(err <= tol) | (np.linalg.det(Rs) < 0))
    if bad.size:
        raise ValueError(f"{name}[{bad[0]}] is not orthonormal (err {err[bad[0]]:.3g})")
    return Rs


def check_pose(pose, tol=ROTATION_TOL):
    """Split a 4x4 homogeneous transform into ``(R, t)``."""
    T = np.asarray(pose, dtype=float)
    if T.shape != (4, 4):
        raise ValueError(f"pose must be 4x4, got {T.shape}")
    if not np.allclose(T[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError("pose bottom row must be [0, 0, 0, 1]")
    return check_rotation(T[:3, :3], tol, "pose rotation"), T[:3, 3].copy()


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def make_pose(R, t):
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = t
    return T
