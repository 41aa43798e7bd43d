"""Independent reference computations used by the tests."""

from itertools import combinations

import numpy as np


def brute_force_min_norm(A, b, nonneg, tol=1e-9):
    """Minimum-norm sign-constrained solution by enumerating active sets.

    For every subset of sign-constrained components fixed at zero, the
    remaining components take the least-norm solution of ``A z = b``.  The
    optimum is the feasible candidate with the smallest norm.  Returns
    ``None`` when no candidate is feasible.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    idx = np.flatnonzero(nonneg)
    best = None
    scale = max(1.0, np.linalg.norm(b))
    for r in range(len(idx) + 1):
        for fixed in combinations(idx, r):
            free = np.ones(A.shape[1], bool)
            free[list(fixed)] = False
            z = np.zeros(A.shape[1])
            if free.any():
                z[free] = np.linalg.lstsq(A[:, free], b, rcond=None)[0]
            if np.linalg.norm(A @ z - b) > tol * scale:
                continue
            if np.any(z[nonneg] < -tol * scale):
                continue
            if best is None or z @ z < best @ best - 1e-14:
                best = z
    return best


def contact_system(positions, normals, belt_points, belt_dirs, reference):
    """Equality matrix of a distribution problem, columns ``[s, t1, t2, tau]``."""
    from suitload.dynamics import tangent_basis

    r = positions - reference
    t1, t2 = tangent_basis(normals)
    cols = [np.vstack([d.T, np.cross(r, d).T]) for d in (normals, t1, t2)]
    rb = belt_points - reference
    cols.append(np.vstack([belt_dirs.T, np.cross(rb, belt_dirs).T]))
    A = np.hstack(cols)
    N, B = len(positions), len(belt_points)
    nonneg = np.zeros(3 * N + B, bool)
    nonneg[:N] = True
    nonneg[3 * N:] = True
    return A, nonneg, (t1, t2)


def hand_rotation(axis, angle):
    """Rodrigues' formula, written out independently of the package helpers."""
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
