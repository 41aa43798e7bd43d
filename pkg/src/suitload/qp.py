"""Minimum-norm force distribution with sign constraints.

Solves::

    min  1/2 ||z||^2
    s.t. A z = b
         z_i >= 0  for i in ``nonneg``

by a dual active-set Newton method.  For fixed multipliers ``lam`` the
primal minimizer is ``z = clip(A^T lam)`` (clipped only on ``nonneg``), so the
dual is a concave, piecewise-quadratic function of ``len(b)`` variables.  Each
Newton step solves with the active columns and is followed by an exact
line search on the piecewise-quadratic dual.  A dual ascent direction along
which the dual grows without bound is a certificate of infeasibility.
"""

from __future__ import annotations

import numpy as np


class InfeasibleProblemError(ValueError):
    """Raised when no sign-feasible ``z`` satisfies ``A z = b``."""

    def __init__(self, message, constraint_set=None):
        super().__init__(message)
        self.constraint_set = constraint_set


def _primal(A, lam, nonneg):
    z = A.T @ lam
    z[nonneg] = np.maximum(z[nonneg], 0.0)
    return z


def _line_search(A, b, lam, d, nonneg):
    """Exact maximizer of the dual along ``lam + t d``, t > 0.

    The directional derivative is piecewise linear and non-increasing in t
    with kinks where a sign-constrained component changes activity.
    """
    c, e = A.T @ lam, A.T @ d
    db = d @ b
    kinks = np.sort(-c[nonneg & (e != 0.0)] / e[nonneg & (e != 0.0)])
    kinks = kinks[kinks > 0.0]
    ts = np.concatenate([[0.0], kinks])

    def slope_at(t):
        u = c[None, :] + np.outer(t, e)
        u[:, nonneg] = np.maximum(u[:, nonneg], 0.0)
        return db - u @ e

    g = slope_at(ts)
    down = np.nonzero(g <= 0.0)[0]
    if len(down):
        k = down[0]
        if k == 0:
            return 0.0
        t0, t1 = ts[k - 1], ts[k]
        return t0 + (t1 - t0) * g[k - 1] / (g[k - 1] - g[k])
    # past the last kink the derivative is affine with this rate
    t_last = ts[-1] + 1.0
    rate = slope_at(np.array([t_last]))[0] - g[-1]
    if rate >= 0.0:
        raise InfeasibleProblemError(
            "dual objective unbounded along a recession direction: no sign-feasible solution")
    return ts[-1] - g[-1] / rate


def solve_min_norm(A, b, nonneg, tol=1e-10, max_iter=200, ridge=1e-10, lam0=None):
    """Return ``(z, lam, info)`` for the sign-constrained minimum-norm problem.

    Parameters
    ----------
    A : (m, n) array
    b : (m,) array
    nonneg : (n,) bool array
        Components constrained to be non-negative.
    tol : float
        Equality residual tolerance relative to ``max(1, |b|)``.
    ridge : float
        Tikhonov term added to the Newton matrix, which is singular when the
        active columns do not span the constraint space.
    lam0 : (m,) array, optional
        Warm start for the multipliers, e.g. from the previous time sample.

    Raises
    ------
    InfeasibleProblemError
        If the iteration diverges, which happens exactly when ``b`` is outside
        the cone generated by the columns.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    nonneg = np.asarray(nonneg, bool)
    m, n = A.shape
    scale = max(1.0, np.linalg.norm(b))
    if np.linalg.norm(b) == 0.0:
        return np.zeros(n), np.zeros(m), {"iterations": 0, "residual": 0.0}
    lam = np.zeros(m) if lam0 is None else np.array(lam0, float)
    col_scale = max(np.abs(A).max(), 1e-300)
    bound = 1e12 * scale / col_scale**2
    for it in range(1, max_iter + 1):
        z = _primal(A, lam, nonneg)
        grad = b - A @ z
        res = np.linalg.norm(grad)
        active = ~nonneg | (A.T @ lam > 0.0)
        if res <= tol * scale:
            z = _polish(A, b, nonneg, active, z)
            return z, lam, {"iterations": it, "residual": float(np.linalg.norm(A @ z - b))}
        Aa = A[:, active]
        H = Aa @ Aa.T
        H[np.diag_indices(m)] += ridge * max(np.trace(H) / m, 1.0)
        step = np.linalg.solve(H, grad)
        lam = lam + _line_search(A, b, lam, step, nonneg) * step
        if np.linalg.norm(lam) > bound:
            raise InfeasibleProblemError("dual multipliers diverged: no sign-feasible solution")
    z = _primal(A, lam, nonneg)
    res = np.linalg.norm(A @ z - b)
    if res <= 1e-8 * scale:
        return z, lam, {"iterations": max_iter, "residual": float(res)}
    raise InfeasibleProblemError(
        f"no convergence after {max_iter} iterations (residual {res:.3g}); "
        "the target is outside the reachable cone")


def _polish(A, b, nonneg, active, z):
    """Exact minimum-norm solve on the final active set, kept only if sign-feasible."""
    Aa = A[:, active]
    za = np.linalg.lstsq(Aa, b, rcond=None)[0]
    cand = np.zeros_like(z)
    cand[active] = za
    if np.all(cand[nonneg] >= -1e-12) and np.linalg.norm(A @ cand - b) <= np.linalg.norm(A @ z - b):
        return cand
    return z
