"""Newton-Euler wrenches of the suit segments and their distribution over contacts and belts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .analysis import LoadSeries
from .model import G, BELT_ANCHORS
from .qp import InfeasibleProblemError, solve_min_norm
from .validation import make_pose

GRAVITY = np.array([0.0, 0.0, -G])
DEFAULT_REGIONS = ("left_shoulder", "right_shoulder")


class InfeasibleWrenchError(ValueError):
    """The required wrench cannot be produced by push-only contacts and pull-only belts."""

    def __init__(self, message, constraint_set, sample=None, segment=None):
        prefix = ""
        if sample is not None:
            prefix += f"sample {sample}: "
        if segment is not None:
            prefix += f"segment {segment}: "
        super().__init__(prefix + message)
        self.constraint_set = constraint_set
        self.sample = sample
        self.segment = segment


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    moment: np.ndarray
    reference: np.ndarray

    def __post_init__(self):
        for name in ("force", "moment", "reference"):
            v = np.asarray(getattr(self, name), float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"wrench {name} must be a finite 3-vector")
            object.__setattr__(self, name, v)

    def moved_to(self, point):
        """Same wrench with moments taken about ``point``."""
        point = np.asarray(point, float)
        return Wrench(self.force, self.moment + np.cross(self.reference - point, self.force), point)

    def __add__(self, other):
        other = other.moved_to(self.reference)
        return Wrench(self.force + other.force, self.moment + other.moment, self.reference)

    @property
    def magnitude(self):
        return float(np.linalg.norm(np.concatenate([self.force, self.moment])))


@dataclass
class ContactSolution:
    """Distributed forces acting on one suit segment, world frame.

    ``labels`` gives the region id of each contact point and ``index`` its
    position within that region.
    """

    positions: np.ndarray
    normals: np.ndarray
    forces: np.ndarray
    labels: tuple
    index: np.ndarray
    belt_points: np.ndarray
    belt_directions: np.ndarray
    tensions: np.ndarray
    residual: float
    segment: str = None
    multipliers: np.ndarray = None

    @property
    def belt_forces(self):
        return self.tensions[:, None] * self.belt_directions

    @property
    def total_force(self):
        return self.forces.sum(axis=0) + self.belt_forces.sum(axis=0)

    def region_mask(self, region_id):
        return np.array([lab == region_id for lab in self.labels], bool)


def required_wrench(segment, sample, g=GRAVITY):
    """Net wrench the wearer must apply to a segment, about its centre of mass.

    ``sample`` holds ``R``, ``com``, ``com_accel``, ``omega`` and ``alpha`` in
    the world frame.
    """
    g = np.asarray(g, float)
    R = np.asarray(sample["R"], float)
    I = R @ segment.inertia @ R.T
    w = np.asarray(sample["omega"], float)
    force = segment.mass * (np.asarray(sample["com_accel"], float) - g)
    moment = I @ np.asarray(sample["alpha"], float) + np.cross(w, I @ w)
    return Wrench(force, moment, np.asarray(sample["com"], float))


def tangent_basis(normals):
    """Two unit tangents per normal, forming a right-handed frame with it."""
    normals = np.asarray(normals, float)
    helper = np.where(np.abs(normals[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = np.cross(normals, helper)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(normals, t1)
    return t1, t2


def _build_system(wrench, positions, normals, belt_points, belt_dirs, belt_weight):
    r = positions - wrench.reference
    t1, t2 = tangent_basis(normals) if len(normals) else (normals, normals)
    cols = []
    for d in (normals, t1, t2):
        cols.append(np.vstack([d.T, np.cross(r, d).T]))
    rb = belt_points - wrench.reference
    cols.append(np.vstack([belt_dirs.T, np.cross(rb, belt_dirs).T]) / np.sqrt(belt_weight))
    A = np.hstack(cols)
    N, B = len(positions), len(belt_points)
    nonneg = np.zeros(3 * N + B, bool)
    nonneg[:N] = True
    nonneg[3 * N:] = True
    b = np.concatenate([wrench.force, wrench.moment])
    return A, b, nonneg, (t1, t2)


def _name_violation(A, b, nonneg, N):
    """Which sign constraints make the problem infeasible."""
    candidates = []
    for label, relax in (("contact push", slice(0, N)), ("belt pull", slice(3 * N, None))):
        mask = nonneg.copy()
        mask[relax] = False
        try:
            solve_min_norm(A, b, mask)
            candidates.append(label)
        except InfeasibleProblemError:
            pass
    if len(candidates) == 1:
        return candidates[0] + " constraints"
    if candidates:
        return "contact push and belt pull constraints"
    return "equilibrium equations (wrench outside the span of contacts and belts)"


def distribute_forces(wrench, positions, normals, belt_points=None, belt_directions=None,
                      belt_weight=1.0, labels=None, index=None, tol=1e-10, warm_start=None):
    """Minimum-norm contact forces and belt tensions balancing ``wrench``.

    Minimizes ``sum |f_i|^2 + belt_weight * sum tau_j^2`` subject to force
    and moment balance, ``f_i . n_i >= 0`` and ``tau_j >= 0``.  Belt ``j`` pulls
    the segment along ``belt_directions[j]`` from ``belt_points[j]``.
    ``warm_start`` takes the ``multipliers`` of a nearby solve.

    Raises
    ------
    InfeasibleWrenchError
        With ``constraint_set`` naming the sign constraints that block balance.
    """
    positions = np.asarray(positions, float).reshape(-1, 3)
    normals = np.asarray(normals, float).reshape(-1, 3)
    belt_points = np.zeros((0, 3)) if belt_points is None else np.asarray(belt_points, float).reshape(-1, 3)
    belt_dirs = np.zeros((0, 3)) if belt_directions is None else np.asarray(belt_directions, float).reshape(-1, 3)
    N, B = len(positions), len(belt_points)
    if N + B == 0:
        raise ValueError("need at least one contact point or belt")
    if normals.shape != positions.shape or belt_dirs.shape != belt_points.shape:
        raise ValueError("positions/normals or belt points/directions have mismatched shapes")
    if N and np.max(np.abs(np.linalg.norm(normals, axis=1) - 1.0)) > 1e-9:
        raise ValueError("contact normals must be unit vectors")
    if B and np.max(np.abs(np.linalg.norm(belt_dirs, axis=1) - 1.0)) > 1e-9:
        raise ValueError("belt directions must be unit vectors")
    if belt_weight <= 0:
        raise ValueError("belt_weight must be positive")

    A, b, nonneg, (t1, t2) = _build_system(wrench, positions, normals, belt_points, belt_dirs,
                                           belt_weight)
    try:
        z, lam, _ = solve_min_norm(A, b, nonneg, tol=tol, lam0=warm_start)
    except InfeasibleProblemError as exc:
        which = _name_violation(A, b, nonneg, N)
        raise InfeasibleWrenchError(f"infeasible wrench: violates {which}", which) from exc
    s, a, c = z[:N], z[N:2 * N], z[2 * N:3 * N]
    forces = s[:, None] * normals + a[:, None] * t1 + c[:, None] * t2
    tensions = z[3 * N:] / np.sqrt(belt_weight)
    residual = float(np.linalg.norm(A @ z - b))
    return ContactSolution(
        positions=positions,
        normals=normals,
        forces=forces,
        labels=tuple(labels) if labels is not None else ("",) * N,
        index=np.asarray(index if index is not None else np.arange(N)),
        belt_points=belt_points,
        belt_directions=belt_dirs,
        tensions=tensions,
        residual=residual,
        multipliers=lam,
    )


def tangential_ratio(solution, region=None):
    """Sum of tangential force magnitudes over sum of normal components.

    Returns ``nan`` when the normal sum is zero (undefined ratio).
    """
    mask = np.ones(len(solution.forces), bool) if region is None else solution.region_mask(region)
    if not mask.any():
        raise ValueError("solution has no contact points" + (f" in {region!r}" if region else ""))
    f, n = solution.forces[mask], solution.normals[mask]
    normal = np.einsum("ij,ij->i", f, n)
    tangential = np.linalg.norm(f - normal[:, None] * n, axis=1)
    total = normal.sum()
    if total == 0.0:
        return float("nan")
    return float(tangential.sum() / total)


def segment_contacts(suit, segment_id, kin, i):
    """World-frame contact points and belt lines of one segment at sample ``i``."""
    seg = suit.segments[segment_id]
    R, o = kin.bodies[seg.body_frame]
    Ri, oi = R[i], o[i]
    positions, normals, labels, index = [], [], [], []
    for region in suit.regions_of(segment_id):
        positions.append(region.positions() @ Ri.T + oi)
        normals.append(region.normals() @ Ri.T)
        labels += [region.id] * len(region.points)
        index.append(np.arange(len(region.points)))
    belt_pts, belt_dirs = [], []
    for belt in suit.belts_of(segment_id):
        Rb, ob = kin.bodies[BELT_ANCHORS[belt.body_segment]]
        p_suit = oi + Ri @ belt.suit_point
        p_body = ob[i] + Rb[i] @ belt.body_point
        d = p_body - p_suit
        belt_pts.append(p_suit)
        belt_dirs.append(d / np.linalg.norm(d))
    return (_stack(positions), _stack(normals), labels,
            np.concatenate(index) if index else np.zeros(0, int), _stack(belt_pts),
            _stack(belt_dirs))


def _stack(rows):
    return np.vstack(rows) if rows else np.zeros((0, 3))


def segment_wrench(suit, segment_id, kin, i, g=GRAVITY):
    """Required wrench of a segment plus those of the segments it carries."""
    seg = suit.segments[segment_id]
    w = required_wrench(seg, kin.sample(segment_id, i), g)
    for child, parent in suit.carried_by.items():
        if parent == segment_id:
            w = w + required_wrench(suit.segments[child], kin.sample(child, i), g)
    return w


@dataclass
class TrialLoads:
    """Result of :func:`inverse_dynamics_trial`."""

    time: np.ndarray
    loads: dict  # region id -> LoadSeries (simulated)
    vertical_total: np.ndarray  # (n,) summed vertical interface force, N
    max_residual: np.ndarray  # (n,) largest equality residual over segments
    tangential: dict  # region id -> (n,) tangential ratio
    point_forces: dict  # region id -> (n, points, 3)
    solutions: list = None  # per sample: segment id -> ContactSolution (if kept)


def inverse_dynamics_trial(suit, kin, regions=DEFAULT_REGIONS, g=GRAVITY, belt_weight=1.0,
                           keep_solutions=False):
    """Solve the force distribution of every load-bearing segment at every sample.

    Carried segments (the arms) add their wrench to their carrier.  Returns a
    :class:`TrialLoads` with normal-resultant :class:`LoadSeries` for each
    requested region.
    """
    regions = tuple(regions)
    for rid in regions:
        suit.region(rid)
    missing = [s for s in suit.segments if s not in kin.segments]
    if missing:
        raise ValueError(f"kinematics missing suit segments {missing}")
    solved = [s for s in suit.segments if s not in suit.carried_by]
    n = len(kin)
    vertical = np.zeros(n)
    residual = np.zeros(n)
    resultants = {rid: np.zeros(n) for rid in regions}
    tangential = {rid: np.zeros(n) for rid in regions}
    point_forces = {rid: np.zeros((n, len(suit.region(rid).points), 3)) for rid in regions}
    kept = [] if keep_solutions else None
    warm = {}
    for i in range(n):
        per_sample = {}
        for sid in solved:
            wrench = segment_wrench(suit, sid, kin, i, g)
            pos, nrm, labels, index, bp, bd = segment_contacts(suit, sid, kin, i)
            try:
                sol = distribute_forces(wrench, pos, nrm, bp, bd, belt_weight, labels, index,
                                        warm_start=warm.get(sid))
            except InfeasibleWrenchError as exc:
                raise InfeasibleWrenchError(str(exc), exc.constraint_set, sample=i,
                                            segment=sid) from exc
            sol.segment = sid
            warm[sid] = sol.multipliers
            vertical[i] += sol.total_force[2]
            residual[i] = max(residual[i], sol.residual)
            for rid in regions:
                mask = sol.region_mask(rid)
                if mask.any():
                    f = sol.forces[mask]
                    point_forces[rid][i] = f
                    resultants[rid][i] = float(np.einsum("ij,ij->", f, sol.normals[mask]))
                    tangential[rid][i] = tangential_ratio(sol, rid)
            per_sample[sid] = sol
        if keep_solutions:
            kept.append(per_sample)
    loads = {rid: LoadSeries(rid, "simulated", kin.time.copy(), resultants[rid]) for rid in regions}
    return TrialLoads(kin.time.copy(), loads, vertical, residual, tangential, point_forces, kept)


class InterfaceLoadModel(BaseEstimator):
    """Estimator facade: ``fit`` stores the suit, ``predict`` maps kinematics to loads.

    Parameters
    ----------
    suit : SuitModel
    regions : tuple of str
        Regions whose normal resultants are reported.
    belt_weight : float
        Cost weight of belt tensions relative to contact forces.
    gravity : tuple
        World gravity vector (m/s^2).
    """

    def __init__(self, suit=None, regions=DEFAULT_REGIONS, belt_weight=1.0,
                 gravity=tuple(GRAVITY)):
        self.suit = suit
        self.regions = regions
        self.belt_weight = belt_weight
        self.gravity = gravity

    def fit(self, kinematics=None, y=None):
        from .model import build_default_suit

        self.suit_ = build_default_suit() if self.suit is None else self.suit
        for rid in self.regions:
            self.suit_.region(rid)
        return self

    def predict(self, kinematics):
        if not hasattr(self, "suit_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("InterfaceLoadModel is not fitted yet; call fit first")
        return inverse_dynamics_trial(self.suit_, kinematics, self.regions,
                                      np.asarray(self.gravity, float), self.belt_weight)


def pose_at(kin, frame, i):
    R, o = kin.bodies[frame]
    return make_pose(R[i], o[i])
