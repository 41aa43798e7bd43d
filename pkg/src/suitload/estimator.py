"""Linear Kalman filter for base position, base velocity and both feet.

State layout: ``[p (3), v (3), p_left (3), p_right (3)]``, all world frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .kinematics import JointAngles, TrialRecording, fk_jacobian, foot_fk, SIDES
from .model import Anthropometry, G
from .validation import check_positive, check_rotation

COV_FLOOR = 1e-8


@dataclass(frozen=True)
class NoiseConfig:
    """Noise standard deviations; defaults are the tuned values for 128 Hz data."""

    accel_sd: float = 0.2  # m/s^2
    support_foot_sd: float = 1e-5  # m
    swing_foot_sd: float = 1e8  # m
    joint_angle_sd: float = 10.0  # degrees
    gravity: tuple = (0.0, 0.0, -G)
    init_position_sd: float = 1e-3  # m
    init_velocity_sd: float = 1e-2  # m/s

    def __post_init__(self):
        for name in ("accel_sd", "support_foot_sd", "swing_foot_sd", "joint_angle_sd",
                     "init_position_sd", "init_velocity_sd"):
            check_positive(getattr(self, name), name)
        g = np.asarray(self.gravity, float)
        if g.shape != (3,) or not np.all(np.isfinite(g)):
            raise ValueError("gravity must be a finite 3-vector")
        object.__setattr__(self, "gravity", tuple(g))


@dataclass
class FilterState:
    x: np.ndarray
    P: np.ndarray
    innovation: np.ndarray = None
    update_skipped: bool = False

    @property
    def p(self):
        return self.x[0:3]

    @property
    def v(self):
        return self.x[3:6]

    @property
    def p1(self):
        return self.x[6:9]

    @property
    def p2(self):
        return self.x[9:12]

    @classmethod
    def from_parts(cls, p, v, p1, p2, P):
        return cls(np.concatenate([p, v, p1, p2]).astype(float), np.asarray(P, float))


class EstimationError(RuntimeError):
    def __init__(self, message, sample=None):
        super().__init__(message if sample is None else f"sample {sample}: {message}")
        self.sample = sample


def transition_matrix(dt):
    A = np.eye(12)
    A[0:3, 3:6] = dt * np.eye(3)
    return A


def measurement_matrix():
    """Maps the state to the world-frame foot offsets ``p_i - p``."""
    C = np.zeros((6, 12))
    C[0:3, 0:3] = -np.eye(3)
    C[0:3, 6:9] = np.eye(3)
    C[3:6, 0:3] = -np.eye(3)
    C[3:6, 9:12] = np.eye(3)
    return C


def process_noise(dt, stance, cfg):
    """White-noise-acceleration block for (p, v) and random-walk blocks for the feet."""
    q_a = cfg.accel_sd**2
    Q = np.zeros((12, 12))
    I3 = np.eye(3)
    Q[0:3, 0:3] = q_a * dt**3 / 3.0 * I3
    Q[0:3, 3:6] = Q[3:6, 0:3] = q_a * dt**2 / 2.0 * I3
    Q[3:6, 3:6] = q_a * dt * I3
    for k, on_ground in enumerate(stance):
        sd = cfg.support_foot_sd if on_ground else cfg.swing_foot_sd
        Q[6 + 3 * k:9 + 3 * k, 6 + 3 * k:9 + 3 * k] = sd**2 * dt * I3
    return Q


def _symmetrize(P):
    return 0.5 * (P + P.T)


def predict(state, R, accel, dt, stance, cfg):
    """Propagate one sample with the base accelerometer.

    ``stance`` is a pair of booleans (left, right).  The world acceleration is
    ``R @ accel + g``.
    """
    R = check_rotation(R)
    dt = check_positive(dt, "dt")
    a_w = R @ np.asarray(accel, float) + np.asarray(cfg.gravity)
    A = transition_matrix(dt)
    x = A @ state.x
    x[0:3] += 0.5 * dt**2 * a_w
    x[3:6] += dt * a_w
    P = _symmetrize(A @ state.P @ A.T + process_noise(dt, stance, cfg))
    return FilterState(x, P)


def measurement(R, q, anthro, cfg):
    """Stacked world-frame foot offsets and their covariance from joint-angle noise."""
    R = check_rotation(R)
    z = np.concatenate([R @ foot_fk(q, side, anthro) for side in SIDES])
    var_q = np.radians(cfg.joint_angle_sd) ** 2
    V = np.zeros((6, 6))
    for k, side in enumerate(SIDES):
        J = R @ fk_jacobian(q, side, anthro)
        V[3 * k:3 * k + 3, 3 * k:3 * k + 3] = var_q * J @ J.T
    d = np.diag_indices(6)
    V[d] = np.maximum(V[d], COV_FLOOR)
    return z, V


def update(state, R, q, anthro, cfg):
    """Correct the state with the leg kinematics measurement.

    Uses the Joseph form.  If the innovation covariance is singular the
    prior is returned with ``update_skipped`` set.
    """
    q = q.values if isinstance(q, JointAngles) else np.asarray(q, float)
    z, V = measurement(R, q, anthro, cfg)
    C = measurement_matrix()
    innov = z - C @ state.x
    S = C @ state.P @ C.T + V
    try:
        K = np.linalg.solve(S, C @ state.P).T
    except np.linalg.LinAlgError:
        return FilterState(state.x.copy(), state.P.copy(), innov, update_skipped=True)
    if not np.all(np.isfinite(K)):
        return FilterState(state.x.copy(), state.P.copy(), innov, update_skipped=True)
    IKC = np.eye(12) - K @ C
    P = _symmetrize(IKC @ state.P @ IKC.T + K @ V @ K.T)
    return FilterState(state.x + K @ innov, P, innov)


def initial_state(R, q, anthro, cfg):
    """Base at the origin at rest, feet placed by forward kinematics."""
    R = check_rotation(R)
    p = np.zeros(3)
    feet = [p + R @ foot_fk(q, side, anthro) for side in SIDES]
    P = np.diag(np.concatenate([
        np.full(3, cfg.init_position_sd**2),
        np.full(3, cfg.init_velocity_sd**2),
        np.full(6, cfg.init_position_sd**2),
    ]))
    return FilterState.from_parts(p, np.zeros(3), feet[0], feet[1], P)


def detect_stance(recording, anthro, height_tol=0.02, speed_tol=0.1):
    """Fallback stance flags from forward kinematics when a recording has none.

    A foot is in stance when its height is within ``height_tol`` of the
    trial's lowest foot height and it moves slower than ``speed_tol`` relative
    to the base.  Speeds are base-relative, so the rule is only reliable for
    quasi-static trials; walking trials should carry recorded contact flags.
    """
    n = len(recording)
    flags = np.zeros((n, 2), bool)
    dt = recording.sample_period
    for k, side in enumerate(SIDES):
        feet = np.array([R @ foot_fk(q, side, anthro)
                         for R, q in zip(recording.orientation, recording.joints)])
        speed = (np.linalg.norm(np.gradient(feet, dt, axis=0), axis=1) if n > 1
                 else np.zeros(n))
        flags[:, k] = (feet[:, 2] < feet[:, 2].min() + height_tol) & (speed < speed_tol)
    return flags


def run_filter(recording, anthro, cfg=None):
    """Run predict/update over a whole recording.

    Returns
    -------
    list of FilterState
        One posterior per sample; the first is the initial state corrected by
        the first measurement.
    """
    if not isinstance(recording, TrialRecording):
        raise TypeError("recording must be a TrialRecording")
    cfg = NoiseConfig() if cfg is None else cfg
    stance = recording.contact if recording.contact is not None else detect_stance(recording, anthro)
    states = []
    state = None
    for i in range(len(recording)):
        R, q = recording.orientation[i], recording.joints[i]
        try:
            if state is None:
                state = initial_state(R, q, anthro, cfg)
            else:
                dt = recording.time[i] - recording.time[i - 1]
                prev = i - 1
                state = predict(state, recording.orientation[prev], recording.accel[prev], dt,
                                stance[prev], cfg)
            state = update(state, R, q, anthro, cfg)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise EstimationError(str(exc), sample=i) from exc
        states.append(state)
    return states


def states_to_array(states):
    return np.array([s.x for s in states])


class LegOdometryFilter(BaseEstimator):
    """Estimator wrapper around :func:`run_filter`.

    ``fit`` runs the filter on a recording and stores the trajectory;
    ``transform`` returns the ``(n, 12)`` state array of a recording.
    """

    def __init__(self, anthropometry=None, accel_sd=0.2, support_foot_sd=1e-5, swing_foot_sd=1e8,
                 joint_angle_sd=10.0, gravity=(0.0, 0.0, -G)):
        self.anthropometry = anthropometry
        self.accel_sd = accel_sd
        self.support_foot_sd = support_foot_sd
        self.swing_foot_sd = swing_foot_sd
        self.joint_angle_sd = joint_angle_sd
        self.gravity = gravity

    def _config(self):
        return NoiseConfig(self.accel_sd, self.support_foot_sd, self.swing_foot_sd,
                           self.joint_angle_sd, tuple(self.gravity))

    def _anthro(self):
        return Anthropometry() if self.anthropometry is None else self.anthropometry

    def fit(self, recording, y=None):
        self.states_ = run_filter(recording, self._anthro(), self._config())
        self.trajectory_ = states_to_array(self.states_)
        self.n_samples_ = len(self.states_)
        return self

    def transform(self, recording):
        return states_to_array(run_filter(recording, self._anthro(), self._config()))

    def fit_transform(self, recording, y=None):
        return self.fit(recording).trajectory_
