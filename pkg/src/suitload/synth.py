"""Kinematically consistent synthetic trials (used by the ``synth`` command and the tests).

Footholds and swing-foot paths are laid out for the course, the base follows
a moving average of the two feet plus a fixed standing height, and joint angles are
recovered from the foot positions by inverse kinematics.  Base accelerations
are chosen so that the sampled base trajectory obeys the discrete
constant-acceleration update exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import SIDES, TrialRecording, foot_fk, rot_x, rot_y, rot_z
from .model import Anthropometry, G

KINDS = ("stand", "flat_walk", "stairs_up", "stairs_down")
SAMPLE_RATE = 128.0
QUIET = 1.0  # s of quiet standing before and after walking
DOUBLE_SUPPORT = 0.15  # s per step
FLAT_DISTANCE = 6.4
STAIR_RISE = 0.16
STAIR_COUNT = 5
STAIR_TREAD = 0.25
STAIR_START = 0.25
SOFT_MIN = 0.02
BASE_NODES = 24  # quadrature nodes of the base smoothing window
HEIGHT_WINDOW = 0.25  # height smoothing window, in step periods
DEFAULT_DURATION = {"stand": 5.0, "flat_walk": 12.2, "stairs_up": 7.6, "stairs_down": 7.6}

# standing pose: crouched enough to reach stair footholds, sole parallel to the base
STAND_LEG = np.array([0.4, 0.0, 0.0, 0.8, 0.4, 0.0])


@dataclass(frozen=True)
class SyntheticTruth:
    time: np.ndarray
    position: np.ndarray  # (n, 3) base
    velocity: np.ndarray  # (n, 3)
    feet: np.ndarray  # (n, 2, 3) left, right
    stance: np.ndarray  # (n, 2) bool
    double_stance_quiet: np.ndarray  # (n,) bool, quiet standing samples

    @property
    def displacement(self):
        return self.position[-1] - self.position[0]

    @property
    def path_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.position, axis=0), axis=1)))


def _quintic(u):
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _bump(u):
    """C2 bump on [0, 1] peaking at 1 for u = 0.5."""
    return 64.0 * u**3 * (1.0 - u) ** 3


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return _quintic(u)


def _course(kind, hip_y):
    """Foot placements ``(side, (x, y, z))`` in course coordinates, in order."""
    y = {"left": hip_y[0], "right": hip_y[1]}
    steps = []
    if kind == "flat_walk":
        n = 16
        stride = FLAT_DISTANCE / n
        for j in range(1, n + 1):
            side = SIDES[(j - 1) % 2]
            steps.append((side, (j * stride, y[side], 0.0)))
        last = SIDES[n % 2]
        steps.append((last, (FLAT_DISTANCE, y[last], 0.0)))
        start_z = 0.0
    else:
        up = kind == "stairs_up"
        top = STAIR_START + STAIR_COUNT * STAIR_TREAD + 0.15
        for j in range(1, STAIR_COUNT + 1):
            side = SIDES[(j - 1) % 2]
            x = STAIR_START + (j - 0.5) * STAIR_TREAD
            z = STAIR_RISE * j if up else STAIR_RISE * (STAIR_COUNT - j)
            steps.append((side, (x, y[side], z)))
        end_z = STAIR_RISE * STAIR_COUNT if up else 0.0
        for j in (STAIR_COUNT + 1, STAIR_COUNT + 2):
            side = SIDES[(j - 1) % 2]
            steps.append((side, (top, y[side], end_z)))
        start_z = 0.0 if up else STAIR_RISE * STAIR_COUNT
    return steps, start_z


def _foot_tracks(kind, t, anthro, stand_feet, step_period, lift=True):
    """Course-frame foot positions (n, 2, 3) and stance flags over time.

    With ``lift=False`` swing feet glide without clearance, which is what the
    base height follows.
    """
    n = len(t)
    feet = np.empty((n, 2, 3))
    stance = np.ones((n, 2), bool)
    if kind == "stand":
        feet[:] = stand_feet
        return feet, stance
    steps, start_z = _course(kind, (stand_feet[0, 1], stand_feet[1, 1]))
    current = stand_feet + [0.0, 0.0, start_z]
    feet[:] = current
    swing = step_period - DOUBLE_SUPPORT
    clearance = (0.06 if kind == "flat_walk" else 0.10) if lift else 0.0
    for j, (side, target) in enumerate(steps):
        k = SIDES.index(side)
        t0 = QUIET + j * step_period + DOUBLE_SUPPORT
        t1 = t0 + swing
        start = current[k].copy()
        target = np.array(target) + [stand_feet[k, 0], 0.0, stand_feet[k, 2]]
        during = (t >= t0) & (t < t1)
        u = (t[during] - t0) / swing
        s = _quintic(u)[:, None]
        path = start + s * (target - start)
        path[:, 2] += clearance * _bump(u)
        feet[during, k] = path
        stance[during, k] = False
        feet[t >= t1, k] = target
        current[k] = target
    return feet, stance


def _orientation(t, walking, step_period):
    w = walking
    roll = 0.02 * w * np.sin(np.pi * t / step_period)
    pitch = 0.01 * w * np.sin(2.0 * np.pi * t / step_period)
    yaw = 0.03 * w * np.sin(np.pi * t / step_period + 0.5)
    return np.array([rot_z(c) @ rot_y(b) @ rot_x(a) for a, b, c in zip(roll, pitch, yaw)])


def _solve_leg(target, side, anthro, guess):
    """Hip flexion, hip abduction and knee flexion placing the sole at ``target``.

    Hip rotation is zero, ankle flexion keeps the sole parallel to the base
    and ankle inversion cancels abduction.
    """

    def full(x):
        f, a, k = x
        leg = np.array([f, a, 0.0, k, k - f, -a])
        q = np.zeros(12)
        q[:6] = leg if side == "left" else 0.0
        q[6:] = leg if side == "right" else 0.0
        return q

    x = np.array(guess, float)
    for _ in range(50):
        r = foot_fk(full(x), side, anthro) - target
        if np.max(np.abs(r)) < 1e-13:
            break
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-7
            J[:, j] = (foot_fk(full(x + e), side, anthro) - foot_fk(full(x - e), side, anthro)) / 2e-7
        x = x - np.linalg.solve(J, r)
    else:
        raise RuntimeError(f"leg inverse kinematics did not converge for {side} foot")
    if not 0.0 <= x[2] <= np.pi:
        raise RuntimeError("leg inverse kinematics left the knee range")
    leg = full(x)
    return x, leg[:6] if side == "left" else leg[6:]


def generate_synthetic_trial(kind="stand", duration=None, seed=None, anthro=None,
                             accel_noise_sd=0.0, joint_noise_deg=0.0, sample_rate=SAMPLE_RATE):
    """Synthesize a recording and its ground truth.

    Parameters
    ----------
    kind : {"stand", "flat_walk", "stairs_up", "stairs_down"}
    duration : float, optional
        Total length in seconds.  Walking kinds keep 1 s of quiet standing at
        each end and spread the steps over the rest.
    seed : int, optional
        Seed for the optional sensor noise.
    accel_noise_sd, joint_noise_deg : float
        White noise added to the accelerometer (m/s^2) and joint angles (deg).

    Returns
    -------
    (TrialRecording, SyntheticTruth)
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    duration = DEFAULT_DURATION[kind] if duration is None else float(duration)
    if not duration > 0:
        raise ValueError("duration must be positive")
    anthro = Anthropometry() if anthro is None else anthro
    dt = 1.0 / sample_rate
    n = int(round(duration * sample_rate)) + 1
    t = np.arange(n) * dt

    stand_q = np.concatenate([STAND_LEG, STAND_LEG])
    stand_feet = np.array([foot_fk(stand_q, side, anthro) for side in SIDES])
    height = -stand_feet[:, 2].mean()

    if kind == "stand":
        step_period = 1.0
        walking = np.zeros(n)
    else:
        n_steps = len(_course(kind, (0.0, 0.0))[0])
        step_period = (duration - 2.0 * QUIET) / n_steps
        if not 0.4 <= step_period <= 2.0:
            raise ValueError(f"duration {duration} s gives an implausible step period "
                             f"{step_period:.3f} s")
        t_end = QUIET + n_steps * step_period
        walking = _smoothstep((t - QUIET + 0.3) / 0.3) * _smoothstep((t_end + 0.3 - t) / 0.3)

    nodes, weights = np.polynomial.legendre.leggauss(BASE_NODES)

    def raw_track(times):
        feet, _ = _foot_tracks(kind, times, anthro, stand_feet, step_period, lift=False)
        mid = feet.mean(axis=1)
        # smooth minimum of the two foot heights keeps the lower leg in reach on stairs
        half_gap = 0.5 * (feet[:, 0, 2] - feet[:, 1, 2])
        z = mid[:, 2] - np.sqrt(half_gap**2 + SOFT_MIN**2) + SOFT_MIN
        return np.column_stack([mid[:, 0] - stand_feet[:, 0].mean(), mid[:, 1], z + height])

    def averaged(times, window):
        shifted = times[:, None] + 0.5 * window * nodes[None, :]
        track = raw_track(shifted.ravel()).reshape(len(times), len(nodes), 3)
        return 0.5 * np.einsum("j,njc->nc", weights, track)

    def base_track(times):
        # a one-step moving average gives steady walking a constant base velocity;
        # height uses a shorter window so the lower foot stays in reach on stairs
        smooth = averaged(times, step_period)
        smooth[:, 2] = averaged(times, HEIGHT_WINDOW * step_period)[:, 2]
        return smooth

    feet_c, stance = _foot_tracks(kind, t, anthro, stand_feet, step_period)
    # a flag covers the interval to the next sample, so lift-off is flagged one sample early
    stance[:-1] &= stance[1:]
    h = 1e-5
    t_ext = np.append(t, t[-1] + dt)
    vel_c = (base_track(t_ext + h) - base_track(t_ext - h)) / (2.0 * h)
    accel_w = np.diff(vel_c, axis=0) / dt

    origin = base_track(t[:1])[0]
    p = np.empty((n, 3))
    v = np.empty((n, 3))
    p[0] = 0.0
    v[0] = vel_c[0]
    for i in range(n - 1):
        p[i + 1] = p[i] + v[i] * dt + 0.5 * dt**2 * accel_w[i]
        v[i + 1] = v[i] + dt * accel_w[i]
    feet_w = feet_c - origin

    R = _orientation(t, walking, step_period)
    g = np.array([0.0, 0.0, -G])
    accel_b = np.einsum("nji,nj->ni", R, accel_w - g)

    joints = np.empty((n, 12))
    guesses = {side: np.array([STAND_LEG[0], 0.0, STAND_LEG[3]]) for side in SIDES}
    for i in range(n):
        for k, side in enumerate(SIDES):
            target = R[i].T @ (feet_w[i, k] - p[i])
            guesses[side], leg = _solve_leg(target, side, anthro, guesses[side])
            joints[i, 6 * k:6 * k + 6] = leg

    rng = np.random.default_rng(seed)
    if accel_noise_sd > 0:
        accel_b = accel_b + rng.normal(0.0, accel_noise_sd, accel_b.shape)
    if joint_noise_deg > 0:
        joints = joints + np.radians(rng.normal(0.0, joint_noise_deg, joints.shape))
        joints[:, [3, 9]] = np.clip(joints[:, [3, 9]], 0.0, np.pi)

    quiet = stance.all(axis=1) & (walking == 0.0)
    recording = TrialRecording(t, R, accel_b, joints, stance)
    truth = SyntheticTruth(t, p, v, feet_w, stance, quiet)
    return recording, truth
