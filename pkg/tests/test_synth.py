import numpy as np
import pytest

from suitload.kinematics import SIDES, foot_fk
from suitload.synth import FLAT_DISTANCE, STAIR_COUNT, STAIR_RISE, generate_synthetic_trial

G = np.array([0.0, 0.0, -9.81])


def test_stand_accel_counters_gravity():
    rec, truth = generate_synthetic_trial("stand", 1.0)
    expected = np.einsum("nji,j->ni", rec.orientation, -G)
    assert np.allclose(rec.accel, expected, atol=1e-12)
    assert np.allclose(truth.position, 0.0, atol=1e-14)
    assert rec.contact.all()


def test_flat_walk_displacement(trial_factory):
    truth = trial_factory("flat_walk").truth
    assert truth.displacement[0] == pytest.approx(FLAT_DISTANCE, abs=1e-6)
    assert abs(truth.displacement[1]) < 1e-9
    assert abs(truth.displacement[2]) < 1e-9


@pytest.mark.parametrize("kind,sign", [("stairs_up", 1.0), ("stairs_down", -1.0)])
def test_stairs_rise(trial_factory, kind, sign):
    truth = trial_factory(kind).truth
    assert STAIR_COUNT * STAIR_RISE == pytest.approx(0.8)
    assert truth.displacement[2] == pytest.approx(sign * 0.8, abs=1e-6)


@pytest.mark.parametrize("kind", ["stand", "flat_walk", "stairs_up"])
def test_kinematic_consistency(trial_factory, anthro, kind):
    trial = trial_factory(kind, 2.0 if kind == "stand" else None)
    rec, truth = trial.recording, trial.truth
    idx = np.linspace(0, len(rec) - 1, 40).astype(int)
    for i in idx:
        for k, side in enumerate(SIDES):
            world = truth.position[i] + rec.orientation[i] @ foot_fk(rec.joints[i], side, anthro)
            assert np.allclose(world, truth.feet[i, k], atol=1e-9)


def test_stance_feet_do_not_move(trial_factory):
    truth = trial_factory("flat_walk").truth
    for k in range(2):
        both = truth.stance[:-1, k] & truth.stance[1:, k]
        step = np.linalg.norm(np.diff(truth.feet[:, k], axis=0), axis=1)
        assert step[both].max() < 1e-12


def test_exact_discrete_integration(trial_factory):
    rec, truth = trial_factory("stairs_up").recording, trial_factory("stairs_up").truth
    dt = rec.time[1] - rec.time[0]
    a = np.einsum("nij,nj->ni", rec.orientation, rec.accel) + G
    p_next = truth.position[:-1] + truth.velocity[:-1] * dt + 0.5 * dt**2 * a[:-1]
    assert np.allclose(p_next, truth.position[1:], atol=1e-12)


def test_seeded_noise():
    a, _ = generate_synthetic_trial("stand", 1.0, seed=5, accel_noise_sd=0.1, joint_noise_deg=1.0)
    b, _ = generate_synthetic_trial("stand", 1.0, seed=5, accel_noise_sd=0.1, joint_noise_deg=1.0)
    c, _ = generate_synthetic_trial("stand", 1.0, seed=6, accel_noise_sd=0.1, joint_noise_deg=1.0)
    assert np.array_equal(a.accel, b.accel) and np.array_equal(a.joints, b.joints)
    assert not np.array_equal(a.accel, c.accel)
    clean, _ = generate_synthetic_trial("stand", 1.0)
    assert np.std(a.accel - clean.accel) == pytest.approx(0.1, rel=0.2)


def test_invalid_arguments():
    with pytest.raises(ValueError, match="kind"):
        generate_synthetic_trial("jog")
    with pytest.raises(ValueError, match="duration"):
        generate_synthetic_trial("stand", 0.0)
    with pytest.raises(ValueError, match="step period"):
        generate_synthetic_trial("flat_walk", 3.0)
