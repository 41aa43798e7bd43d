import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from suitload.dynamics import inverse_dynamics_trial  # noqa: E402
from suitload.estimator import run_filter, states_to_array  # noqa: E402
from suitload.kinematics import differentiate_poses  # noqa: E402
from suitload.model import Anthropometry, build_default_suit  # noqa: E402
from suitload.synth import generate_synthetic_trial  # noqa: E402


@pytest.fixture(scope="session")
def anthro():
    return Anthropometry()


@pytest.fixture(scope="session")
def suit(anthro):
    return build_default_suit(anthro)


class Trial:
    """A synthetic trial with its filter output, cached per session."""

    def __init__(self, kind, duration, anthro, suit):
        self.kind = kind
        self.recording, self.truth = generate_synthetic_trial(kind, duration)
        self.states = run_filter(self.recording, anthro)
        self.X = states_to_array(self.states)
        self._suit, self._anthro = suit, anthro
        self._kin = None
        self._loads = None

    @property
    def kin(self):
        if self._kin is None:
            self._kin = differentiate_poses(self.recording, self._suit, self.X, self._anthro)
        return self._kin

    @property
    def loads(self):
        if self._loads is None:
            self._loads = inverse_dynamics_trial(self._suit, self.kin, keep_solutions=True)
        return self._loads


_cache = {}


@pytest.fixture(scope="session")
def trial_factory(anthro, suit):
    def make(kind, duration=None):
        key = (kind, duration)
        if key not in _cache:
            _cache[key] = Trial(kind, duration, anthro, suit)
        return _cache[key]

    return make


@pytest.fixture(scope="session")
def stand(trial_factory):
    return trial_factory("stand", 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
