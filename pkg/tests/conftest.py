import numpy as np
import pytest

from radarsynth.config import RadarConfig
from radarsynth.fixtures import DEMO_CAMERA, demo_gesture, demo_masks, demo_scene, mirror_scene


@pytest.fixture
def cfg():
    return RadarConfig()


@pytest.fixture(scope="session")
def gesture():
    return demo_gesture()


@pytest.fixture(scope="session")
def gesture_masks(gesture):
    return demo_masks(gesture)


@pytest.fixture
def camera():
    return DEMO_CAMERA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
