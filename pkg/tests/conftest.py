"""Shared fixtures: compact scenarios and one trained model reused by suites.

The unit suites run on w=40 windows to keep eigendecompositions cheap; the
acceptance suite pins the full w=100 operating point separately.
"""

import pytest
from hypothesis import settings

from pmim.detector import DetectorConfig, detect, train
from pmim.synth import FaultSpec, SynthConfig, scenario

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")

UNIT_W = 40
UNIT_ONSET = 120


@pytest.fixture(scope="session")
def unit_cfg():
    return DetectorConfig(w=UNIT_W)


@pytest.fixture(scope="session")
def bias_scn():
    """Sensor-bias scenario; training is clean, fault starts mid-test."""
    return scenario(
        SynthConfig(seed=3),
        FaultSpec(kind="sensor_bias", onset=UNIT_ONSET),
        n_train=400,
        n_test=240,
    )


@pytest.fixture(scope="session")
def clean_scn():
    """Same realization as bias_scn but with no fault injected."""
    return scenario(SynthConfig(seed=3), None, n_train=400, n_test=240)


@pytest.fixture(scope="session")
def unit_model(bias_scn, unit_cfg):
    return train(bias_scn.train, unit_cfg)


@pytest.fixture(scope="session")
def bias_trace(unit_model, bias_scn):
    return detect(unit_model, bias_scn.test)
