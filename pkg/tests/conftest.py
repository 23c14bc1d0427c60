import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from heartsound.pipeline import synthetic_training_set, train_from_recordings  # noqa: E402
from heartsound.synth import SynthConfig, generate  # noqa: E402


@pytest.fixture(scope="session")
def training_records():
    return synthetic_training_set(4, seed=100, duration_s=60.0, snr_db=20.0)


@pytest.fixture(scope="session")
def model(training_records):
    return train_from_recordings([(r.audio, r.rpeak_times_s) for r in training_records], rng_seed=0)


@pytest.fixture(scope="session")
def rest_record():
    return generate(SynthConfig(duration_s=60.0, mean_bpm=70.0, bpm_jitter_std_ms=20.0,
                                snr_db=20.0, rng_seed=500))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
