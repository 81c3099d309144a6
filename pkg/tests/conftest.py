"""Shared desk-scale fixture: one committed synthetic stream plus the
model/train configs used by the acceptance suite. Values here are frozen;
changing any of them invalidates the expected numbers in
test_acceptance.py."""

import pytest

from scvad.feature_io import SynthConfig, generate_synthetic
from scvad.trainer import TrainConfig, train_few_shot
from scvad.transformer import ModelConfig

FIXTURE_SYNTH = dict(
    dim=16,
    spatial_dim=8,
    length=200,
    anomaly_spans=[(150, 160)],
    anomaly_magnitude=1.0,
    seed=7,
)
FIXTURE_SPAN = range(150, 161)

# convergence run: matches the committed learning-curve criterion
CONVERGENCE_MODEL = dict(feature_dim=16, model_dim=32, heads=2, layers=2, window=5, seed=7)
CONVERGENCE_TRAIN = dict(n_shots=30, window=5, epochs=100, lr=0.001, seed=7)

# detection run: more windows for a tighter train/test gap
DETECT_MODEL = dict(feature_dim=16, model_dim=32, heads=2, layers=2, window=5, seed=7)
DETECT_TRAIN = dict(n_shots=50, window=5, epochs=100, lr=0.001, seed=7)
DETECT_CONSISTENCY = dict(half_window=3, min_neighbors=4)
ABLATION_ROOT_SEED = 7


@pytest.fixture(scope="session")
def fixture_stream():
    return generate_synthetic(SynthConfig(**FIXTURE_SYNTH))


@pytest.fixture(scope="session")
def detect_artifact(fixture_stream):
    return train_few_shot(
        fixture_stream, ModelConfig(**DETECT_MODEL), TrainConfig(**DETECT_TRAIN)
    )
