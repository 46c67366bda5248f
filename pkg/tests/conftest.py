import numpy as np
import pytest

from poselstm.landmarks import (
    CLASS_REGISTRY,
    LandmarkFrame,
    PoseSequence,
    label_from_index,
    pad_or_truncate,
)
from poselstm.model import LstmLayerParams, ModelConfig, ModelParams


def random_params(config: ModelConfig, rng: np.random.Generator, dtype=np.float64,
                  scale: float = 0.5) -> ModelParams:
    """Random dense parameters of the configured shapes (no structure)."""
    layers = []
    for d, u in zip(config.layer_input_dims(), config.lstm_units):
        layers.append(LstmLayerParams(
            W=rng.normal(0, scale, size=(4 * u, d)).astype(dtype),
            U=rng.normal(0, scale, size=(4 * u, u)).astype(dtype),
            b=rng.normal(0, scale, size=(4 * u,)).astype(dtype),
        ))
    k, u_last = config.num_classes, config.lstm_units[-1]
    return ModelParams(
        layers=layers,
        dense_w=rng.normal(0, scale, size=(k, u_last)).astype(dtype),
        dense_b=rng.normal(0, scale, size=(k,)).astype(dtype),
    )


def random_frame(rng: np.random.Generator) -> LandmarkFrame:
    values = rng.normal(0, 0.5, size=(33, 4)).astype(np.float32)
    values[:, 3] = rng.uniform(0, 1, size=33)
    return LandmarkFrame.from_values(values)


def random_sequence(rng: np.random.Generator, real_len: int, total_len: int,
                    label_idx=None) -> PoseSequence:
    """real_len random frames padded out to total_len."""
    frames = [random_frame(rng) for _ in range(real_len)]
    label = label_from_index(int(label_idx)) if label_idx is not None else None
    return pad_or_truncate(frames, total_len, label=label)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def class_names():
    return CLASS_REGISTRY
