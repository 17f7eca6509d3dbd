"""Shared fixtures: one tiny dataset and briefly trained checkpoints.

Session-scoped so integration-level tests reuse the same artifacts instead of
regenerating them per test.  Everything here runs at deliberately small scale;
statistical quality is covered by the acceptance suite, not these fixtures.
"""

from __future__ import annotations

import numpy as np
import pytest

from dlostate.pipeline import (
    PipelineConfig,
    fresh_models,
    load_models,
    train_estimator,
    train_fusion,
    train_tracker,
)
from dlostate.pipeline.config import small_config
from dlostate.sim import generate_dataset


@pytest.fixture(scope="session")
def tiny_config() -> PipelineConfig:
    cfg = small_config()
    cfg.data.num_sequences = 3
    cfg.data.frames_per_sequence = 6
    cfg.data.steps_per_frame = 2
    return cfg.validate()


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, tiny_config):
    out = tmp_path_factory.mktemp("dataset")
    generate_dataset(
        out,
        num_sequences=tiny_config.data.num_sequences,
        frames_per_sequence=tiny_config.data.frames_per_sequence,
        config=tiny_config.sim,
        seed=11,
        steps_per_frame=tiny_config.data.steps_per_frame,
        gt_node_count=tiny_config.data.gt_node_count,
        max_points=tiny_config.data.max_points,
    )
    return out


@pytest.fixture(scope="session")
def tiny_checkpoints(tmp_path_factory, tiny_dataset, tiny_config):
    out = tmp_path_factory.mktemp("ckpt")
    est = out / "estimator.rec"
    fus = out / "fusion.rec"
    trk = out / "tracker.rec"
    train_estimator(tiny_dataset, tiny_config, est, seed=5, epochs=2)
    train_fusion(tiny_dataset, tiny_config, est, fus, seed=5, epochs=2)
    train_tracker(tiny_dataset, tiny_config, trk, seed=5, epochs=2)
    return {"estimator": est, "fusion": fus, "tracker": trk}


@pytest.fixture(scope="session")
def tiny_models(tiny_checkpoints):
    return load_models(
        tiny_checkpoints["estimator"],
        tiny_checkpoints["fusion"],
        tiny_checkpoints["tracker"],
    )


@pytest.fixture(scope="session")
def untrained_models(tiny_config):
    return fresh_models(tiny_config, seed=3)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
