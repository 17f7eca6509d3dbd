"""Orchestration: configs, model bundles, inference, training, evaluation."""

from .config import (
    DataGenConfig,
    EvalConfig,
    FusionConfig,
    PipelineConfig,
    TrainConfig,
    config_from_dict,
    config_to_dict,
    desk_config,
    load_config,
    save_config,
    small_config,
)
from .data import TrainingData
from .estimate import estimate_frame
from .evaluate import EvalReport, evaluate
from .models import (
    FusionModel,
    Models,
    fresh_models,
    load_estimator,
    load_fusion,
    load_models,
    load_tracker,
    save_checkpoint,
)
from .track import track_sequence
from .train import train_estimator, train_fusion, train_tracker

__all__ = [
    "DataGenConfig",
    "EvalConfig",
    "FusionConfig",
    "PipelineConfig",
    "TrainConfig",
    "config_from_dict",
    "config_to_dict",
    "desk_config",
    "load_config",
    "save_config",
    "small_config",
    "TrainingData",
    "estimate_frame",
    "EvalReport",
    "evaluate",
    "FusionModel",
    "Models",
    "fresh_models",
    "load_estimator",
    "load_fusion",
    "load_models",
    "load_tracker",
    "save_checkpoint",
    "track_sequence",
    "train_estimator",
    "train_fusion",
    "train_tracker",
]
