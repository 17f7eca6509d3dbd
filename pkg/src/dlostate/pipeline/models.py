"""Model construction and checkpoint persistence.

Checkpoints use the same single-file array container as datasets: the JSON
header carries the architecture config (so loading can rebuild identical
module shapes and validate compatibility) and the binary section carries the
flattened state dict as float32 arrays.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from ..diffusion import (
    DenoiserNet,
    DenoiserParams,
    DiffusionSchedule,
    FusionConditioner,
    make_schedule,
)
from ..errors import DataError
from ..estimator import EstimatorConfig, TwoBranchEstimator
from ..recfile import read_rec, write_rec
from ..tracking import TrackerConfig, TrackerNet
from .config import FusionConfig


class FusionModel(nn.Module):
    """Conditioner plus denoiser of the diffusion fusion stage."""

    def __init__(self, config: FusionConfig):
        super().__init__()
        self.config = config
        self.conditioner = FusionConditioner(
            embed_dim=config.embed_dim,
            d_model=config.d_model,
            num_heads=config.num_heads,
        )
        self.denoiser = DenoiserNet(
            DenoiserParams(
                cond_dim=self.conditioner.out_dim,
                width=config.denoiser_width,
                pe_dim=config.pe_dim,
            )
        )

    def schedule(self) -> DiffusionSchedule:
        return make_schedule(self.config.num_steps, self.config.schedule_kind)


@dataclass
class Models:
    """Everything needed for inference; tracker parts optional."""

    estimator: TwoBranchEstimator
    fusion: FusionModel
    est_cfg: EstimatorConfig
    fusion_cfg: FusionConfig
    schedule: DiffusionSchedule
    tracker: TrackerNet | None = None
    tracker_cfg: TrackerConfig | None = None
    tracker_schedule: DiffusionSchedule | None = None


def fresh_models(config, with_tracker: bool = True, seed: int = 0) -> Models:
    """Build untrained models from a pipeline configuration.

    Weight initialization is seeded so repeated construction is repeatable.
    """
    torch.manual_seed(seed)
    estimator = TwoBranchEstimator(config.estimator)
    fusion = FusionModel(config.fusion)
    estimator.eval()
    fusion.eval()
    models = Models(
        estimator=estimator,
        fusion=fusion,
        est_cfg=config.estimator,
        fusion_cfg=config.fusion,
        schedule=fusion.schedule(),
    )
    if with_tracker:
        tracker = TrackerNet(config.tracker)
        tracker.eval()
        models.tracker = tracker
        models.tracker_cfg = config.tracker
        models.tracker_schedule = make_schedule(config.tracker.num_steps, "cosine")
    return models


def _state_to_arrays(module: nn.Module) -> dict[str, np.ndarray]:
    return {
        key: tensor.detach().cpu().numpy().astype(np.float32)
        for key, tensor in module.state_dict().items()
    }


def _load_state_from_arrays(module: nn.Module, arrays: dict[str, np.ndarray], path) -> None:
    template = module.state_dict()
    missing = sorted(set(template) - set(arrays))
    extra = sorted(set(arrays) - set(template))
    if missing or extra:
        raise DataError(
            f"checkpoint {path} incompatible: missing={missing[:3]} extra={extra[:3]}"
        )
    state = {}
    for key, ref in template.items():
        arr = arrays[key]
        if tuple(arr.shape) != tuple(ref.shape):
            raise DataError(
                f"checkpoint {path}: shape mismatch at {key}: "
                f"{tuple(arr.shape)} vs {tuple(ref.shape)}"
            )
        state[key] = torch.as_tensor(arr).to(ref.dtype)
    module.load_state_dict(state)


def save_checkpoint(
    path: str | Path,
    module: nn.Module,
    kind: str,
    config,
    history: dict | None = None,
) -> None:
    """Persist a model with its architecture config and training history."""
    meta = {
        "kind": kind,
        "config": dataclasses.asdict(config),
        "history": history or {},
    }
    write_rec(path, _state_to_arrays(module), meta=meta)


def _read_checkpoint(path: str | Path, expected_kind: str) -> tuple[dict, dict]:
    arrays, meta = read_rec(path)
    if meta.get("kind") != expected_kind:
        raise DataError(
            f"checkpoint {path} holds {meta.get('kind')!r}, expected {expected_kind!r}"
        )
    if "config" not in meta:
        raise DataError(f"checkpoint {path} lacks a config echo")
    return arrays, meta


def load_estimator(path: str | Path) -> tuple[TwoBranchEstimator, dict]:
    arrays, meta = _read_checkpoint(path, "estimator")
    model = TwoBranchEstimator(EstimatorConfig(**meta["config"]))
    _load_state_from_arrays(model, arrays, path)
    model.eval()
    return model, meta


def load_fusion(path: str | Path) -> tuple[FusionModel, dict]:
    arrays, meta = _read_checkpoint(path, "fusion")
    model = FusionModel(FusionConfig(**meta["config"]))
    _load_state_from_arrays(model, arrays, path)
    model.eval()
    return model, meta


def load_tracker(path: str | Path) -> tuple[TrackerNet, dict]:
    arrays, meta = _read_checkpoint(path, "tracker")
    model = TrackerNet(TrackerConfig(**meta["config"]))
    _load_state_from_arrays(model, arrays, path)
    model.eval()
    return model, meta


def load_models(
    est_path: str | Path,
    fusion_path: str | Path,
    tracker_path: str | Path | None = None,
) -> Models:
    estimator, _ = load_estimator(est_path)
    fusion, _ = load_fusion(fusion_path)
    models = Models(
        estimator=estimator,
        fusion=fusion,
        est_cfg=estimator.config,
        fusion_cfg=fusion.config,
        schedule=fusion.schedule(),
    )
    if tracker_path is not None:
        tracker, _ = load_tracker(tracker_path)
        models.tracker = tracker
        models.tracker_cfg = tracker.config
        models.tracker_schedule = make_schedule(tracker.config.num_steps, "cosine")
    return models
