"""End-to-end pipeline configuration with strict JSON round-tripping."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..estimator import EstimatorConfig
from ..sim import SimConfig
from ..tracking import TrackerConfig


@dataclass
class DataGenConfig:
    """Dataset generation scale and sampling density."""

    num_sequences: int = 50
    frames_per_sequence: int = 100
    steps_per_frame: int = 4
    gt_node_count: int = 50
    max_points: int = 2048

    def __post_init__(self) -> None:
        if self.num_sequences < 1 or self.frames_per_sequence < 1:
            raise ConfigError("dataset must have at least one sequence and frame")


@dataclass
class FusionConfig:
    """Diffusion fusion head: conditioning and denoiser dimensions."""

    embed_dim: int = 128      # coordinate embedding width per branch
    d_model: int = 128        # attention width per branch
    num_heads: int = 4
    denoiser_width: int = 256
    pe_dim: int = 128
    num_steps: int = 100      # diffusion steps K
    ddim_steps: int = 10
    schedule_kind: str = "cosine"

    def __post_init__(self) -> None:
        if self.num_steps < 1 or not (1 <= self.ddim_steps <= self.num_steps):
            raise ConfigError("need 1 <= ddim_steps <= num_steps")


@dataclass
class TrainConfig:
    """Hyperparameters of the three training stages."""

    est_epochs: int = 200
    est_lr: float = 0.01
    est_batch: int = 128
    fusion_epochs: int = 300
    fusion_lr: float = 1e-4
    fusion_batch: int = 128
    tracker_epochs: int = 300
    tracker_lr: float = 1e-4
    tracker_batch: int = 128
    occlusion_max: float = 0.5   # augmentation: occluded fraction uniform in [0, this]
    jitter_sigma: float = 0.002  # meters, depth jitter augmentation
    prev_noise_sigma: float = 0.002  # meters, noise on previous-frame nodes (tracker)

    def __post_init__(self) -> None:
        if not (0.0 <= self.occlusion_max < 1.0):
            raise ConfigError("occlusion_max must be in [0, 1)")


@dataclass
class EvalConfig:
    """Evaluation sweep settings."""

    occlusion_levels: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5])
    pcn_threshold_mm: float = 10.0
    track_window: int = 30       # tracked frames per window after the init frame
    spline_discard: int = 3      # nodes dropped per end before spline smoothing
    max_frames: int = 0          # per level; 0 means all val frames
    jitter_sigma: float = 0.002  # meters, sensor noise applied at eval

    def __post_init__(self) -> None:
        for lv in self.occlusion_levels:
            if not (0.0 <= lv < 1.0):
                raise ConfigError(f"occlusion level {lv} outside [0, 1)")


@dataclass
class PipelineConfig:
    """Root configuration: simulation, models, training, and evaluation."""

    sim: SimConfig = field(default_factory=SimConfig)
    data: DataGenConfig = field(default_factory=DataGenConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        if self.tracker.m_nodes != self.estimator.m_nodes:
            raise ConfigError("tracker.m_nodes must equal estimator.m_nodes")
        if abs(self.tracker.dlo_length - self.sim.length) > 1e-9:
            raise ConfigError("tracker.dlo_length must equal sim.length")
        if self.data.gt_node_count != self.estimator.m_nodes:
            raise ConfigError("data.gt_node_count must equal estimator.m_nodes")
        return self


_SECTIONS = {
    "sim": SimConfig,
    "data": DataGenConfig,
    "estimator": EstimatorConfig,
    "fusion": FusionConfig,
    "tracker": TrackerConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
}


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad values in {path}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    """Build and validate a PipelineConfig; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    unknown = sorted(set(data) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {', '.join(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise ConfigError("seed must be an integer")
        kwargs["seed"] = data["seed"]
    return PipelineConfig(**kwargs).validate()


def config_to_dict(config: PipelineConfig) -> dict:
    out = {name: dataclasses.asdict(getattr(config, name)) for name in _SECTIONS}
    out["seed"] = config.seed
    return out


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, sort_keys=True, indent=1)


def small_config(seed: int = 0) -> PipelineConfig:
    """Reduced dimensions for fast experiments and tests on CPU."""
    sim = SimConfig(length=0.4, particle_count=40, solver_iterations=25)
    # with 4x fewer input points than the full scale, the voting radius
    # grows and the vote count shrinks so each node still sees a healthy
    # in-radius voter pool
    est = EstimatorConfig(n_points=256, m_nodes=20, feature_dim=64,
                          vote_radius=0.06, top_k=12)
    fusion = FusionConfig(embed_dim=64, d_model=64, denoiser_width=128, pe_dim=64)
    tracker = TrackerConfig(
        n_points=256, m_nodes=20, feature_dim=64, agg_dim=64, d_model=64,
        denoiser_width=128, pe_dim=64, dlo_length=sim.length,
    )
    data = DataGenConfig(num_sequences=8, frames_per_sequence=20, gt_node_count=20, max_points=1024)
    train = TrainConfig(
        est_epochs=30, est_batch=16, fusion_epochs=30, fusion_batch=16,
        tracker_epochs=30, tracker_batch=16,
    )
    ev = EvalConfig(max_frames=40)
    return PipelineConfig(
        sim=sim, data=data, estimator=est, fusion=fusion,
        tracker=tracker, train=train, eval=ev, seed=seed,
    ).validate()


def desk_config(seed: int = 0) -> PipelineConfig:
    """Full-scale defaults: 0.4 m rope, 1024-point clouds, 50-node chains."""
    return PipelineConfig(seed=seed).validate()
