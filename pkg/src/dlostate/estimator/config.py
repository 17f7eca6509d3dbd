"""Configuration of the two-branch single-frame estimator."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError


@dataclass
class EstimatorConfig:
    n_points: int = 1024      # cloud size fed to the encoder (after sampling/padding)
    m_nodes: int = 50         # nodes in the predicted chain
    feature_dim: int = 256    # per-point feature width d
    vote_radius: float = 0.02  # voting radius r, canonical units
    top_k: int = 64           # votes aggregated per node
    base_radius: float = 0.05  # first grouping radius; doubles per stage
    group_size: int = 32      # neighbors per local region

    def __post_init__(self) -> None:
        if self.n_points < 4:
            raise ConfigError("n_points must be >= 4")
        if self.m_nodes < 2:
            raise ConfigError("m_nodes must be >= 2")
        if self.feature_dim < 8 or self.feature_dim % 8 != 0:
            raise ConfigError("feature_dim must be a positive multiple of 8")
        if self.vote_radius <= 0.0:
            raise ConfigError("vote_radius must be positive")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.base_radius <= 0.0:
            raise ConfigError("base_radius must be positive")
        if self.group_size < 1:
            raise ConfigError("group_size must be >= 1")
