"""Cross-frame tracking: diffusion over per-node displacements.

Each new frame is normalized using the previous frame's endpoint estimates,
cloud features are aggregated around the previous nodes and mixed by
self-attention into the conditioning, and the denoiser diffuses the
displacement from the previous chain to the current one.  A displacement
exceeding a fraction of the DLO length flags a tracking failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from ..errors import ConfigError
from ..geometry import (
    FRAME_CANONICAL,
    NodeSequence,
    PointCloud,
    apply_transform,
    compute_canonical_transform,
    farthest_point_sample,
)
from ..diffusion import (
    AttentionEncoder,
    ConditionFeatures,
    DenoiserNet,
    DenoiserParams,
    DiffusionSchedule,
    build_affinity,
    sample,
)
from ..estimator.backbone import PointBackbone
from .aggregate import KnnAggregator


@dataclass
class TrackerConfig:
    n_points: int = 1024       # cloud size after sampling
    m_nodes: int = 50
    feature_dim: int = 256     # backbone per-point width
    k_nn: int = 32             # neighbors aggregated per node
    agg_dim: int = 128         # aggregated feature width
    d_model: int = 128         # attention/conditioning width
    denoiser_width: int = 256
    pe_dim: int = 128
    history: int = 1           # 1: condition on prev frame; 2: plus prev delta
    failure_ratio: float = 0.15  # of dlo_length; strict > triggers failure
    dlo_length: float = 0.4    # meters
    num_steps: int = 100       # diffusion steps K
    ddim_steps: int = 10

    def __post_init__(self) -> None:
        if self.history not in (1, 2):
            raise ConfigError("history must be 1 or 2")
        if not (0.0 < self.failure_ratio < 1.0):
            raise ConfigError("failure_ratio must be in (0, 1)")
        if self.dlo_length <= 0.0:
            raise ConfigError("dlo_length must be positive")
        if self.k_nn < 1:
            raise ConfigError("k_nn must be >= 1")


@dataclass
class TrackingContext:
    """Carry-over state between tracked frames."""

    prev_nodes: NodeSequence                 # raw frame
    prev_prev_nodes: NodeSequence | None = None
    frame_index: int = 0
    reinit_count: int = 0
    last_mode: str = "init"
    extras: dict = field(default_factory=dict)


class TrackerNet(nn.Module):
    """All trainable parts of the tracker, trained end to end."""

    def __init__(self, config: TrackerConfig):
        super().__init__()
        self.config = config
        self.backbone = PointBackbone(
            n_points=config.n_points, feature_dim=config.feature_dim
        )
        self.aggregator = KnnAggregator(config.feature_dim, config.agg_dim, config.k_nn)
        cond_in = config.agg_dim + (3 if config.history == 2 else 0)
        self.cond_encoder = AttentionEncoder(cond_in, config.d_model)
        self.denoiser = DenoiserNet(
            DenoiserParams(
                cond_dim=config.d_model,
                width=config.denoiser_width,
                pe_dim=config.pe_dim,
            )
        )

    def condition(
        self,
        points: torch.Tensor,              # [B, N, 3] canonical cloud
        prev_nodes: torch.Tensor,          # [B, M, 3] canonical previous chain
        delta_hist: torch.Tensor | None = None,  # [B, M, 3] previous displacement
    ) -> torch.Tensor:
        """-> conditioning tokens [B, M, d_model]"""
        feats = self.backbone(points)
        agg = self.aggregator(points, feats, prev_nodes)
        if self.config.history == 2:
            if delta_hist is None:
                delta_hist = torch.zeros_like(prev_nodes)
            agg = torch.cat([agg, delta_hist], dim=-1)
        return self.cond_encoder(agg)


def build_tracking_condition(
    aggregated: np.ndarray,
    encoder: AttentionEncoder,
) -> ConditionFeatures:
    """Conditioning matrix from aggregated node features via self-attention."""
    arr = np.asarray(aggregated, dtype=np.float64)
    encoder.eval()
    dtype = next(encoder.parameters()).dtype
    with torch.no_grad():
        out = encoder(torch.as_tensor(arr, dtype=dtype).unsqueeze(0))[0].numpy()
    return ConditionFeatures(np.asarray(out, dtype=np.float64), "tracking")


def detect_failure(
    prev_nodes: NodeSequence,
    proposed_nodes: NodeSequence,
    dlo_length: float,
    failure_ratio: float = 0.15,
) -> bool:
    """True when any per-node displacement strictly exceeds ratio * length."""
    delta = np.linalg.norm(proposed_nodes.nodes - prev_nodes.nodes, axis=1)
    return bool(delta.max() > failure_ratio * dlo_length)


def track_step(
    cloud: PointCloud,
    context: TrackingContext,
    net: TrackerNet,
    schedule: DiffusionSchedule,
    rng: np.random.Generator,
) -> tuple[NodeSequence, dict]:
    """Track the chain into one new frame.

    Returns the proposed raw-frame chain plus diagnostics including the
    failure flag; the caller decides whether to accept it or re-initialize.
    The context is not modified.
    """
    cfg = net.config
    prev = context.prev_nodes
    transform = compute_canonical_transform(cloud, prev.nodes[0], prev.nodes[-1])
    cloud_can = apply_transform(cloud, transform)
    cloud_can = farthest_point_sample(cloud_can, cfg.n_points)
    prev_can = transform.apply_points(prev.nodes)

    net.eval()
    dtype = next(net.parameters()).dtype
    with torch.no_grad():
        pts = torch.as_tensor(cloud_can.points, dtype=dtype).unsqueeze(0)
        prev_t = torch.as_tensor(prev_can, dtype=dtype).unsqueeze(0)
        delta_hist = None
        if cfg.history == 2 and context.prev_prev_nodes is not None:
            prev2_can = transform.apply_points(context.prev_prev_nodes.nodes)
            delta_hist = torch.as_tensor(prev_can - prev2_can, dtype=dtype).unsqueeze(0)
        cond = net.condition(pts, prev_t, delta_hist)[0].numpy()

    affinity = build_affinity(prev_can)
    delta_can = sample(
        cond, affinity, net.denoiser, schedule, rng,
        m_nodes=cfg.m_nodes, method="ddim", ddim_steps=cfg.ddim_steps,
    )
    nodes_can = prev_can + delta_can
    nodes_raw = transform.invert_points(nodes_can)
    proposed = NodeSequence(nodes_raw)
    deltas = np.linalg.norm(nodes_raw - prev.nodes, axis=1)
    failed = bool(deltas.max() > cfg.failure_ratio * cfg.dlo_length)
    info = {
        "max_delta_m": float(deltas.max()),
        "mean_delta_m": float(deltas.mean()),
        "failed": failed,
        "canonical_nodes": NodeSequence(nodes_can, FRAME_CANONICAL),
        "transform": transform,
    }
    return proposed, info
