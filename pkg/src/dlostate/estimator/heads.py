"""Prediction heads and the combined two-branch estimation network.

Branch one regresses all node coordinates directly from the global feature.
Branch two predicts, per input point, a heatmap value and a unit offset
direction toward every node; votes are aggregated outside the network.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .backbone import PointBackbone
from .config import EstimatorConfig


class RegressionHead(nn.Module):
    """Global feature [B, d] -> node coordinates [B, M, 3]."""

    def __init__(self, feature_dim: int, m_nodes: int):
        super().__init__()
        self.m_nodes = m_nodes
        self.net = nn.Sequential(
            nn.Linear(feature_dim, feature_dim),
            nn.ReLU(),
            nn.Linear(feature_dim, feature_dim),
            nn.ReLU(),
            nn.Linear(feature_dim, 3 * m_nodes),
        )

    def forward(self, global_feat: torch.Tensor) -> torch.Tensor:
        return self.net(global_feat).view(-1, self.m_nodes, 3)


class VotingHead(nn.Module):
    """Per-point features [B, N, d] -> heatmap [B, N, M] and unit offsets [B, N, M, 3]."""

    def __init__(self, feature_dim: int, m_nodes: int):
        super().__init__()
        self.m_nodes = m_nodes
        hidden = max(feature_dim // 2, 8)
        self.heat = nn.Sequential(
            nn.Conv1d(feature_dim, hidden, 1),
            nn.ReLU(),
            nn.Conv1d(hidden, m_nodes, 1),
        )
        self.offset = nn.Sequential(
            nn.Conv1d(feature_dim, hidden, 1),
            nn.ReLU(),
            nn.Conv1d(hidden, 3 * m_nodes, 1),
        )

    def forward(self, per_point: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        # the heat head is a plain regression: its target (1 - dist/radius,
        # clipped at 0) is mostly exact zeros, and squashing through a
        # sigmoid lets the optimizer saturate all logits negative early,
        # after which the in-radius entries never recover.  Out-of-range
        # predictions are clipped during aggregation instead.
        feats = per_point.permute(0, 2, 1)  # [B, d, N]
        heat = self.heat(feats).permute(0, 2, 1)
        off = self.offset(feats).permute(0, 2, 1)
        off = off.view(off.shape[0], off.shape[1], self.m_nodes, 3)
        norm = torch.linalg.vector_norm(off, dim=-1, keepdim=True).clamp_min(1e-8)
        return heat, off / norm


class TwoBranchEstimator(nn.Module):
    """Backbone plus both prediction branches."""

    def __init__(self, config: EstimatorConfig):
        super().__init__()
        self.config = config
        self.backbone = PointBackbone(
            n_points=config.n_points,
            feature_dim=config.feature_dim,
            base_radius=config.base_radius,
            nsample=config.group_size,
        )
        self.regression = RegressionHead(config.feature_dim, config.m_nodes)
        self.voting = VotingHead(config.feature_dim, config.m_nodes)

    def forward(self, points: torch.Tensor) -> dict[str, torch.Tensor]:
        """points: [B, N, 3] canonical frame -> feature and prediction tensors."""
        per_point = self.backbone(points)              # [B, N, d]
        global_feat = per_point.max(dim=1).values      # exact max pool
        reg = self.regression(global_feat)             # [B, M, 3]
        heat, offsets = self.voting(per_point)         # [B, N, M], [B, N, M, 3]
        return {
            "per_point": per_point,
            "global": global_feat,
            "nodes_regression": reg,
            "heatmap": heat,
            "offsets": offsets,
        }
