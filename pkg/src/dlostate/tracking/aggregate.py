"""Aggregation of cloud features around previous-frame node positions."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..errors import ShapeError
from ..estimator.backbone import index_points, pairwise_sqdist


class KnnAggregator(nn.Module):
    """Pool features of the k nearest cloud points around each query node.

    Neighbor features are concatenated with their coordinates relative to
    the node, passed through a shared MLP, and max-pooled.  Neighbors are
    picked nearest-first with ties resolved by point index, so coincident
    query nodes receive identical outputs.
    """

    def __init__(self, feature_dim: int, out_dim: int = 128, k_nn: int = 32):
        super().__init__()
        self.k_nn = k_nn
        self.out_dim = out_dim
        self.mlp = nn.Sequential(
            nn.Linear(feature_dim + 3, out_dim),
            nn.ReLU(),
            nn.Linear(out_dim, out_dim),
        )

    def forward(
        self,
        points: torch.Tensor,    # [B, N, 3]
        features: torch.Tensor,  # [B, N, d]
        nodes: torch.Tensor,     # [B, M, 3]
    ) -> torch.Tensor:
        """-> aggregated node features [B, M, out_dim]"""
        sqd = pairwise_sqdist(nodes, points)  # [B, M, N]
        k = min(self.k_nn, points.shape[1])
        _, idx = torch.sort(sqd, dim=-1, stable=True)
        idx = idx[..., :k]
        rel = index_points(points, idx) - nodes.unsqueeze(2)   # [B, M, k, 3]
        neigh = index_points(features, idx)                    # [B, M, k, d]
        h = self.mlp(torch.cat([neigh, rel], dim=-1))
        return h.max(dim=2).values


def knn_aggregate(
    features: np.ndarray,
    cloud_points: np.ndarray,
    nodes: np.ndarray,
    aggregator: KnnAggregator,
) -> np.ndarray:
    """Single-sample functional wrapper; all inputs numpy, canonical frame."""
    feats = np.asarray(features, dtype=np.float64)
    pts = np.asarray(cloud_points, dtype=np.float64)
    nds = np.asarray(getattr(nodes, "nodes", nodes), dtype=np.float64)
    if feats.ndim != 2 or pts.ndim != 2 or feats.shape[0] != pts.shape[0]:
        raise ShapeError("features (N, d) must align with cloud points (N, 3)")
    aggregator.eval()
    dtype = next(aggregator.parameters()).dtype
    with torch.no_grad():
        out = aggregator(
            torch.as_tensor(pts, dtype=dtype).unsqueeze(0),
            torch.as_tensor(feats, dtype=dtype).unsqueeze(0),
            torch.as_tensor(nds, dtype=dtype).unsqueeze(0),
        )
    return out[0].numpy().astype(np.float64)
