"""Single-cloud functional wrappers around the estimation network.

These run one canonical-frame cloud through the network in eval mode and
return plain numpy containers; training code uses the torch module directly.
"""

from __future__ import annotations

import numpy as np
import torch

from ..geometry import FRAME_CANONICAL, NodeSequence, PointCloud
from .heads import TwoBranchEstimator
from .voting import PointFeatures, VotingField


def _forward(cloud: PointCloud, model: TwoBranchEstimator) -> dict[str, torch.Tensor]:
    model.eval()
    pts = torch.from_numpy(np.ascontiguousarray(cloud.points, dtype=np.float32)).unsqueeze(0)
    with torch.no_grad():
        return model(pts)


def encode_points(cloud: PointCloud, model: TwoBranchEstimator) -> PointFeatures:
    """Per-point features plus exact max-pooled global feature for one cloud."""
    out = _forward(cloud, model)
    return PointFeatures.from_per_point(out["per_point"][0].numpy())


def regress_nodes(cloud: PointCloud, model: TwoBranchEstimator) -> NodeSequence:
    """Direct-regression node estimate for one canonical cloud."""
    out = _forward(cloud, model)
    return NodeSequence(out["nodes_regression"][0].numpy().astype(np.float64), FRAME_CANONICAL)


def predict_voting(cloud: PointCloud, model: TwoBranchEstimator) -> VotingField:
    """Predicted voting field (heatmap plus unit offsets) for one cloud."""
    out = _forward(cloud, model)
    return VotingField(
        out["heatmap"][0].numpy().astype(np.float64),
        out["offsets"][0].numpy().astype(np.float64),
        model.config.vote_radius,
    )
