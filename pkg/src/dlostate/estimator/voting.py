"""Point-to-node voting: target construction and vote aggregation.

Every input point casts a vote for every node: a heatmap value decaying
linearly with distance inside the voting radius, and a unit direction from
the point toward the node.  A point's implied node position is recovered by
walking the offset for the heatmap-implied distance; aggregation averages the
top-scoring votes per node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateVoteError, ShapeError
from ..geometry import FRAME_CANONICAL, NodeSequence, PointCloud

_COINCIDENT_EPS = 1e-12


@dataclass
class PointFeatures:
    """Per-point encoder features plus the max-pooled global descriptor."""

    per_point: np.ndarray       # (N, d)
    global_feature: np.ndarray  # (d,), channel-wise max of per_point

    @classmethod
    def from_per_point(cls, per_point: np.ndarray) -> "PointFeatures":
        per_point = np.asarray(per_point)
        if per_point.ndim != 2:
            raise ShapeError("per-point features must be (N, d)")
        return cls(per_point, per_point.max(axis=0))


@dataclass
class VotingField:
    """Heatmap and offset votes from N points to M nodes."""

    heatmap: np.ndarray   # (N, M); targets lie in [0, 1], predictions may
                          # stray slightly and are clipped during aggregation
    offsets: np.ndarray   # (N, M, 3) unit directions point -> node
    radius: float
    valid: np.ndarray | None = None  # (N, M) False where a point coincides with a node

    def __post_init__(self) -> None:
        self.heatmap = np.asarray(self.heatmap, dtype=np.float64)
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        if self.heatmap.ndim != 2:
            raise ShapeError("heatmap must be (N, M)")
        if self.offsets.shape != (*self.heatmap.shape, 3):
            raise ShapeError("offsets must be (N, M, 3)")
        if self.radius <= 0.0:
            raise ShapeError("radius must be positive")


@dataclass
class EstimatorOutput:
    """Branch outputs of the single-frame estimator, canonical frame."""

    nodes_regression: NodeSequence
    nodes_voting: NodeSequence
    confidences: np.ndarray  # (M,), summed selected heatmap weight per node
    voting: VotingField | None = None


def voting_targets(
    cloud: PointCloud | np.ndarray,
    nodes: NodeSequence | np.ndarray,
    radius: float,
) -> VotingField:
    """Ground-truth voting field for a cloud and node chain (canonical frame).

    Heatmap: max(0, 1 - dist / radius).  Offsets: unit vectors from point to
    node; where a point coincides with a node the heatmap is exactly 1, the
    offset is zeroed, and the validity mask excludes it from offset losses.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    nds = nodes.nodes if isinstance(nodes, NodeSequence) else np.asarray(nodes, dtype=np.float64)
    diff = nds[None, :, :] - pts[:, None, :]          # (N, M, 3)
    dist = np.linalg.norm(diff, axis=-1)              # (N, M)
    heat = np.maximum(0.0, 1.0 - dist / radius)
    valid = dist > _COINCIDENT_EPS
    safe = np.where(valid, dist, 1.0)
    offsets = np.where(valid[..., None], diff / safe[..., None], 0.0)
    return VotingField(heat, offsets, radius, valid)


def aggregate_votes(
    cloud: PointCloud | np.ndarray,
    field: VotingField,
    top_k: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Combine votes into node positions.

    The heatmap is clipped to [0, 1] first (predicted fields may stray out
    of range).  Each point's implied position for node j is x_i + radius *
    (1 - H_ij) * U_ij.  Per node, the top_k votes by heatmap value (ties to
    the lower point index) are averaged with heatmap weights.  Nodes whose selected
    weights sum below 1e-8 fall back to the unweighted mean of the selected
    positions with confidence 0.  Returns (nodes (M, 3), confidences (M,)).
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    n, m = field.heatmap.shape
    if n == 0:
        raise DegenerateVoteError("cannot aggregate votes from an empty cloud")
    if top_k < 1:
        raise DegenerateVoteError("top_k must be >= 1")
    if pts.shape[0] != n:
        raise ShapeError(f"cloud has {pts.shape[0]} points but field expects {n}")
    k = min(top_k, n)
    heat = np.clip(field.heatmap, 0.0, 1.0)
    est = pts[:, None, :] + field.radius * (1.0 - heat[..., None]) * field.offsets
    order = np.argsort(-heat, axis=0, kind="stable")[:k]            # (k, M)
    cols = np.arange(m)
    weights = heat[order, cols]                                     # (k, M)
    selected = est[order, cols]                                     # (k, M, 3)
    wsum = weights.sum(axis=0)                                      # (M,)
    degenerate = wsum < 1e-8
    safe = np.where(degenerate, 1.0, wsum)
    nodes = np.einsum("km,kmc->mc", weights, selected) / safe[:, None]
    if np.any(degenerate):
        nodes[degenerate] = selected[:, degenerate].mean(axis=0)
    confidences = np.where(degenerate, 0.0, wsum)
    return nodes, confidences


def aggregate_to_sequence(
    cloud: PointCloud,
    field: VotingField,
    top_k: int,
) -> tuple[NodeSequence, np.ndarray]:
    """aggregate_votes wrapped into a canonical-frame node sequence."""
    nodes, conf = aggregate_votes(cloud, field, top_k)
    return NodeSequence(nodes, FRAME_CANONICAL), conf
