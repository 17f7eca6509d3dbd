"""Node affinity graph used by the graph-convolutional denoiser."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


@dataclass
class AffinityMatrix:
    """Symmetrically normalized node adjacency D^-1/2 (A + I) D^-1/2."""

    matrix: np.ndarray     # (M, M), symmetric
    threshold: float       # proximity threshold used to build edges
    adjacency: np.ndarray  # (M, M) bool, pre-normalization edges without self-loops

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ShapeError("affinity matrix must be square")


def build_affinity(nodes, threshold: float | None = None) -> AffinityMatrix:
    """Affinity over a node chain: chain edges plus proximity edges.

    Nodes i, j are connected when |i - j| = 1 or when their distance is below
    the threshold (default 1.5x the mean consecutive-node spacing).  Self
    loops are added and the result normalized symmetrically, so the matrix is
    symmetric with eigenvalues bounded by 1 in magnitude.
    """
    pts = np.asarray(getattr(nodes, "nodes", nodes), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
        raise ShapeError("nodes must be (M, 3) with M >= 2")
    m = pts.shape[0]
    spacing = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if threshold is None:
        threshold = 1.5 * float(spacing.mean())
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    adj = dist < threshold
    chain = np.abs(np.subtract.outer(np.arange(m), np.arange(m))) == 1
    adj = (adj | chain) & ~np.eye(m, dtype=bool)
    with_loops = adj.astype(np.float64) + np.eye(m)
    deg = with_loops.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    matrix = with_loops * inv_sqrt[:, None] * inv_sqrt[None, :]
    return AffinityMatrix(matrix, float(threshold), adj)
