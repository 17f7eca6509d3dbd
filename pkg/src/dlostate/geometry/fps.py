"""Farthest point sampling for fixed-size point cloud inputs."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .cloud import PointCloud


def farthest_point_sample(cloud: PointCloud, n: int) -> PointCloud:
    """Downsample (or pad) ``cloud`` to exactly ``n`` points.

    Selection is greedy farthest-point sampling started at index 0, so the
    result is deterministic for a given input ordering.  Ties in the farthest
    distance resolve to the lowest index.  When the cloud has fewer than ``n``
    points the input is repeated cyclically instead of sampled.
    """
    if n < 1:
        raise ShapeError("sample size must be >= 1")
    pts = cloud.points
    count = pts.shape[0]
    if count == 0:
        raise ShapeError("cannot sample from an empty cloud")
    if count <= n:
        idx = np.resize(np.arange(count), n)
        return PointCloud(pts[idx].copy(), cloud.frame)
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = 0
    # squared distance from every point to its nearest chosen point
    best = np.sum((pts - pts[0]) ** 2, axis=1)
    for i in range(1, n):
        nxt = int(np.argmax(best))  # argmax takes the first maximum
        chosen[i] = nxt
        d = np.sum((pts - pts[nxt]) ** 2, axis=1)
        np.minimum(best, d, out=best)
    return PointCloud(pts[chosen].copy(), cloud.frame)
