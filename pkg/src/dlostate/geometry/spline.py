"""Endpoint-constrained B-spline smoothing and uniform resampling of node chains."""

from __future__ import annotations

import numpy as np
from scipy import interpolate

from ..errors import FitError, ShapeError
from .cloud import NodeSequence, resample_polyline


def _dedupe_consecutive(points: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicates so chord-length parameters stay increasing."""
    keep = np.ones(points.shape[0], dtype=bool)
    d = np.linalg.norm(np.diff(points, axis=0), axis=1)
    keep[1:] = d > 1e-12
    return points[keep]


def spline_postprocess(
    nodes: NodeSequence,
    endpoints: np.ndarray,
    discard_k: int = 3,
    m_out: int | None = None,
) -> NodeSequence:
    """Smooth a predicted chain with a cubic B-spline pinned to known endpoints.

    The ``discard_k`` nodes nearest each end are dropped (network estimates
    there are least reliable), the known endpoints are appended in their
    place, and a smoothing cubic spline is fit through the remainder.  Any
    residual endpoint error from the smoothing fit is removed by blending a
    linear correction along the curve, after which the curve is resampled to
    ``m_out`` nodes uniformly spaced in arc length.  With fewer than 4 control
    points the fit degrades to piecewise-linear interpolation.
    """
    m = len(nodes)
    if m_out is None:
        m_out = m
    if m_out < 2:
        raise ShapeError("m_out must be >= 2")
    ends = np.asarray(endpoints, dtype=np.float64).reshape(2, 3)
    if discard_k < 0 or 2 * discard_k > m:
        raise ShapeError(f"discard_k={discard_k} invalid for {m} nodes")
    kept = nodes.nodes[discard_k : m - discard_k]
    ctrl = _dedupe_consecutive(np.vstack([ends[0], kept, ends[1]]))
    if ctrl.shape[0] < 2:
        raise FitError("fewer than 2 distinct control points")

    dense_count = max(20 * m_out, 1000)
    if ctrl.shape[0] >= 4:
        chord = np.linalg.norm(np.diff(ctrl, axis=0), axis=1)
        u = np.concatenate([[0.0], np.cumsum(chord)])
        u /= u[-1]
        # smoothing budget from the data itself: for i.i.d. per-node noise
        # the second differences of the control polygon have 6x the noise
        # variance per coordinate, so their mean squared norm / 18 estimates
        # the per-coordinate noise variance and 3 n sigma^2 is the expected
        # total squared residual of the noise-free curve
        d2 = np.diff(ctrl, n=2, axis=0)
        noise_var = float((d2 ** 2).sum(axis=1).mean()) / 18.0
        tck, _ = interpolate.splprep(ctrl.T, u=u, k=3, s=3.0 * ctrl.shape[0] * noise_var)
        t = np.linspace(0.0, 1.0, dense_count)
        dense = np.stack(interpolate.splev(t, tck), axis=1)
        # smoothing may have pulled the curve off the pinned endpoints;
        # blend the two residuals linearly so the ends are met exactly
        dense += np.outer(1.0 - t, ends[0] - dense[0]) + np.outer(t, ends[1] - dense[-1])
    else:
        dense = resample_polyline(ctrl, dense_count)

    out = resample_polyline(dense, m_out)
    out[0] = ends[0]
    out[-1] = ends[1]
    return NodeSequence(out, nodes.frame)
