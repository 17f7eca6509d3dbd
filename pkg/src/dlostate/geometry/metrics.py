"""Quality metrics for predicted DLO node chains.

All inputs are meters; the error metric is reported in millimeters.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .cloud import NodeSequence, MetricsRecord

_MM = 1000.0


def node_smoothness(nodes: np.ndarray) -> float:
    """Mean squared turning angle (radians^2) over the interior nodes.

    The turning angle at node j is the angle between segments (j-1, j) and
    (j, j+1).  Zero-length segments contribute a zero angle.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.shape[0] < 3:
        return 0.0
    a = np.diff(nodes, axis=0)
    norms = np.linalg.norm(a, axis=1)
    dots = np.sum(a[:-1] * a[1:], axis=1)
    denom = norms[:-1] * norms[1:]
    cosang = np.ones_like(dots)
    ok = denom > 1e-12
    cosang[ok] = np.clip(dots[ok] / denom[ok], -1.0, 1.0)
    angles = np.arccos(cosang)
    return float(np.mean(angles**2))


def compute_metrics(
    prediction: NodeSequence,
    ground_truth: NodeSequence,
    threshold_mm: float = 10.0,
) -> MetricsRecord:
    """Score a predicted chain against ground truth.

    The ground-truth node order is ambiguous up to reversal (either DLO end
    may be labeled first), so the per-node error is evaluated against both
    orientations and the better one is used for the mean error and for the
    fraction of nodes under the threshold.  Smoothness is a property of the
    prediction alone.
    """
    pred = prediction.nodes
    gt = ground_truth.nodes
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    if prediction.frame != ground_truth.frame:
        raise ShapeError("prediction and ground truth are in different frames")

    fwd = np.linalg.norm(pred - gt, axis=1)
    rev = np.linalg.norm(pred - gt[::-1], axis=1)
    errors = fwd if fwd.mean() <= rev.mean() else rev
    mpne_mm = float(errors.mean()) * _MM
    pcn = float(np.mean(errors * _MM < threshold_mm))
    return MetricsRecord(
        mpne_mm=mpne_mm,
        pcn=pcn,
        nss=node_smoothness(pred),
        threshold_mm=threshold_mm,
    )
