"""Single-frame inference: normalize, run both branches, fuse, post-process."""

from __future__ import annotations

import time

import numpy as np
import torch

from ..diffusion import build_affinity, sample
from ..estimator import EstimatorOutput, VotingField, aggregate_votes
from ..geometry import (
    CanonicalTransform,
    FRAME_CANONICAL,
    NodeSequence,
    PointCloud,
    apply_transform,
    compute_canonical_transform,
    farthest_point_sample,
    spline_postprocess,
)
from .models import Models


def _centroid_scale_transform(cloud: PointCloud) -> CanonicalTransform:
    """Mean/scale normalization with identity rotation (endpoint-free pass)."""
    pts = cloud.points
    mean = pts.mean(axis=0)
    extent = pts.max(axis=0) - pts.min(axis=0)
    scale = float(extent.max())
    if scale < 1e-9:
        scale = 1.0
    return CanonicalTransform(np.zeros(3), np.eye(3), mean, scale)


def _run_networks(
    cloud_can: PointCloud,
    models: Models,
    rng: np.random.Generator,
) -> tuple[np.ndarray, EstimatorOutput]:
    """Both branches plus diffusion fusion on a canonical cloud."""
    est = models.estimator
    est.eval()
    models.fusion.eval()
    pts = torch.from_numpy(np.ascontiguousarray(cloud_can.points, dtype=np.float32)).unsqueeze(0)
    with torch.no_grad():
        out = est(pts)
        reg = out["nodes_regression"][0].numpy().astype(np.float64)
        field = VotingField(
            out["heatmap"][0].numpy().astype(np.float64),
            out["offsets"][0].numpy().astype(np.float64),
            est.config.vote_radius,
        )
        vote, conf = aggregate_votes(cloud_can.points, field, est.config.top_k)
        cond = models.fusion.conditioner(
            torch.as_tensor(reg, dtype=torch.float32).unsqueeze(0),
            torch.as_tensor(vote, dtype=torch.float32).unsqueeze(0),
        )[0].numpy().astype(np.float64)
    # graph edges come from the regression chain: it stays smooth under
    # occlusion, whereas collapsed vote clusters would wire unrelated nodes
    # together
    affinity = build_affinity(reg)
    fused = sample(
        cond, affinity, models.fusion.denoiser, models.schedule, rng,
        m_nodes=est.config.m_nodes, method="ddim",
        ddim_steps=models.fusion_cfg.ddim_steps,
    )
    output = EstimatorOutput(
        nodes_regression=NodeSequence(reg, FRAME_CANONICAL),
        nodes_voting=NodeSequence(vote, FRAME_CANONICAL),
        confidences=conf,
        voting=field,
    )
    return fused, output


def estimate_frame(
    cloud: PointCloud,
    models: Models,
    rng: np.random.Generator,
    endpoints: np.ndarray | None = None,
    postprocess: bool = True,
    discard_k: int = 3,
    timings: dict | None = None,
) -> tuple[NodeSequence, EstimatorOutput, dict]:
    """Estimate the node chain of one raw-frame cloud.

    When endpoints are unknown the estimator runs twice: a first pass under
    plain mean/scale normalization supplies provisional endpoints (the
    terminal nodes of its fused output), and the second pass uses the full
    endpoint-anchored normalization.  Post-processing fits the
    endpoint-pinned smoothing spline.  Returns (final raw-frame chain,
    canonical branch outputs, info with transform/endpoints/timings).
    """
    t_start = time.perf_counter()
    stage: dict[str, float] = {}

    t0 = time.perf_counter()
    if endpoints is None:
        boot_tf = _centroid_scale_transform(cloud)
        boot_cloud = farthest_point_sample(
            apply_transform(cloud, boot_tf), models.est_cfg.n_points
        )
        boot_fused, _ = _run_networks(boot_cloud, models, rng)
        boot_raw = boot_tf.invert_points(boot_fused)
        endpoints = boot_raw[[0, -1]]
    else:
        endpoints = np.asarray(endpoints, dtype=np.float64).reshape(2, 3)
    if np.linalg.norm(endpoints[1] - endpoints[0]) > 1e-8:
        transform = compute_canonical_transform(cloud, endpoints[0], endpoints[1])
    else:
        # degenerate provisional endpoints (possible with an untrained
        # bootstrap pass): fall back to the endpoint-free normalization
        transform = _centroid_scale_transform(cloud)
    cloud_can = farthest_point_sample(
        apply_transform(cloud, transform), models.est_cfg.n_points
    )
    stage["normalize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fused_can, output = _run_networks(cloud_can, models, rng)
    stage["networks"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fused_raw = NodeSequence(transform.invert_points(fused_can))
    if postprocess:
        fused_raw = spline_postprocess(fused_raw, endpoints, discard_k=discard_k)
    stage["postprocess"] = time.perf_counter() - t0

    stage["total"] = time.perf_counter() - t_start
    if timings is not None:
        timings.update(stage)
    info = {
        "transform": transform,
        "endpoints": endpoints,
        "timings": stage,
        "canonical_nodes": NodeSequence(fused_can, FRAME_CANONICAL),
    }
    return fused_raw, output, info
