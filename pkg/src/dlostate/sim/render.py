"""Synthetic depth-camera observation of the rope.

The rope tube is rasterized into a z-buffered segmentation mask (so the rope
occludes itself naturally), rectangular occlusion patches are cut out of the
mask, and the surviving pixels are back-projected into a world-frame point
cloud with optional depth jitter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyObservationError, ShapeError
from ..geometry import NodeSequence, PointCloud, resample_polyline
from .config import CameraModel, OcclusionSpec
from .rope import SimState

_MIN_DEPTH = 0.05  # meters, reject points at or behind the camera plane


@dataclass
class FrameRecord:
    """One rendered observation with its ground truth."""

    point_cloud: PointCloud          # world frame, visible rope surface
    gt_nodes: NodeSequence           # world frame, uniform arc-length nodes
    endpoints: np.ndarray            # (2, 3) grasp points
    occlusion_fraction: float        # realized fraction of DLO pixels removed
    camera: CameraModel
    sequence_id: int = -1
    frame_index: int = -1
    extras: dict = field(default_factory=dict)


def _rasterize_tube(
    samples: np.ndarray,
    radius: float,
    camera: CameraModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Paint tube cross-section disks into a depth buffer.

    Returns (mask, zbuffer); the z-buffer holds the nearest tube-axis depth
    per painted pixel and +inf elsewhere.
    """
    h, w = camera.height, camera.width
    zbuf = np.full((h, w), np.inf)
    uv, z = camera.project(samples)
    valid = z > _MIN_DEPTH
    uv, z = uv[valid], z[valid]
    if uv.shape[0] == 0:
        return zbuf < np.inf, zbuf
    px_radius = camera.fx * radius / z
    inside = (
        (uv[:, 0] > -px_radius)
        & (uv[:, 0] < w + px_radius)
        & (uv[:, 1] > -px_radius)
        & (uv[:, 1] < h + px_radius)
    )
    uv, z, px_radius = uv[inside], z[inside], px_radius[inside]
    for (u, v), depth, pr in zip(uv, z, px_radius):
        r = max(1, int(np.ceil(pr)))
        u0, u1 = max(0, int(u) - r), min(w, int(u) + r + 2)
        v0, v1 = max(0, int(v) - r), min(h, int(v) + r + 2)
        if u0 >= u1 or v0 >= v1:
            continue
        uu, vv = np.meshgrid(np.arange(u0, u1), np.arange(v0, v1))
        disk = (uu - u) ** 2 + (vv - v) ** 2 <= pr * pr
        tile = zbuf[v0:v1, u0:u1]
        np.minimum(tile, np.where(disk, depth, np.inf), out=tile)
    return zbuf < np.inf, zbuf


def apply_occlusion(mask: np.ndarray, occ: OcclusionSpec) -> np.ndarray:
    """Remove rectangular patches from a boolean DLO mask.

    Patches grow ring by ring (one pixel per side per step) around centers
    drawn from the original mask, forming a removal order that depends only
    on the mask and the seed, never on the target fraction.  The applied
    removal is the shortest prefix of that order reaching the target, so for
    a fixed seed a higher target always removes a superset of pixels, and the
    one-pixel ring granularity keeps the realized fraction within a few
    pixels of the target.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ShapeError("mask must be 2-D")
    total = int(mask.sum())
    surviving = mask.copy()
    if occ.target_fraction <= 0.0 or total == 0:
        return surviving
    goal = (occ.target_fraction - 0.02) * total
    rng = np.random.default_rng(occ.rng_seed)
    flat = np.flatnonzero(mask)
    h, w = mask.shape
    removed = 0
    unit = max(1.0, total * 0.9 / occ.patch_count)
    for _ in range(occ.patch_count * 20):
        if removed >= goal:
            break
        center = flat[int(rng.integers(flat.size))]
        cv, cu = divmod(int(center), w)
        aspect = float(rng.uniform(0.5, 2.0))
        patch_removed = 0
        step = 0
        while removed < goal and patch_removed < unit:
            step += 1
            ru = max(1, int(round(step * aspect)))
            rv = step
            v0, v1 = max(0, cv - rv), min(h, cv + rv + 1)
            u0, u1 = max(0, cu - ru), min(w, cu + ru + 1)
            prev_v0, prev_v1 = max(0, cv - rv + 1), min(h, cv + rv)
            prev_u0 = max(0, cu - max(1, int(round((step - 1) * aspect))))
            prev_u1 = min(w, cu + max(1, int(round((step - 1) * aspect))) + 1)
            if step == 1:
                slices = [(slice(v0, v1), slice(u0, u1))]
            else:
                # only the ring beyond the previous rectangle is new
                slices = [
                    (slice(v0, prev_v0), slice(u0, u1)),
                    (slice(prev_v1, v1), slice(u0, u1)),
                    (slice(prev_v0, prev_v1), slice(u0, prev_u0)),
                    (slice(prev_v0, prev_v1), slice(prev_u1, u1)),
                ]
            newly = 0
            for sv, su in slices:
                tile = surviving[sv, su]
                n = int(tile.sum())
                if n:
                    tile[:] = False
                    newly += n
            removed += newly
            patch_removed += newly
            if v0 == 0 and u0 == 0 and v1 == h and u1 == w:
                break  # patch covers the image
    return surviving


def render_frame(
    state: SimState,
    camera: CameraModel,
    occ: OcclusionSpec | None = None,
    jitter_sigma: float = 0.0,
    radius: float = 0.005,
    gt_node_count: int = 50,
    rng: np.random.Generator | None = None,
) -> FrameRecord:
    """Render the rope into a partial point cloud plus ground truth.

    The tube surface is rasterized with a z-buffer (self-occlusion), patches
    are removed per ``occ``, surviving pixels are back-projected at their
    buffered depth, and zero-mean Gaussian depth jitter of ``jitter_sigma``
    meters is added along the viewing ray.  Ground-truth nodes are the
    particle chain resampled uniformly in arc length.  Raises
    EmptyObservationError when nothing of the rope remains visible.
    """
    _, z_all = camera.project(state.particles)
    if not np.any(z_all > _MIN_DEPTH):
        raise EmptyObservationError("rope is entirely behind the camera")

    # sample the tube axis densely enough that disks overlap
    approx = max(state.particles.shape[0], int(np.ceil(state.total_length() / max(radius * 0.5, 1e-4))))
    samples = resample_polyline(state.particles, min(approx, 4000))
    mask, zbuf = _rasterize_tube(samples, radius, camera)
    visible = int(mask.sum())
    if visible == 0:
        raise EmptyObservationError("rope does not project into the image")

    if occ is not None:
        surviving = apply_occlusion(mask, occ)
        realized = 1.0 - surviving.sum() / visible
    else:
        surviving = mask
        realized = 0.0
    vs, us = np.nonzero(surviving)
    if vs.size == 0:
        raise EmptyObservationError("occlusion removed all rope pixels")
    depth = zbuf[vs, us]
    if jitter_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        depth = depth + rng.normal(0.0, jitter_sigma, depth.shape)
    points = camera.backproject(us + 0.5, vs + 0.5, depth)

    gt = resample_polyline(state.particles, gt_node_count)
    return FrameRecord(
        point_cloud=PointCloud(points),
        gt_nodes=NodeSequence(gt),
        endpoints=state.particles[[0, -1]].copy(),
        occlusion_fraction=float(realized),
        camera=camera,
    )


def occlude_points(
    points: np.ndarray,
    camera: CameraModel,
    fraction: float,
    rng: np.random.Generator,
    max_patches: int = 2,
) -> np.ndarray:
    """Remove contiguous image-space blobs from a stored point cloud.

    Used to re-synthesize occlusion at an exact fraction on clean stored
    frames: points nearest (in pixel space) to one or two anchor points are
    removed until ``fraction`` of the points are gone.  Returns the surviving
    points; at least one point always survives.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    drop_total = min(int(round(fraction * n)), n - 1)
    if drop_total <= 0:
        return points.copy()
    uv, _ = camera.project(points)
    patches = int(rng.integers(1, max_patches + 1))
    shares = np.full(patches, drop_total // patches)
    shares[: drop_total % patches] += 1
    alive = np.ones(n, dtype=bool)
    for share in shares:
        if share <= 0:
            continue
        alive_idx = np.flatnonzero(alive)
        anchor = alive_idx[int(rng.integers(alive_idx.size))]
        d = np.linalg.norm(uv[alive_idx] - uv[anchor], axis=1)
        order = np.argsort(d, kind="stable")
        drop = alive_idx[order[: min(share, alive_idx.size - 1)]]
        alive[drop] = False
    return points[alive]
