#!/usr/bin/env python
"""Render a simulated rope into a partial point cloud through the pinhole
camera (surface sampling plus z-buffer self-occlusion and depth jitter),
then knock out growing occlusion fractions and plot what survives."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dlostate.sim import (
    Pose,
    SimConfig,
    default_camera,
    init_rope,
    occlude_points,
    render_frame,
    step_sim,
)

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

cfg = SimConfig(length=0.4, particle_count=40)
state = init_rope(
    cfg, (Pose(np.array([-0.13, 0.0, 0.12])), Pose(np.array([0.13, 0.0, 0.12])))
)
targets = (
    Pose(np.array([-0.08, 0.06, 0.16])),
    Pose(np.array([0.12, -0.05, 0.12])),
)
for _ in range(200):
    state = step_sim(state, targets, cfg)

camera = default_camera()
rng = np.random.default_rng(3)
frame = render_frame(state, camera, rng, gt_node_count=20, max_points=2048)
pts = frame.point_cloud.points
print(f"rendered {pts.shape[0]} visible surface points, "
      f"{frame.gt_nodes.nodes.shape[0]} ground-truth nodes")

levels = [0.0, 0.2, 0.4, 0.6]
fig, axes = plt.subplots(1, len(levels), figsize=(13, 3.2), sharex=True, sharey=True)
for ax, level in zip(axes, levels):
    kept = occlude_points(pts, camera, level, np.random.default_rng(7))
    ax.scatter(kept[:, 0], kept[:, 2], s=2)
    nodes = frame.gt_nodes.nodes
    ax.plot(nodes[:, 0], nodes[:, 2], "r-", lw=1)
    ax.set_title(f"occlusion {level:.0%}: {kept.shape[0]} pts")
    ax.set_aspect("equal")
    print(f"occlusion {level:.0%}: {kept.shape[0]:4d} points remain")
fig.suptitle("observed cloud under growing synthetic occlusion (red: ground truth)")
fig.tight_layout()
path = os.path.join(out_dir, "02_occlusion.png")
fig.savefig(path, dpi=130)
print(f"saved {path}")
