#!/usr/bin/env python
"""End-to-end mini pipeline: simulate a small dataset, briefly train all
three models (estimator, fusion, tracker) at reduced scale, then run
single-frame estimation and sequence tracking on held-out frames and report
the error metrics.  Training here is only a few epochs, so the numbers are
rough -- the point is to exercise every stage in one script."""

import os
import tempfile
import time

import numpy as np

from dlostate.geometry import NodeSequence, PointCloud, compute_metrics
from dlostate.pipeline import (
    estimate_frame,
    load_models,
    small_config,
    track_sequence,
    train_estimator,
    train_fusion,
    train_tracker,
)
from dlostate.pipeline.data import TrainingData
from dlostate.sim import generate_dataset

work = tempfile.mkdtemp(prefix="dlostate-demo-")
cfg = small_config()

t0 = time.time()
generate_dataset(
    os.path.join(work, "data"),
    num_sequences=5,
    frames_per_sequence=12,
    config=cfg.sim,
    seed=42,
    gt_node_count=cfg.estimator.m_nodes,
    max_points=2 * cfg.estimator.n_points,
)
print(f"dataset: 5 sequences x 12 frames in {time.time() - t0:.0f}s")

paths = {name: os.path.join(work, f"{name}.rec") for name in ("est", "fus", "trk")}
t0 = time.time()
train_estimator(os.path.join(work, "data"), cfg, paths["est"], seed=0, epochs=8)
train_fusion(os.path.join(work, "data"), cfg, paths["est"], paths["fus"], seed=0, epochs=8)
train_tracker(os.path.join(work, "data"), cfg, paths["trk"], seed=0, epochs=8)
print(f"training (8 epochs each): {time.time() - t0:.0f}s")

models = load_models(paths["est"], paths["fus"], paths["trk"])
val = TrainingData(os.path.join(work, "data"), "val")
frames = [fr for fr in val.frames if fr.sequence == val.frames[0].sequence]

# single-frame estimation on the first held-out frame, endpoints known
rng = np.random.default_rng(1)
fr = frames[0]
nodes, branches, info = estimate_frame(
    PointCloud(fr.points), models, rng, endpoints=fr.nodes[[0, -1]]
)
rec = compute_metrics(nodes, NodeSequence(fr.nodes))
print(f"single-frame estimate: MPNE {rec.mpne_mm:.1f} mm, "
      f"PCN {rec.pcn:.2f}, NSS {rec.nss:.4f}")

# track the rest of the short sequence from a ground-truth initialization
clouds = [PointCloud(fr.points) for fr in frames]
outputs, events = track_sequence(
    clouds, models, rng, init_nodes=NodeSequence(frames[0].nodes)
)
for fr, out, ev in zip(frames, outputs, events):
    rec = compute_metrics(out, NodeSequence(fr.nodes))
    print(f"frame {ev['frame']:2d} [{ev['mode']:8s}] MPNE {rec.mpne_mm:6.1f} mm "
          f"max step {ev['max_delta_m'] * 1000:5.1f} mm")

print(f"workspace: {work}")
