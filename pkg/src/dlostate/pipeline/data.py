"""In-memory training data with per-epoch augmentation.

Stored frames hold clean visible point clouds; each time a batch is built,
occlusion blobs, depth jitter along the viewing ray, optional chain-direction
flips, normalization, sampling to a fixed cloud size, and voting targets are
re-synthesized from scratch, so every epoch sees new corruptions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..estimator import EstimatorConfig, voting_targets
from ..geometry import PointCloud, compute_canonical_transform, farthest_point_sample
from ..sim import CameraModel, load_manifest, load_sequence, occlude_points
from ..tracking import TrackerConfig
from ..diffusion import build_affinity


@dataclass
class _Frame:
    points: np.ndarray  # (n, 3) float64, clean visible cloud
    nodes: np.ndarray   # (M, 3) float64 ground truth
    sequence: int
    index: int


class TrainingData:
    """All frames of one dataset split, loaded once."""

    def __init__(self, dataset_dir: str, split: str = "train"):
        manifest = load_manifest(dataset_dir)
        key = {"train": "train_sequences", "val": "val_sequences"}.get(split)
        if key is None:
            raise DataError(f"unknown split {split!r}")
        self.manifest = manifest
        self.split = split
        self.frames: list[_Frame] = []
        self.pairs: list[tuple[int, int]] = []  # (frame idx of t-1, frame idx of t)
        self.camera: CameraModel | None = None
        for seq_id in manifest[key]:
            frames = load_sequence(dataset_dir, manifest, seq_id)
            if self.camera is None and frames:
                self.camera = frames[0].camera
            base = len(self.frames)
            for rec in frames:
                self.frames.append(
                    _Frame(rec.point_cloud.points, rec.gt_nodes.nodes, seq_id, rec.frame_index)
                )
            for t in range(1, len(frames)):
                self.pairs.append((base + t - 1, base + t))
        if not self.frames:
            raise DataError(f"split {split!r} of {dataset_dir} holds no frames")

    def __len__(self) -> int:
        return len(self.frames)

    def _corrupt(
        self,
        points: np.ndarray,
        rng: np.random.Generator,
        occlusion_max: float,
        jitter_sigma: float,
        fixed_occlusion: float | None = None,
    ) -> np.ndarray:
        """Occlusion blobs plus depth jitter along the camera ray."""
        pts = points
        frac = fixed_occlusion
        if frac is None:
            frac = float(rng.uniform(0.0, occlusion_max)) if occlusion_max > 0 else 0.0
        if frac > 0.0:
            pts = occlude_points(pts, self.camera, frac, rng)
        if jitter_sigma > 0.0:
            rays = pts - self.camera.translation
            norms = np.linalg.norm(rays, axis=1, keepdims=True)
            rays = rays / np.where(norms < 1e-9, 1.0, norms)
            pts = pts + rays * rng.normal(0.0, jitter_sigma, (pts.shape[0], 1))
        return pts

    def estimation_batch(
        self,
        indices: np.ndarray,
        rng: np.random.Generator,
        est_cfg: EstimatorConfig,
        occlusion_max: float = 0.5,
        jitter_sigma: float = 0.002,
        augment: bool = True,
        flip: bool = True,
    ) -> dict[str, np.ndarray]:
        """Canonical clouds, node targets, and voting targets for a batch."""
        b = len(indices)
        n, m = est_cfg.n_points, est_cfg.m_nodes
        out = {
            "points": np.empty((b, n, 3), dtype=np.float32),
            "nodes": np.empty((b, m, 3), dtype=np.float32),
            "heat": np.empty((b, n, m), dtype=np.float32),
            "offsets": np.empty((b, n, m, 3), dtype=np.float32),
            "valid": np.empty((b, n, m), dtype=bool),
        }
        for row, idx in enumerate(indices):
            frame = self.frames[int(idx)]
            pts = frame.points
            gt = frame.nodes
            if augment:
                pts = self._corrupt(pts, rng, occlusion_max, jitter_sigma)
                if flip and rng.random() < 0.5:
                    gt = gt[::-1]
            tf = compute_canonical_transform(PointCloud(pts), gt[0], gt[-1])
            cloud_can = farthest_point_sample(PointCloud(tf.apply_points(pts)), n)
            gt_can = tf.apply_points(gt)
            field = voting_targets(cloud_can.points, gt_can, est_cfg.vote_radius)
            out["points"][row] = cloud_can.points
            out["nodes"][row] = gt_can
            out["heat"][row] = field.heatmap
            out["offsets"][row] = field.offsets
            out["valid"][row] = field.valid
        return out

    def tracking_batch(
        self,
        pair_indices: np.ndarray,
        rng: np.random.Generator,
        tracker_cfg: TrackerConfig,
        occlusion_max: float = 0.5,
        jitter_sigma: float = 0.002,
        prev_noise_sigma: float = 0.002,
        augment: bool = True,
    ) -> dict[str, np.ndarray]:
        """Consecutive-frame samples: cloud, previous chain, target delta."""
        b = len(pair_indices)
        n, m = tracker_cfg.n_points, tracker_cfg.m_nodes
        out = {
            "points": np.empty((b, n, 3), dtype=np.float32),
            "prev": np.empty((b, m, 3), dtype=np.float32),
            "delta": np.empty((b, m, 3), dtype=np.float32),
            "delta_hist": np.zeros((b, m, 3), dtype=np.float32),
            "affinity": np.empty((b, m, m), dtype=np.float32),
        }
        for row, pidx in enumerate(pair_indices):
            prev_f, cur_f = self.pairs[int(pidx)]
            prev_nodes = self.frames[prev_f].nodes.copy()
            cur = self.frames[cur_f]
            if augment and prev_noise_sigma > 0.0:
                # previous chain plays the role of an imperfect estimate
                prev_nodes += rng.normal(0.0, prev_noise_sigma, prev_nodes.shape)
            pts = cur.points
            if augment:
                pts = self._corrupt(pts, rng, occlusion_max, jitter_sigma)
            tf = compute_canonical_transform(PointCloud(pts), prev_nodes[0], prev_nodes[-1])
            cloud_can = farthest_point_sample(PointCloud(tf.apply_points(pts)), n)
            prev_can = tf.apply_points(prev_nodes)
            cur_can = tf.apply_points(cur.nodes)
            if tracker_cfg.history == 2 and prev_f - 1 >= 0:
                prev2 = self.frames[prev_f - 1]
                same_seq = prev2.sequence == cur.sequence and prev2.index == cur.index - 2
                if same_seq:
                    out["delta_hist"][row] = prev_can - tf.apply_points(prev2.nodes)
            out["points"][row] = cloud_can.points
            out["prev"][row] = prev_can
            out["delta"][row] = cur_can - prev_can
            out["affinity"][row] = build_affinity(prev_can).matrix
        return out
