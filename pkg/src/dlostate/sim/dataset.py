"""Synthetic dataset generation: simulated sequences rendered to record files.

Each sequence is one rope manipulated by two grippers toward randomly drawn
workspace targets.  Frames store the clean visible point cloud (self-occlusion
already applied by the z-buffer) plus ground truth; synthetic patch occlusion
and depth jitter are applied downstream so one stored corpus serves every
occlusion level.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..geometry import NodeSequence, PointCloud
from ..recfile import read_rec, write_rec
from .config import CameraModel, GripperWorkspace, SimConfig, default_camera
from .poses import Pose
from .render import FrameRecord, render_frame
from .rope import init_rope, sample_target_pair, step_sim

MANIFEST_NAME = "manifest.json"
_FORMAT_VERSION = 1


def default_workspaces(length: float) -> tuple[GripperWorkspace, GripperWorkspace]:
    """Gripper target boxes left/right of the central vertical plane x = 0."""
    half = 0.40 * length
    left = GripperWorkspace(
        lo=np.array([-half, -0.30 * length, 0.08 * length]),
        hi=np.array([-0.05 * length, 0.30 * length, 0.45 * length]),
    )
    right = GripperWorkspace(
        lo=np.array([0.05 * length, -0.30 * length, 0.08 * length]),
        hi=np.array([half, 0.30 * length, 0.45 * length]),
    )
    return left, right


def _camera_to_meta(camera: CameraModel) -> dict:
    return {
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "width": camera.width, "height": camera.height,
        "rotation": camera.rotation.tolist(),
        "translation": camera.translation.tolist(),
    }


def _camera_from_meta(meta: dict) -> CameraModel:
    return CameraModel(
        fx=meta["fx"], fy=meta["fy"], cx=meta["cx"], cy=meta["cy"],
        width=meta["width"], height=meta["height"],
        rotation=np.array(meta["rotation"]),
        translation=np.array(meta["translation"]),
    )


def _simulate_sequence(
    config: SimConfig,
    camera: CameraModel,
    rng: np.random.Generator,
    frames_per_sequence: int,
    steps_per_frame: int,
    gt_node_count: int,
    max_points: int,
    settle_steps: int = 25,
) -> list[FrameRecord]:
    left_ws, right_ws = default_workspaces(config.length)
    start = (
        Pose(np.array([-0.30 * config.length, 0.0, 0.30 * config.length])),
        Pose(np.array([0.30 * config.length, 0.0, 0.30 * config.length])),
    )
    state = init_rope(config, start)
    for _ in range(settle_steps):
        state = step_sim(state, state.gripper_poses, config)
    min_sep = 2.0 * config.radius
    max_sep = 0.90 * config.length
    targets = sample_target_pair(left_ws, right_ws, rng, min_sep, max_sep)
    frames = []
    for frame_idx in range(frames_per_sequence):
        for _ in range(steps_per_frame):
            reached = all(
                np.linalg.norm(state.gripper_poses[i].position - targets[i].position) < 1e-6
                for i in range(2)
            )
            if reached:
                targets = sample_target_pair(left_ws, right_ws, rng, min_sep, max_sep)
            state = step_sim(state, targets, config)
        rec = render_frame(
            state, camera, occ=None, jitter_sigma=0.0,
            radius=config.radius, gt_node_count=gt_node_count,
        )
        pts = rec.point_cloud.points
        if pts.shape[0] > max_points:
            keep = np.sort(rng.choice(pts.shape[0], max_points, replace=False))
            rec = FrameRecord(
                point_cloud=PointCloud(pts[keep]),
                gt_nodes=rec.gt_nodes,
                endpoints=rec.endpoints,
                occlusion_fraction=rec.occlusion_fraction,
                camera=rec.camera,
            )
        rec.frame_index = frame_idx
        frames.append(rec)
    return frames


def generate_dataset(
    out_dir: str | Path,
    num_sequences: int,
    frames_per_sequence: int,
    config: SimConfig | None = None,
    camera: CameraModel | None = None,
    seed: int = 0,
    steps_per_frame: int = 4,
    gt_node_count: int = 50,
    max_points: int = 2048,
    val_fraction: float = 0.2,
) -> dict:
    """Simulate, render, and store a dataset; returns the manifest dict.

    One record file per sequence; the train/val split is by sequence (a
    seeded permutation, never mixing frames of one sequence across splits).
    Every random draw derives from the master seed, so a fixed seed
    reproduces the dataset bytes exactly.
    """
    config = config or SimConfig()
    camera = camera or default_camera()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files = {}
    for seq in range(num_sequences):
        rng = np.random.default_rng(np.random.SeedSequence([seed, seq]))
        frames = _simulate_sequence(
            config, camera, rng, frames_per_sequence,
            steps_per_frame, gt_node_count, max_points,
        )
        arrays = {}
        occl = []
        for rec in frames:
            tag = f"frame{rec.frame_index:05d}"
            arrays[f"{tag}/points"] = rec.point_cloud.points
            arrays[f"{tag}/nodes"] = rec.gt_nodes.nodes
            occl.append(rec.occlusion_fraction)
        name = f"seq{seq:05d}.rec"
        write_rec(
            out / name,
            arrays,
            meta={
                "sequence_id": seq,
                "frame_count": len(frames),
                "occlusion_fractions": occl,
                "camera": _camera_to_meta(camera),
                "sim": asdict(config),
            },
        )
        files[str(seq)] = name

    split_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD157]))
    order = split_rng.permutation(num_sequences)
    n_val = max(1, int(round(val_fraction * num_sequences))) if num_sequences > 1 else 0
    val = sorted(int(s) for s in order[:n_val])
    train = sorted(int(s) for s in order[n_val:])
    manifest = {
        "format_version": _FORMAT_VERSION,
        "seed": seed,
        "num_sequences": num_sequences,
        "frames_per_sequence": frames_per_sequence,
        "steps_per_frame": steps_per_frame,
        "gt_node_count": gt_node_count,
        "max_points": max_points,
        "train_sequences": train,
        "val_sequences": val,
        "files": files,
        "sim": asdict(config),
        "camera": _camera_to_meta(camera),
    }
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    return manifest


def load_manifest(dataset_dir: str | Path) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"no {MANIFEST_NAME} under {dataset_dir}")
    with open(path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed manifest {path}: {exc}") from exc
    for key in ("format_version", "files", "train_sequences", "val_sequences"):
        if key not in manifest:
            raise DataError(f"manifest {path} missing key {key!r}")
    return manifest


def load_sequence(dataset_dir: str | Path, manifest: dict, sequence_id: int) -> list[FrameRecord]:
    """Load one stored sequence back into frame records."""
    try:
        name = manifest["files"][str(sequence_id)]
    except KeyError as exc:
        raise DataError(f"sequence {sequence_id} not in manifest") from exc
    arrays, meta = read_rec(Path(dataset_dir) / name)
    camera = _camera_from_meta(meta["camera"])
    occl = meta.get("occlusion_fractions", [])
    frames = []
    for idx in range(int(meta["frame_count"])):
        tag = f"frame{idx:05d}"
        try:
            points = arrays[f"{tag}/points"]
            nodes = arrays[f"{tag}/nodes"]
        except KeyError as exc:
            raise DataError(f"sequence file {name} missing {exc}") from exc
        gt = NodeSequence(nodes.astype(np.float64))
        frames.append(
            FrameRecord(
                point_cloud=PointCloud(points.astype(np.float64)),
                gt_nodes=gt,
                endpoints=gt.nodes[[0, -1]].copy(),
                occlusion_fraction=float(occl[idx]) if idx < len(occl) else 0.0,
                camera=camera,
                sequence_id=sequence_id,
                frame_index=idx,
            )
        )
    return frames
