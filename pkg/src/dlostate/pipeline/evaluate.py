"""Evaluation sweeps over occlusion levels, for single frames and tracking.

Occlusion and sensor noise are re-synthesized per frame from seeds derived
deterministically from (master seed, level, sequence, frame), so the metric
payload of a report is reproducible bit for bit; wall-clock runtimes are kept
in a separate section excluded from the canonical serialization.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..geometry import (
    NodeSequence,
    PointCloud,
    compute_canonical_transform,
    compute_metrics,
    spline_postprocess,
)
from ..sim import load_manifest, load_sequence, occlude_points
from .data import TrainingData
from .models import Models
from .estimate import estimate_frame
from .track import track_sequence


@dataclass
class EvalReport:
    """Evaluation results: per-method, per-occlusion-level aggregates."""

    mode: str                      # "estimate" or "track"
    occlusion_levels: list[float]
    aggregates: dict               # method -> str(level) -> {metric: value}
    frames: list                   # per-frame rows (deterministic payload)
    config: dict                   # identifying echo (seed, split, dims)
    runtime: dict = field(default_factory=dict)  # method -> mean seconds/frame

    def canonical_json(self) -> str:
        """Deterministic payload only; excludes measured wall-clock times."""
        payload = {
            "mode": self.mode,
            "occlusion_levels": self.occlusion_levels,
            "aggregates": self.aggregates,
            "frames": self.frames,
            "config": self.config,
        }
        return json.dumps(payload, sort_keys=True)

    def to_json(self) -> str:
        payload = json.loads(self.canonical_json())
        payload["runtime"] = self.runtime
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        try:
            return cls(
                mode=data["mode"],
                occlusion_levels=data["occlusion_levels"],
                aggregates=data["aggregates"],
                frames=data["frames"],
                config=data["config"],
                runtime=data.get("runtime", {}),
            )
        except KeyError as exc:
            raise DataError(f"malformed evaluation report: missing {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        path = Path(path)
        if not path.exists():
            raise DataError(f"report not found: {path}")
        return cls.from_json(path.read_text(encoding="utf-8"))


def _round6(x: float) -> float:
    return float(np.round(x, 6))


def _frame_rng(seed: int, level_idx: int, seq: int, frame: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, level_idx, seq, frame]))


def _corrupt_frame(
    points: np.ndarray,
    camera,
    level: float,
    jitter_sigma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    pts = points
    if level > 0.0:
        pts = occlude_points(pts, camera, level, rng)
    if jitter_sigma > 0.0:
        rays = pts - camera.translation
        norms = np.linalg.norm(rays, axis=1, keepdims=True)
        rays = rays / np.where(norms < 1e-9, 1.0, norms)
        pts = pts + rays * rng.normal(0.0, jitter_sigma, (pts.shape[0], 1))
    return pts


def _aggregate(rows: list[dict]) -> dict:
    if not rows:
        return {"frames": 0}
    return {
        "frames": len(rows),
        "mpne_mm": _round6(float(np.mean([r["mpne_mm"] for r in rows]))),
        "pcn": _round6(float(np.mean([r["pcn"] for r in rows]))),
        "nss": _round6(float(np.mean([r["nss"] for r in rows]))),
    }


def evaluate(
    dataset_dir: str | Path,
    models: Models,
    mode: str = "estimate",
    occlusion_levels: tuple[float, ...] = (0.0, 0.1, 0.3, 0.5),
    seed: int = 0,
    split: str = "val",
    max_frames: int = 0,
    track_window: int = 30,
    spline_discard: int = 3,
    jitter_sigma: float = 0.002,
    pcn_threshold_mm: float = 10.0,
    compare_single: bool = True,
) -> EvalReport:
    """Score the models on a dataset split across occlusion levels.

    estimate mode scores the regression branch, the voting branch, and the
    fused output per frame (ground-truth endpoints supplied, spline
    post-processing applied to every method alike).  track mode initializes
    each window from ground truth, tracks ``track_window`` frames, scores the
    tracked frames, and (optionally) runs single-frame estimation without
    ground-truth endpoints on the same frames for comparison.
    """
    dataset_dir = str(dataset_dir)
    manifest = load_manifest(dataset_dir)
    data = TrainingData(dataset_dir, split)
    camera = data.camera

    aggregates: dict = {}
    frame_rows: list = []
    runtimes: dict[str, list] = {}

    if mode == "estimate":
        methods = ("regression", "voting", "fusion")
        for li, level in enumerate(occlusion_levels):
            rows: dict[str, list] = {meth: [] for meth in methods}
            frames = data.frames if max_frames <= 0 else data.frames[:max_frames]
            for fr in frames:
                rng = _frame_rng(seed, li, fr.sequence, fr.index)
                pts = _corrupt_frame(fr.points, camera, level, jitter_sigma, rng)
                cloud = PointCloud(pts)
                gt = NodeSequence(fr.nodes)
                endpoints = fr.nodes[[0, -1]]
                t0 = time.perf_counter()
                fused, branches, _ = estimate_frame(
                    cloud, models, rng, endpoints=endpoints,
                    postprocess=True, discard_k=spline_discard,
                )
                runtimes.setdefault("fusion", []).append(time.perf_counter() - t0)
                # branch outputs are canonical; denormalize and post-process
                # them exactly like the fused output
                info_tf = compute_canonical_transform(cloud, endpoints[0], endpoints[1])
                for meth, seq_can in (
                    ("regression", branches.nodes_regression),
                    ("voting", branches.nodes_voting),
                ):
                    raw = NodeSequence(info_tf.invert_points(seq_can.nodes))
                    raw = spline_postprocess(raw, endpoints, discard_k=spline_discard)
                    met = compute_metrics(raw, gt, pcn_threshold_mm)
                    rows[meth].append(
                        {"mpne_mm": met.mpne_mm, "pcn": met.pcn, "nss": met.nss}
                    )
                met = compute_metrics(fused, gt, pcn_threshold_mm)
                rows["fusion"].append({"mpne_mm": met.mpne_mm, "pcn": met.pcn, "nss": met.nss})
                frame_rows.append({
                    "level": level, "sequence": fr.sequence, "frame": fr.index,
                    "fusion_mpne_mm": _round6(met.mpne_mm),
                })
            for meth in methods:
                aggregates.setdefault(meth, {})[str(level)] = _aggregate(rows[meth])
    elif mode == "track":
        val_ids = manifest["val_sequences"] if split == "val" else manifest["train_sequences"]
        for li, level in enumerate(occlusion_levels):
            rows_track: list = []
            rows_single: list = []
            for seq_id in val_ids:
                frames = load_sequence(dataset_dir, manifest, seq_id)
                window = frames[: track_window + 1]
                if len(window) < 2:
                    continue
                clouds = []
                for rec in window:
                    rng = _frame_rng(seed, li, seq_id, rec.frame_index)
                    pts = _corrupt_frame(rec.point_cloud.points, camera, level, jitter_sigma, rng)
                    clouds.append(PointCloud(pts))
                rng_track = _frame_rng(seed, li, seq_id, 1_000_000)
                init = NodeSequence(window[0].gt_nodes.nodes.copy())
                t0 = time.perf_counter()
                outputs, events = track_sequence(
                    clouds, models, rng_track, init_nodes=init,
                    postprocess=True, discard_k=spline_discard,
                )
                runtimes.setdefault("tracking", []).append(
                    (time.perf_counter() - t0) / max(len(clouds) - 1, 1)
                )
                for t in range(1, len(window)):
                    met = compute_metrics(
                        outputs[t], NodeSequence(window[t].gt_nodes.nodes), pcn_threshold_mm
                    )
                    rows_track.append({"mpne_mm": met.mpne_mm, "pcn": met.pcn, "nss": met.nss})
                    frame_rows.append({
                        "level": level, "sequence": seq_id, "frame": t,
                        "mode": events[t]["mode"],
                        "track_mpne_mm": _round6(met.mpne_mm),
                    })
                if compare_single:
                    for t in range(1, len(window)):
                        rng_s = _frame_rng(seed, li, seq_id, 2_000_000 + t)
                        t0 = time.perf_counter()
                        est, _, _ = estimate_frame(
                            clouds[t], models, rng_s, endpoints=None,
                            postprocess=True, discard_k=spline_discard,
                        )
                        runtimes.setdefault("single_frame", []).append(time.perf_counter() - t0)
                        met = compute_metrics(
                            est, NodeSequence(window[t].gt_nodes.nodes), pcn_threshold_mm
                        )
                        rows_single.append(
                            {"mpne_mm": met.mpne_mm, "pcn": met.pcn, "nss": met.nss}
                        )
            aggregates.setdefault("tracking", {})[str(level)] = _aggregate(rows_track)
            if compare_single:
                aggregates.setdefault("single_frame", {})[str(level)] = _aggregate(rows_single)
    else:
        raise DataError(f"unknown evaluation mode {mode!r}")

    report = EvalReport(
        mode=mode,
        occlusion_levels=[float(lv) for lv in occlusion_levels],
        aggregates=aggregates,
        frames=frame_rows,
        config={
            "seed": seed,
            "split": split,
            "dataset_seed": manifest.get("seed"),
            "n_points": models.est_cfg.n_points,
            "m_nodes": models.est_cfg.m_nodes,
            "feature_dim": models.est_cfg.feature_dim,
            "pcn_threshold_mm": pcn_threshold_mm,
            "track_window": track_window if mode == "track" else None,
        },
        runtime={
            meth: _round6(float(np.mean(vals))) for meth, vals in runtimes.items()
        },
    )
    return report
