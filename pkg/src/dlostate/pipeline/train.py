"""Training loops for the three model stages.

Stage one trains the two-branch estimator on both losses jointly.  Stage two
freezes the branches and trains the fusion conditioner and denoiser on the
diffusion loss against ground-truth chains.  Stage three trains the tracker
end to end on consecutive-frame displacement diffusion.  All stages decay
the learning rate on a cosine and fail loudly on non-finite losses.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from ..diffusion import build_affinity, diffusion_loss, make_schedule
from ..errors import NonFiniteLossError
from ..estimator import TwoBranchEstimator, aggregate_votes, VotingField, estimation_loss
from ..tracking import TrackerNet
from .config import PipelineConfig
from .data import TrainingData
from .models import FusionModel, load_estimator, save_checkpoint


def _check_finite(loss: torch.Tensor, stage: str) -> None:
    if not bool(torch.isfinite(loss)):
        raise NonFiniteLossError(f"{stage} loss became non-finite")


def _batches(count: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        chunk = order[start : start + batch_size]
        if len(chunk) > 0:
            yield chunk


def train_estimator(
    dataset_dir: str | Path,
    config: PipelineConfig,
    out_path: str | Path,
    seed: int | None = None,
    epochs: int | None = None,
    log=None,
) -> dict:
    """Train the two-branch estimator; writes a checkpoint, returns history."""
    seed = config.seed if seed is None else seed
    epochs = config.train.est_epochs if epochs is None else epochs
    data = TrainingData(str(dataset_dir), "train")
    torch.manual_seed(seed)
    model = TwoBranchEstimator(config.estimator)
    opt = torch.optim.Adam(model.parameters(), lr=config.train.est_lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(epochs, 1))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    history: dict = {"loss": [], "regression": [], "voting": []}
    model.train()
    for epoch in range(epochs):
        sums = {"loss": 0.0, "regression": 0.0, "voting": 0.0}
        count = 0
        for chunk in _batches(len(data), config.train.est_batch, rng):
            arrays = data.estimation_batch(
                chunk, rng, config.estimator,
                occlusion_max=config.train.occlusion_max,
                jitter_sigma=config.train.jitter_sigma,
            )
            pts = torch.from_numpy(arrays["points"])
            out = model(pts)
            loss, parts = estimation_loss(
                out["nodes_regression"], torch.from_numpy(arrays["nodes"]),
                out["heatmap"], out["offsets"],
                torch.from_numpy(arrays["heat"]), torch.from_numpy(arrays["offsets"]),
                torch.from_numpy(arrays["valid"]),
            )
            _check_finite(loss, "estimator")
            opt.zero_grad()
            loss.backward()
            opt.step()
            sums["loss"] += parts["total"]
            sums["regression"] += parts["regression"]
            sums["voting"] += parts["voting"]
            count += 1
        sched.step()
        for key in sums:
            history[key if key != "loss" else "loss"].append(sums[key] / max(count, 1))
        if log:
            log(f"estimator epoch {epoch + 1}/{epochs} loss {history['loss'][-1]:.5f}")
    save_checkpoint(out_path, model, "estimator", config.estimator, history)
    return history


def _branch_predictions(
    model: TwoBranchEstimator,
    arrays: dict[str, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """Frozen-branch coarse estimates for a batch (no grad)."""
    model.eval()
    with torch.no_grad():
        out = model(torch.from_numpy(arrays["points"]))
    reg = out["nodes_regression"].numpy().astype(np.float64)
    heat = out["heatmap"].numpy().astype(np.float64)
    offs = out["offsets"].numpy().astype(np.float64)
    votes = np.empty_like(reg)
    for i in range(reg.shape[0]):
        field = VotingField(heat[i], offs[i], model.config.vote_radius)
        votes[i], _ = aggregate_votes(arrays["points"][i].astype(np.float64), field, model.config.top_k)
    return reg, votes


def train_fusion(
    dataset_dir: str | Path,
    config: PipelineConfig,
    estimator_ckpt: str | Path,
    out_path: str | Path,
    seed: int | None = None,
    epochs: int | None = None,
    log=None,
) -> dict:
    """Train conditioner plus denoiser with the branches frozen."""
    seed = config.seed if seed is None else seed
    epochs = config.train.fusion_epochs if epochs is None else epochs
    data = TrainingData(str(dataset_dir), "train")
    estimator, _ = load_estimator(estimator_ckpt)
    estimator.requires_grad_(False)
    torch.manual_seed(seed + 1)
    model = FusionModel(config.fusion)
    schedule = model.schedule()
    opt = torch.optim.AdamW(model.parameters(), lr=config.train.fusion_lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(epochs, 1))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    history: dict = {"loss": []}
    for epoch in range(epochs):
        total, count = 0.0, 0
        for chunk in _batches(len(data), config.train.fusion_batch, rng):
            arrays = data.estimation_batch(
                chunk, rng, config.estimator,
                occlusion_max=config.train.occlusion_max,
                jitter_sigma=config.train.jitter_sigma,
            )
            reg, votes = _branch_predictions(estimator, arrays)
            aff = np.stack([build_affinity(reg[i]).matrix for i in range(len(chunk))])
            model.train()
            cond = model.conditioner(
                torch.as_tensor(reg, dtype=torch.float32),
                torch.as_tensor(votes, dtype=torch.float32),
            )
            loss = diffusion_loss(
                model.denoiser,
                torch.from_numpy(arrays["nodes"]),
                cond,
                torch.as_tensor(aff, dtype=torch.float32),
                schedule,
                rng,
            )
            _check_finite(loss, "fusion")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach())
            count += 1
        sched.step()
        history["loss"].append(total / max(count, 1))
        if log:
            log(f"fusion epoch {epoch + 1}/{epochs} loss {history['loss'][-1]:.5f}")
    save_checkpoint(out_path, model, "fusion", config.fusion, history)
    return history


def train_tracker(
    dataset_dir: str | Path,
    config: PipelineConfig,
    out_path: str | Path,
    seed: int | None = None,
    epochs: int | None = None,
    log=None,
) -> dict:
    """Train the tracker end to end on consecutive-frame pairs."""
    seed = config.seed if seed is None else seed
    epochs = config.train.tracker_epochs if epochs is None else epochs
    data = TrainingData(str(dataset_dir), "train")
    torch.manual_seed(seed + 2)
    net = TrackerNet(config.tracker)
    schedule = make_schedule(config.tracker.num_steps, "cosine")
    opt = torch.optim.AdamW(net.parameters(), lr=config.train.tracker_lr)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(epochs, 1))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    history: dict = {"loss": []}
    net.train()
    for epoch in range(epochs):
        total, count = 0.0, 0
        for chunk in _batches(len(data.pairs), config.train.tracker_batch, rng):
            arrays = data.tracking_batch(
                chunk, rng, config.tracker,
                occlusion_max=config.train.occlusion_max,
                jitter_sigma=config.train.jitter_sigma,
                prev_noise_sigma=config.train.prev_noise_sigma,
            )
            pts = torch.from_numpy(arrays["points"])
            prev = torch.from_numpy(arrays["prev"])
            hist = torch.from_numpy(arrays["delta_hist"]) if net.config.history == 2 else None
            cond = net.condition(pts, prev, hist)
            loss = diffusion_loss(
                net.denoiser,
                torch.from_numpy(arrays["delta"]),
                cond,
                torch.from_numpy(arrays["affinity"]),
                schedule,
                rng,
            )
            _check_finite(loss, "tracker")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach())
            count += 1
        sched.step()
        history["loss"].append(total / max(count, 1))
        if log:
            log(f"tracker epoch {epoch + 1}/{epochs} loss {history['loss'][-1]:.5f}")
    save_checkpoint(out_path, net, "tracker", config.tracker, history)
    return history
