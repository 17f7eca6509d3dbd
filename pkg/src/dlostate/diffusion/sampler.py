"""Reverse-process sampling and the diffusion training loss.

The denoiser predicts the clean chain directly; both samplers reconstruct
transition means from that prediction.  All randomness flows through an
explicit numpy generator, so a fixed generator state reproduces samples
bitwise on CPU.
"""

from __future__ import annotations

import numpy as np
import torch

from ..errors import ConfigError, ShapeError
from .condition import ConditionFeatures
from .denoiser import DenoiserNet
from .graph import AffinityMatrix
from .schedule import DiffusionSchedule


def _cond_array(cond) -> np.ndarray:
    if isinstance(cond, ConditionFeatures):
        return cond.features
    return np.asarray(cond, dtype=np.float64)


def _affinity_array(affinity) -> np.ndarray:
    if isinstance(affinity, AffinityMatrix):
        return affinity.matrix
    return np.asarray(affinity, dtype=np.float64)


def denoise(
    y_k: np.ndarray,
    k: int,
    cond,
    affinity,
    model: DenoiserNet,
) -> np.ndarray:
    """One clean-chain prediction y0_hat = model(y_k, k, cond, A_hat), (M, 3)."""
    y = np.asarray(y_k, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 3:
        raise ShapeError("y_k must be (M, 3)")
    model.eval()
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        out = model(
            torch.as_tensor(y, dtype=dtype).unsqueeze(0),
            torch.as_tensor([k], dtype=torch.long),
            torch.as_tensor(_cond_array(cond), dtype=dtype).unsqueeze(0),
            torch.as_tensor(_affinity_array(affinity), dtype=dtype).unsqueeze(0),
        )
    return out[0].numpy().astype(np.float64)


def ddim_step_indices(num_steps: int, ddim_steps: int) -> list[int]:
    """Evenly strided descending step indices ending one stride above 0."""
    if not (1 <= ddim_steps <= num_steps):
        raise ConfigError("ddim_steps must be in 1..num_steps")
    ks = np.unique(np.round(np.linspace(num_steps / ddim_steps, num_steps, ddim_steps)).astype(int))
    return [int(k) for k in ks[::-1]]


def sample(
    cond,
    affinity,
    model: DenoiserNet,
    schedule: DiffusionSchedule,
    rng: np.random.Generator,
    m_nodes: int,
    method: str = "ddim",
    ddim_steps: int = 10,
) -> np.ndarray:
    """Draw one chain from the reverse process, shape (M, 3).

    ddpm: full ancestral sampling over all K steps with the fixed posterior
    variance; the final step adds no noise.  ddim: deterministic (eta = 0)
    updates over evenly strided steps, the last jumping to the clean sample.
    """
    y = rng.standard_normal((m_nodes, 3))
    abar = schedule.alpha_bars
    betas = schedule.betas
    alphas = schedule.alphas
    if method == "ddpm":
        for k in range(schedule.num_steps, 0, -1):
            y0_hat = denoise(y, k, cond, affinity, model)
            coef0 = np.sqrt(abar[k - 1]) * betas[k] / (1.0 - abar[k])
            coefk = np.sqrt(alphas[k]) * (1.0 - abar[k - 1]) / (1.0 - abar[k])
            y = coef0 * y0_hat + coefk * y
            if k > 1:
                y = y + np.sqrt(schedule.posterior_variance(k)) * rng.standard_normal(y.shape)
    elif method == "ddim":
        ks = ddim_step_indices(schedule.num_steps, ddim_steps)
        for i, k in enumerate(ks):
            y0_hat = denoise(y, k, cond, affinity, model)
            k_next = ks[i + 1] if i + 1 < len(ks) else 0
            eps_hat = (y - np.sqrt(abar[k]) * y0_hat) / np.sqrt(1.0 - abar[k])
            y = np.sqrt(abar[k_next]) * y0_hat + np.sqrt(1.0 - abar[k_next]) * eps_hat
    else:
        raise ConfigError(f"unknown sampling method {method!r}")
    return y


def diffusion_loss_given(
    model: DenoiserNet,
    y0: torch.Tensor,      # [B, M, 3] clean target chains
    k: torch.Tensor,       # [B] steps in 1..K
    noise: torch.Tensor,   # [B, M, 3] standard normal
    cond: torch.Tensor,    # [B, M, c]
    a_hat: torch.Tensor,   # [B, M, M]
    schedule: DiffusionSchedule,
) -> torch.Tensor:
    """MSE between the predicted and true clean chain at given steps/noise."""
    abar = torch.as_tensor(schedule.alpha_bars, dtype=y0.dtype, device=y0.device)[k]
    abar = abar.view(-1, 1, 1)
    y_k = torch.sqrt(abar) * y0 + torch.sqrt(1.0 - abar) * noise
    pred = model(y_k, k, cond, a_hat)
    return ((pred - y0) ** 2).mean()


def diffusion_loss(
    model: DenoiserNet,
    y0: torch.Tensor,
    cond: torch.Tensor,
    a_hat: torch.Tensor,
    schedule: DiffusionSchedule,
    rng: np.random.Generator,
) -> torch.Tensor:
    """Training loss with steps and noise drawn from the generator."""
    b = y0.shape[0]
    k = torch.from_numpy(rng.integers(1, schedule.num_steps + 1, size=b))
    noise = torch.as_tensor(rng.standard_normal(tuple(y0.shape)), dtype=y0.dtype)
    return diffusion_loss_given(model, y0, k, noise, cond, a_hat, schedule)
