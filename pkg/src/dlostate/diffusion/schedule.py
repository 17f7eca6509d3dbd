"""Noise schedules and the forward (noising) process.

Step indices run k = 1..K; index 0 in the cumulative-product arrays is the
clean-data convention alpha_bar(0) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

_COSINE_S = 0.008


@dataclass
class DiffusionSchedule:
    """Precomputed per-step quantities of a K-step noising process.

    Arrays are indexed by k in 0..K: entry 0 is the clean-data convention
    (beta = 0, alpha_bar = 1), entries 1..K are the diffusion steps.
    """

    num_steps: int
    kind: str
    betas: np.ndarray = field(repr=False)        # (K + 1,)
    alphas: np.ndarray = field(repr=False)       # (K + 1,), 1 - beta
    alpha_bars: np.ndarray = field(repr=False)   # (K + 1,), cumulative product

    def posterior_variance(self, k: int) -> float:
        """Variance of q(y_{k-1} | y_k, y_0)."""
        return float(
            (1.0 - self.alpha_bars[k - 1]) / (1.0 - self.alpha_bars[k]) * self.betas[k]
        )


def make_schedule(num_steps: int = 100, kind: str = "cosine") -> DiffusionSchedule:
    """Build a noise schedule.

    cosine: alpha_bar(k) follows the squared-cosine curve with offset 0.008,
    with per-step betas derived from consecutive ratios and clipped to at
    most 0.999.  linear: betas evenly spaced from 1e-4 to 0.02.
    """
    if num_steps < 1:
        raise ConfigError("num_steps must be >= 1")
    if kind == "cosine":
        s = _COSINE_S
        k = np.arange(num_steps + 1, dtype=np.float64)
        f = np.cos((k / num_steps + s) / (1.0 + s) * np.pi / 2.0) ** 2
        bar = f / f[0]
        betas = np.clip(1.0 - bar[1:] / bar[:-1], 1e-8, 0.999)
    elif kind == "linear":
        betas = np.linspace(1e-4, 0.02, num_steps)
    else:
        raise ConfigError(f"unknown schedule kind {kind!r}")
    betas = np.concatenate([[0.0], betas])
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    alpha_bars[0] = 1.0
    return DiffusionSchedule(num_steps, kind, betas, alphas, alpha_bars)


def forward_sample(
    y0: np.ndarray,
    k: int,
    schedule: DiffusionSchedule,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw y_k ~ q(y_k | y_0) = N(sqrt(abar_k) y_0, (1 - abar_k) I).

    Supply either an rng (noise is drawn) or explicit standard-normal noise.
    Returns (y_k, noise used).
    """
    if not (1 <= k <= schedule.num_steps):
        raise ConfigError(f"step k={k} outside 1..{schedule.num_steps}")
    y0 = np.asarray(y0, dtype=np.float64)
    if noise is None:
        if rng is None:
            raise ConfigError("forward_sample needs an rng or explicit noise")
        noise = rng.standard_normal(y0.shape)
    else:
        noise = np.asarray(noise, dtype=np.float64)
        if noise.shape != y0.shape:
            raise ConfigError("noise shape must match y0")
    abar = schedule.alpha_bars[k]
    return np.sqrt(abar) * y0 + np.sqrt(1.0 - abar) * noise, noise
