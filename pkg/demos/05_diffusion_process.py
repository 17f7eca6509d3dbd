#!/usr/bin/env python
"""Visualize the diffusion machinery on a node chain: the cosine noise
schedule, forward noising of a clean chain at increasing steps, and a
reverse DDIM trajectory driven by an oracle denoiser that knows the clean
chain (isolating the sampler from any learned model)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from dlostate.diffusion import forward_sample, make_schedule
from dlostate.diffusion.sampler import ddim_step_indices

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

sched = make_schedule(100, "cosine")
rng = np.random.default_rng(7)

# clean chain: a planar S-curve of 50 nodes, unit scale
t = np.linspace(0.0, 1.0, 50)
y0 = np.stack([t - 0.5, 0.25 * np.sin(2.0 * np.pi * t), np.zeros_like(t)], axis=1)

print(f"schedule: {sched.num_steps} steps ({sched.kind})")
for k in (1, 25, 50, 75, 100):
    print(f"  k={k:3d}: beta={sched.betas[k]:.5f} alpha_bar={sched.alpha_bars[k]:.5f}")

fig, axes = plt.subplots(2, 4, figsize=(13, 6))

# row 1: the schedule and forward noising
ax = axes[0, 0]
ks = np.arange(sched.num_steps + 1)
ax.plot(ks, sched.alpha_bars, label="alpha_bar(k)")
ax.plot(ks, np.sqrt(1.0 - sched.alpha_bars), label="noise std")
ax.set_xlabel("step k")
ax.set_title("cosine schedule")
ax.legend(fontsize=8)

for ax, k in zip(axes[0, 1:], (10, 50, 100)):
    yk, _ = forward_sample(y0, k, sched, rng=np.random.default_rng(3))
    ax.plot(y0[:, 0], y0[:, 1], "-", color="0.7", label="clean")
    ax.plot(yk[:, 0], yk[:, 1], ".", ms=4, label=f"noised k={k}")
    ax.set_title(f"forward, k={k}")
    ax.set_xlim(-2.5, 2.5)
    ax.set_ylim(-2.5, 2.5)
    ax.legend(fontsize=7)

# row 2: reverse DDIM trajectory with an oracle that always predicts y0.
# Each update writes y <- sqrt(abar_next) y0_hat + sqrt(1 - abar_next) eps_hat,
# so with a perfect oracle the iterate contracts onto the clean chain.
ks = ddim_step_indices(sched.num_steps, 10)
y = np.random.default_rng(11).standard_normal(y0.shape)
snapshots = {sched.num_steps: y.copy()}
for i, k in enumerate(ks):
    k_next = ks[i + 1] if i + 1 < len(ks) else 0
    eps_hat = (y - np.sqrt(sched.alpha_bars[k]) * y0) / np.sqrt(1.0 - sched.alpha_bars[k])
    y = np.sqrt(sched.alpha_bars[k_next]) * y0 + np.sqrt(1.0 - sched.alpha_bars[k_next]) * eps_hat
    snapshots[k_next] = y.copy()
    err = np.linalg.norm(y - y0, axis=1).mean()
    print(f"ddim {k:3d} -> {k_next:3d}: mean node error {err:.4f}")

for ax, k in zip(axes[1], (100, 60, 30, 0)):
    snap = snapshots[min(snapshots, key=lambda q: abs(q - k))]
    ax.plot(y0[:, 0], y0[:, 1], "-", color="0.7")
    ax.plot(snap[:, 0], snap[:, 1], ".", ms=4, color="tab:purple")
    ax.set_title(f"reverse, k≈{k}")
    ax.set_xlim(-2.5, 2.5)
    ax.set_ylim(-2.5, 2.5)

fig.suptitle("forward noising and oracle-guided DDIM reverse process")
fig.tight_layout()
path = os.path.join(out_dir, "05_diffusion.png")
fig.savefig(path, dpi=130)
print(f"saved {path}")
