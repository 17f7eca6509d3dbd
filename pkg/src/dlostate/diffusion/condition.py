"""Conditioning features for the denoiser.

Coarse node estimates (or tracked node features) are lifted to sinusoidal
embeddings and mixed by per-branch multi-head self-attention over the node
dimension, giving each node a context-aware conditioning vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from ..errors import ShapeError


def timestep_embedding(k: torch.Tensor, dim: int) -> torch.Tensor:
    """Transformer-style sinusoidal embedding of integer steps.

    k: [...] -> [..., dim]; pairs of (sin, cos) at geometrically spaced
    frequencies.
    """
    half = dim // 2
    freqs = torch.exp(
        -np.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half - 1, 1)
    ).to(k.dtype if k.is_floating_point() else torch.float32)
    args = k.unsqueeze(-1).to(freqs.dtype) * freqs
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2 == 1:
        emb = torch.cat([emb, torch.zeros_like(emb[..., :1])], dim=-1)
    return emb


def coordinate_embedding(x: torch.Tensor, dim: int, max_levels: int = 8) -> torch.Tensor:
    """Sinusoidal embedding of 3-D coordinates, raw values included.

    x: [..., 3] -> [..., dim]; per axis, sin/cos at octave frequencies
    (pi, 2 pi, 4 pi, ...), padded with zeros to the requested width after
    the 3 raw coordinates.  The octave count is capped: for unit-scale
    coordinates, frequencies beyond roughly 2^8 pi oscillate below the
    noise level of any realistic estimate and only amplify that noise.
    """
    levels = max(min((dim - 3) // 6, max_levels), 1)
    freqs = (np.pi * 2.0 ** np.arange(levels)).astype(np.float64)
    freqs = torch.as_tensor(freqs, dtype=x.dtype, device=x.device)
    args = x.unsqueeze(-1) * freqs  # [..., 3, levels]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)  # [..., 3, 2*levels]
    emb = emb.flatten(start_dim=-2)
    out = torch.cat([x, emb], dim=-1)
    if out.shape[-1] < dim:
        pad = torch.zeros(*out.shape[:-1], dim - out.shape[-1], dtype=x.dtype, device=x.device)
        out = torch.cat([out, pad], dim=-1)
    return out[..., :dim]


@dataclass
class ConditionFeatures:
    """Per-node conditioning matrix produced by an attention encoder."""

    features: np.ndarray  # (M, c)
    source: str           # "fusion" or "tracking"

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ShapeError("condition features must be (M, c)")


class AttentionEncoder(nn.Module):
    """Embed per-node vectors and mix them with multi-head self-attention."""

    def __init__(self, in_dim: int, d_model: int = 128, num_heads: int = 4):
        super().__init__()
        self.proj = nn.Linear(in_dim, d_model)
        self.attn = nn.MultiheadAttention(d_model, num_heads, batch_first=True)
        self.norm = nn.LayerNorm(d_model)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens: [B, M, in_dim] -> [B, M, d_model]"""
        h = self.proj(tokens)
        mixed, _ = self.attn(h, h, h, need_weights=False)
        return self.norm(h + mixed)


class FusionConditioner(nn.Module):
    """Two attention branches over the coarse node estimates, concatenated.

    The raw branch coordinates ride along unchanged next to the attention
    features: the attention stack supplies context (which regions the
    branches agree on), while the passthrough keeps a lossless view of the
    precise per-node positions for the denoiser to copy from.
    """

    def __init__(self, embed_dim: int = 128, d_model: int = 128, num_heads: int = 4):
        super().__init__()
        self.embed_dim = embed_dim
        self.out_dim = 2 * d_model + 6
        self.branch_regression = AttentionEncoder(embed_dim, d_model, num_heads)
        self.branch_voting = AttentionEncoder(embed_dim, d_model, num_heads)

    def forward(self, nodes_regression: torch.Tensor, nodes_voting: torch.Tensor) -> torch.Tensor:
        """Both inputs [B, M, 3] canonical -> conditioning [B, M, 2 * d_model + 6]."""
        e_reg = coordinate_embedding(nodes_regression, self.embed_dim)
        e_vot = coordinate_embedding(nodes_voting, self.embed_dim)
        return torch.cat(
            [
                self.branch_regression(e_reg),
                self.branch_voting(e_vot),
                nodes_regression,
                nodes_voting,
            ],
            dim=-1,
        )


def build_fusion_condition(
    nodes_regression,
    nodes_voting,
    conditioner: FusionConditioner,
) -> ConditionFeatures:
    """Conditioning matrix for the fusion denoiser from both branch estimates."""
    reg = np.asarray(getattr(nodes_regression, "nodes", nodes_regression), dtype=np.float64)
    vot = np.asarray(getattr(nodes_voting, "nodes", nodes_voting), dtype=np.float64)
    if reg.shape != vot.shape or reg.ndim != 2 or reg.shape[1] != 3:
        raise ShapeError("branch estimates must both be (M, 3)")
    conditioner.eval()
    with torch.no_grad():
        p = next(conditioner.parameters())
        t_reg = torch.as_tensor(reg, dtype=p.dtype).unsqueeze(0)
        t_vot = torch.as_tensor(vot, dtype=p.dtype).unsqueeze(0)
        feats = conditioner(t_reg, t_vot)[0].numpy()
    return ConditionFeatures(np.asarray(feats, dtype=np.float64), "fusion")
