"""Graph-convolutional denoiser predicting the clean node chain.

Per node, the noisy coordinates are concatenated with the conditioning
vector, a sinusoidal embedding of the diffusion step, and a sinusoidal
embedding of the node index.  A shared MLP lifts the result, three graph
convolutions f <- relu(A_hat f W) propagate information along the affinity
graph, and a head maps back to 3-D coordinates.  The network predicts the
clean sample directly (never the noise).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..errors import ConfigError
from .condition import timestep_embedding


@dataclass
class DenoiserParams:
    """Architecture hyperparameters of the denoiser network."""

    cond_dim: int           # conditioning channels per node
    width: int = 256        # hidden width
    pe_dim: int = 128       # sinusoidal embedding width for step and node index
    gcn_layers: int = 3

    def __post_init__(self) -> None:
        if self.cond_dim < 1 or self.width < 1 or self.pe_dim < 2:
            raise ConfigError("denoiser dimensions must be positive")
        if self.gcn_layers < 1:
            raise ConfigError("gcn_layers must be >= 1")


class GraphConv(nn.Module):
    """f <- act(A_hat f W) over a fixed normalized affinity."""

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim)

    def forward(self, feats: torch.Tensor, a_hat: torch.Tensor) -> torch.Tensor:
        """feats: [B, M, C], a_hat: [B, M, M] -> [B, M, out]"""
        return torch.bmm(a_hat, self.lin(feats))


class DenoiserNet(nn.Module):
    """Conditional per-node regressor of the clean chain from a noisy one."""

    def __init__(self, params: DenoiserParams):
        super().__init__()
        self.params = params
        w = params.width
        in_dim = params.cond_dim + 3 + 2 * params.pe_dim
        self.input_mlp = nn.Sequential(
            nn.Linear(in_dim, w),
            nn.ReLU(),
            nn.Linear(w, w),
            nn.ReLU(),
        )
        self.gcns = nn.ModuleList(GraphConv(w, w) for _ in range(params.gcn_layers))
        self.head = nn.Sequential(
            nn.Linear(w, max(w // 2, 8)),
            nn.ReLU(),
            nn.Linear(max(w // 2, 8), 3),
        )

    def forward(
        self,
        y_k: torch.Tensor,     # [B, M, 3] noisy chain
        k: torch.Tensor,       # [B] integer diffusion steps
        cond: torch.Tensor,    # [B, M, cond_dim]
        a_hat: torch.Tensor,   # [B, M, M] normalized affinity
    ) -> torch.Tensor:
        """Predict the clean chain y_0, shape [B, M, 3]."""
        b, m, _ = y_k.shape
        pe_k = timestep_embedding(k, self.params.pe_dim).to(y_k.dtype)
        pe_k = pe_k.unsqueeze(1).expand(b, m, -1)
        node_idx = torch.arange(m, device=y_k.device)
        pe_j = timestep_embedding(node_idx, self.params.pe_dim).to(y_k.dtype)
        pe_j = pe_j.unsqueeze(0).expand(b, m, -1)
        h = torch.cat([cond, y_k, pe_k, pe_j], dim=-1)
        h = self.input_mlp(h)
        for gcn in self.gcns:
            h = torch.relu(gcn(h, a_hat))
        return self.head(h)
