"""Training losses of the two-branch estimator."""

from __future__ import annotations

import torch


def estimation_loss(
    pred_nodes: torch.Tensor,     # [B, M, 3] regression branch output
    target_nodes: torch.Tensor,   # [B, M, 3]
    pred_heat: torch.Tensor,      # [B, N, M]
    pred_offsets: torch.Tensor,   # [B, N, M, 3]
    target_heat: torch.Tensor,    # [B, N, M]
    target_offsets: torch.Tensor,  # [B, N, M, 3]
    offset_valid: torch.Tensor,   # [B, N, M] bool, False where point == node
    lambda_regression: float = 1.0,
    lambda_voting: float = 1.0,
) -> tuple[torch.Tensor, dict[str, float]]:
    """Combined loss: L1 node regression plus squared voting-field error.

    The voting term sums squared heatmap and offset errors over every
    point/node pair and divides by the point count N (not by N*M); offset
    errors at coincident point/node pairs are masked out.  Returns the total
    and a detached breakdown.
    """
    l_reg = (pred_nodes - target_nodes).abs().mean()
    n = pred_heat.shape[1]
    heat_term = (pred_heat - target_heat) ** 2
    off_term = ((pred_offsets - target_offsets) ** 2).sum(dim=-1) * offset_valid.to(pred_offsets.dtype)
    l_vote = (heat_term + off_term).sum(dim=(1, 2)).mean() / n
    total = lambda_regression * l_reg + lambda_voting * l_vote
    parts = {
        "regression": float(l_reg.detach()),
        "voting": float(l_vote.detach()),
        "total": float(total.detach()),
    }
    return total, parts
