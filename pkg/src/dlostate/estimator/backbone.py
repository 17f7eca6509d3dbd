"""Hierarchical point cloud encoder (set abstraction + feature propagation).

Four set-abstraction stages downsample the cloud by 4x each while growing the
receptive field (radii in geometric progression), then four feature
propagation stages interpolate features back up to every input point.  The
global descriptor is the channel-wise max over the final per-point features.

All sampling and grouping decisions are made deterministic: farthest point
sampling starts at the lexicographically smallest coordinate (not a random
index) and every neighbor choice orders candidates by (distance, index).
With batch norms in eval mode the encoder is therefore exactly permutation
equivariant: permuting the input points permutes per-point features and
leaves the global feature unchanged.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn


def pairwise_sqdist(src: torch.Tensor, dst: torch.Tensor) -> torch.Tensor:
    """Squared distances between two point sets.

    src: [B, N, 3], dst: [B, M, 3] -> [B, N, M]
    Computed from explicit differences (not the expanded dot-product form) so
    equal points give exactly zero and results do not depend on point order.
    """
    return torch.sum((src.unsqueeze(2) - dst.unsqueeze(1)) ** 2, dim=-1)


def index_points(points: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """Gather point subsets by index.

    points: [B, N, C], idx: [B, S] or [B, S, K] -> [B, S, C] or [B, S, K, C]
    """
    batch = points.shape[0]
    view = [batch] + [1] * (idx.dim() - 1)
    repeat = list(idx.shape)
    repeat[0] = 1
    batch_idx = torch.arange(batch, device=points.device).view(view).repeat(repeat)
    return points[batch_idx, idx]


def farthest_point_indices(xyz: torch.Tensor, npoint: int) -> torch.Tensor:
    """Greedy farthest point sampling started at the lexicographic minimum.

    xyz: [B, N, 3] -> [B, npoint] selection indices.  Runs in float64 numpy
    off the autograd graph; ties resolve to the lowest index, and the
    lexicographic start makes the selected point set independent of input
    ordering.
    """
    pts = xyz.detach().cpu().numpy().astype(np.float64)
    batch, n, _ = pts.shape
    out = np.empty((batch, npoint), dtype=np.int64)
    for b in range(batch):
        p = pts[b]
        start = int(np.lexsort((p[:, 2], p[:, 1], p[:, 0]))[0])
        out[b, 0] = start
        best = np.sum((p - p[start]) ** 2, axis=1)
        for i in range(1, npoint):
            nxt = int(np.argmax(best))
            out[b, i] = nxt
            np.minimum(best, np.sum((p - p[nxt]) ** 2, axis=1), out=best)
    return torch.from_numpy(out).to(xyz.device)


def ball_group_indices(
    xyz: torch.Tensor, centroids: torch.Tensor, radius: float, nsample: int
) -> torch.Tensor:
    """Indices of up to nsample neighbors within radius of each centroid.

    xyz: [B, N, 3], centroids: [B, S, 3] -> [B, S, nsample]
    Neighbors are taken nearest-first (ties by index); slots beyond the
    in-radius count repeat the nearest neighbor, and if nothing is in radius
    the nearest point overall fills every slot.
    """
    sqd = pairwise_sqdist(centroids, xyz)  # [B, S, N]
    n = xyz.shape[1]
    k = min(nsample, n)
    dist, idx = torch.sort(sqd, dim=-1, stable=True)  # stable: equal dists keep index order
    dist, idx = dist[..., :k], idx[..., :k]
    if k < nsample:
        dist = torch.cat([dist, dist[..., -1:].expand(*dist.shape[:-1], nsample - k)], dim=-1)
        idx = torch.cat([idx, idx[..., -1:].expand(*idx.shape[:-1], nsample - k)], dim=-1)
    outside = dist > radius * radius
    nearest = idx[..., :1].expand_as(idx)
    return torch.where(outside, nearest, idx)


class SetAbstraction(nn.Module):
    """Downsample to npoint centroids and encode each local neighborhood."""

    def __init__(self, npoint: int, radius: float, nsample: int, in_channel: int, mlp: list[int]):
        super().__init__()
        self.npoint = npoint
        self.radius = radius
        self.nsample = nsample
        self.convs = nn.ModuleList()
        self.bns = nn.ModuleList()
        last = in_channel + 3  # grouped features plus relative coordinates
        for out in mlp:
            self.convs.append(nn.Conv2d(last, out, 1))
            self.bns.append(nn.BatchNorm2d(out))
            last = out

    def forward(self, xyz: torch.Tensor, features: torch.Tensor | None):
        """xyz: [B, N, 3], features: [B, N, C] or None -> ([B, S, 3], [B, S, mlp[-1]])"""
        fps_idx = farthest_point_indices(xyz, self.npoint)
        new_xyz = index_points(xyz, fps_idx)  # [B, S, 3]
        group_idx = ball_group_indices(xyz, new_xyz, self.radius, self.nsample)
        grouped = index_points(xyz, group_idx) - new_xyz.unsqueeze(2)  # [B, S, K, 3]
        if features is not None:
            grouped = torch.cat([grouped, index_points(features, group_idx)], dim=-1)
        out = grouped.permute(0, 3, 2, 1)  # [B, C, K, S]
        for conv, bn in zip(self.convs, self.bns):
            out = torch.relu(bn(conv(out)))
        out = torch.max(out, dim=2).values  # max over neighbors: [B, C', S]
        return new_xyz, out.permute(0, 2, 1)


class FeaturePropagation(nn.Module):
    """Interpolate coarse features back to a denser point set and refine."""

    def __init__(self, in_channel: int, mlp: list[int]):
        super().__init__()
        self.convs = nn.ModuleList()
        self.bns = nn.ModuleList()
        last = in_channel
        for out in mlp:
            self.convs.append(nn.Conv1d(last, out, 1))
            self.bns.append(nn.BatchNorm1d(out))
            last = out

    def forward(self, xyz_dense, xyz_coarse, feat_dense, feat_coarse):
        """xyz_dense: [B, N, 3], xyz_coarse: [B, S, 3], feats likewise -> [B, N, mlp[-1]]"""
        if xyz_coarse.shape[1] == 1:
            interp = feat_coarse.expand(-1, xyz_dense.shape[1], -1)
        else:
            k = min(3, xyz_coarse.shape[1])
            sqd = pairwise_sqdist(xyz_dense, xyz_coarse)  # [B, N, S]
            dist, idx = torch.sort(sqd, dim=-1, stable=True)
            dist, idx = dist[..., :k], idx[..., :k]
            w = 1.0 / (dist + 1e-8)
            w = w / w.sum(dim=-1, keepdim=True)  # [B, N, k]
            neigh = index_points(feat_coarse, idx)  # [B, N, k, C]
            # fixed nearest-first summation order keeps results permutation stable
            interp = w[..., 0:1] * neigh[:, :, 0]
            for j in range(1, k):
                interp = interp + w[..., j:j + 1] * neigh[:, :, j]
        if feat_dense is not None:
            interp = torch.cat([feat_dense, interp], dim=-1)
        out = interp.permute(0, 2, 1)
        for conv, bn in zip(self.convs, self.bns):
            out = torch.relu(bn(conv(out)))
        return out.permute(0, 2, 1)


class PointBackbone(nn.Module):
    """Encoder producing per-point features [B, N, d] from clouds [B, N, 3]."""

    def __init__(self, n_points: int = 1024, feature_dim: int = 256,
                 base_radius: float = 0.05, nsample: int = 32):
        super().__init__()
        if feature_dim % 8 != 0:
            raise ValueError("feature_dim must be divisible by 8")
        w = feature_dim // 8
        npoints = [max(1, n_points // (4 ** (i + 1))) for i in range(4)]
        radii = [base_radius * (2 ** i) for i in range(4)]
        self.sa1 = SetAbstraction(npoints[0], radii[0], nsample, 0, [w, w, 2 * w])
        self.sa2 = SetAbstraction(npoints[1], radii[1], nsample, 2 * w, [2 * w, 2 * w, 4 * w])
        self.sa3 = SetAbstraction(npoints[2], radii[2], nsample, 4 * w, [4 * w, 4 * w, 8 * w])
        self.sa4 = SetAbstraction(npoints[3], radii[3], nsample, 8 * w, [8 * w, 8 * w, 16 * w])
        self.fp4 = FeaturePropagation(16 * w + 8 * w, [8 * w, 8 * w])
        self.fp3 = FeaturePropagation(8 * w + 4 * w, [8 * w, 8 * w])
        self.fp2 = FeaturePropagation(8 * w + 2 * w, [8 * w, 4 * w])
        self.fp1 = FeaturePropagation(4 * w, [4 * w, 8 * w])
        self.feature_dim = feature_dim

    def forward(self, xyz: torch.Tensor) -> torch.Tensor:
        """xyz: [B, N, 3] -> per-point features [B, N, d]"""
        l1_xyz, l1 = self.sa1(xyz, None)
        l2_xyz, l2 = self.sa2(l1_xyz, l1)
        l3_xyz, l3 = self.sa3(l2_xyz, l2)
        l4_xyz, l4 = self.sa4(l3_xyz, l3)
        f3 = self.fp4(l3_xyz, l4_xyz, l3, l4)
        f2 = self.fp3(l2_xyz, l3_xyz, l2, f3)
        f1 = self.fp2(l1_xyz, l2_xyz, l1, f2)
        return self.fp1(xyz, l1_xyz, None, f1)
