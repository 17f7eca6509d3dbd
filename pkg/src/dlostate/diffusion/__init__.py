"""Conditional diffusion over node chains: schedule, conditioning, denoiser, samplers."""

from .condition import (
    AttentionEncoder,
    ConditionFeatures,
    FusionConditioner,
    build_fusion_condition,
    coordinate_embedding,
    timestep_embedding,
)
from .denoiser import DenoiserNet, DenoiserParams, GraphConv
from .graph import AffinityMatrix, build_affinity
from .sampler import (
    ddim_step_indices,
    denoise,
    diffusion_loss,
    diffusion_loss_given,
    sample,
)
from .schedule import DiffusionSchedule, forward_sample, make_schedule

__all__ = [
    "AttentionEncoder",
    "ConditionFeatures",
    "FusionConditioner",
    "build_fusion_condition",
    "coordinate_embedding",
    "timestep_embedding",
    "DenoiserNet",
    "DenoiserParams",
    "GraphConv",
    "AffinityMatrix",
    "build_affinity",
    "ddim_step_indices",
    "denoise",
    "diffusion_loss",
    "diffusion_loss_given",
    "sample",
    "DiffusionSchedule",
    "forward_sample",
    "make_schedule",
]
