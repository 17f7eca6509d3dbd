"""Rope simulation, synthetic rendering, and dataset generation."""

from .config import CameraModel, GripperWorkspace, OcclusionSpec, SimConfig, default_camera
from .dataset import (
    MANIFEST_NAME,
    default_workspaces,
    generate_dataset,
    load_manifest,
    load_sequence,
)
from .poses import Pose, step_pose_toward
from .render import FrameRecord, apply_occlusion, occlude_points, render_frame
from .rope import SimState, init_rope, sample_gripper_target, sample_target_pair, step_sim

__all__ = [
    "CameraModel",
    "GripperWorkspace",
    "OcclusionSpec",
    "SimConfig",
    "default_camera",
    "MANIFEST_NAME",
    "default_workspaces",
    "generate_dataset",
    "load_manifest",
    "load_sequence",
    "Pose",
    "step_pose_toward",
    "FrameRecord",
    "apply_occlusion",
    "occlude_points",
    "render_frame",
    "SimState",
    "init_rope",
    "sample_gripper_target",
    "sample_target_pair",
    "step_sim",
]
