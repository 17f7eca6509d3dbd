"""Position-based rope dynamics with pinned gripper endpoints.

The rope is a chain of particles advanced by Verlet-style integration under
gravity, then corrected by iterated constraint projection: bend constraints
between consecutive segments followed by stretch (distance) constraints.  The
two end particles carry zero inverse mass and follow the gripper poses
exactly.  Constraints are projected in independent batches (alternate
segments, triples by index mod 3) so each batch vectorizes while keeping
Gauss-Seidel-style convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.spatial.transform import Rotation

from ..errors import ConfigError, OverstretchError
from .config import GripperWorkspace, SimConfig
from .poses import Pose, step_pose_toward

_MAX_SEPARATION_FACTOR = 0.98


@dataclass
class SimState:
    """Rope particle state plus gripper poses at a point in time."""

    particles: np.ndarray       # (P, 3) positions, meters
    prev_particles: np.ndarray  # (P, 3) positions one step earlier
    gripper_poses: tuple[Pose, Pose]
    time: float = 0.0

    def copy(self) -> "SimState":
        return SimState(
            self.particles.copy(),
            self.prev_particles.copy(),
            (self.gripper_poses[0].copy(), self.gripper_poses[1].copy()),
            self.time,
        )

    def total_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.particles, axis=0), axis=1).sum())


def _chord_half_angle(chord_ratio: float, segments: int) -> float:
    """Solve sin(segments * psi) / sin(psi) = chord_ratio for psi.

    Used to inscribe an equal-chord polyline in a circular arc: psi is half
    the angle each chord subtends at the arc center.  The ratio is strictly
    decreasing on (0, pi / segments], so bisection applies.
    """
    lo, hi = 1e-9, np.pi / segments
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.sin(segments * mid) / np.sin(mid) > chord_ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def init_rope(config: SimConfig, start_poses: tuple[Pose, Pose]) -> SimState:
    """Create a rope at rest grasped at both ends.

    The initial shape is a circular arc sagging along -z between the two
    grasp points, chosen so all consecutive particle distances equal the rest
    segment length exactly.  Raises OverstretchError when the grasp points
    are farther apart than 98% of the rope length.
    """
    p1 = start_poses[0].position.astype(np.float64)
    p2 = start_poses[1].position.astype(np.float64)
    sep = float(np.linalg.norm(p2 - p1))
    if sep > _MAX_SEPARATION_FACTOR * config.length:
        raise OverstretchError(
            f"grasp separation {sep:.4f} m exceeds "
            f"{_MAX_SEPARATION_FACTOR:.0%} of rope length {config.length:.4f} m"
        )
    count = config.particle_count
    segments = count - 1
    rest = config.rest_segment_length

    mid = 0.5 * (p1 + p2)
    if sep < 1e-12:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = (p2 - p1) / sep
    w_up = np.array([0.0, 0.0, 1.0]) - u * u[2]
    if np.linalg.norm(w_up) < 1e-9:
        w_up = np.array([1.0, 0.0, 0.0]) - u * u[0]  # chord is vertical
    w_up /= np.linalg.norm(w_up)

    psi = _chord_half_angle(sep / rest, segments)
    radius = rest / (2.0 * np.sin(psi))
    half_total = segments * psi
    center = mid + radius * np.cos(half_total) * w_up
    angles = -half_total + 2.0 * psi * np.arange(count)
    particles = (
        center[None, :]
        + radius * np.sin(angles)[:, None] * u[None, :]
        - radius * np.cos(angles)[:, None] * w_up[None, :]
    )
    particles[0] = p1
    particles[-1] = p2
    return SimState(
        particles=particles,
        prev_particles=particles.copy(),
        gripper_poses=(start_poses[0].copy(), start_poses[1].copy()),
        time=0.0,
    )


def _project_stretch(p: np.ndarray, inv_mass: np.ndarray, rest: float, stiffness: float) -> None:
    """One pass of distance constraints over alternate-segment batches."""
    n_seg = p.shape[0] - 1
    for start in (0, 1):
        idx = np.arange(start, n_seg, 2)
        if idx.size == 0:
            continue
        a, b = idx, idx + 1
        d = p[b] - p[a]
        dist = np.linalg.norm(d, axis=1)
        dist = np.where(dist < 1e-12, 1e-12, dist)
        wa, wb = inv_mass[a], inv_mass[b]
        wsum = wa + wb
        wsum = np.where(wsum < 1e-12, 1.0, wsum)
        corr = (stiffness * (dist - rest) / (wsum * dist))[:, None] * d
        p[a] += wa[:, None] * corr
        p[b] -= wb[:, None] * corr


def _project_lengths(p: np.ndarray, inv_mass: np.ndarray, rest: float) -> None:
    """Drive every segment to its rest length with a direct Newton projection.

    Iterated per-constraint projection removes local stretch quickly but the
    chain-wide stretch mode decays only by a factor of about 1 - 1/P^2 per
    sweep, far too slow to hold the total length budget.  The constraint
    system J W J^T for a chain is tridiagonal, so each Newton step can be
    solved exactly instead; a handful of steps reaches segment-length errors
    near machine precision whenever the endpoint separation leaves the
    constraints feasible.
    """
    n_seg = p.shape[0] - 1
    for _ in range(6):
        d = np.diff(p, axis=0)
        lengths = np.linalg.norm(d, axis=1)
        safe = np.maximum(lengths, 1e-12)
        u = d / safe[:, None]
        c = lengths - rest
        if float(np.abs(c).max()) < 1e-10:
            break
        diag = inv_mass[:-1] + inv_mass[1:]
        off = -inv_mass[1:-1] * np.einsum("ij,ij->i", u[:-1], u[1:])
        ab = np.zeros((3, n_seg))
        ab[0, 1:] = off
        ab[1] = diag
        ab[2, :-1] = off
        try:
            lam = solve_banded((1, 1), ab, c)
        except np.linalg.LinAlgError:
            return
        grad = lam[:, None] * u
        p[:-1] += inv_mass[:-1, None] * grad
        p[1:] -= inv_mass[1:, None] * grad


def _project_bend(p: np.ndarray, inv_mass: np.ndarray, stiffness: float) -> None:
    """One pass of bend constraints C = 1 - d1.d2 over index-mod-3 batches."""
    count = p.shape[0]
    for start in (1, 2, 3):
        idx = np.arange(start, count - 1, 3)
        if idx.size == 0:
            continue
        a, b, c = idx - 1, idx, idx + 1
        d1 = p[b] - p[a]
        d2 = p[c] - p[b]
        l1 = np.linalg.norm(d1, axis=1)
        l2 = np.linalg.norm(d2, axis=1)
        ok = (l1 > 1e-12) & (l2 > 1e-12)
        if not np.any(ok):
            continue
        l1 = np.where(ok, l1, 1.0)
        l2 = np.where(ok, l2, 1.0)
        d1 /= l1[:, None]
        d2 /= l2[:, None]
        cos = np.sum(d1 * d2, axis=1)
        # gradients of cos with respect to the three particles
        ga = -(d2 - cos[:, None] * d1) / l1[:, None]
        gc = (d1 - cos[:, None] * d2) / l2[:, None]
        gb = -(ga + gc)
        denom = (
            inv_mass[a] * np.sum(ga * ga, axis=1)
            + inv_mass[b] * np.sum(gb * gb, axis=1)
            + inv_mass[c] * np.sum(gc * gc, axis=1)
        )
        # C = 1 - cos, grad C = -grad cos; standard projection step
        s = np.where(ok & (denom > 1e-12), (1.0 - cos) / np.where(denom > 1e-12, denom, 1.0), 0.0)
        s *= stiffness
        p[a] += (s * inv_mass[a])[:, None] * ga
        p[b] += (s * inv_mass[b])[:, None] * gb
        p[c] += (s * inv_mass[c])[:, None] * gc


def step_sim(
    state: SimState,
    gripper_targets: tuple[Pose, Pose],
    config: SimConfig,
) -> SimState:
    """Advance the rope one time step toward the gripper targets.

    Grippers move with bounded linear and angular speed; endpoints are pinned
    to them.  After the configured solver iterations a direct length
    projection restores every segment to its rest length, so the total length
    stays at the configured value up to solver precision.  Returns a new
    state; the input is not modified.
    """
    dt = config.dt
    poses = tuple(
        step_pose_toward(
            state.gripper_poses[i],
            gripper_targets[i],
            config.gripper_speed * dt,
            config.gripper_angular_speed * dt,
        )
        for i in range(2)
    )
    p = (
        state.particles
        + config.damping * (state.particles - state.prev_particles)
        + np.array([0.0, 0.0, -config.gravity]) * dt * dt
    )
    inv_mass = np.ones(config.particle_count)
    inv_mass[0] = inv_mass[-1] = 0.0
    p[0] = poses[0].position
    p[-1] = poses[1].position

    rest = config.rest_segment_length
    for _ in range(config.solver_iterations):
        _project_bend(p, inv_mass, config.bend_stiffness)
        _project_stretch(p, inv_mass, rest, config.stretch_stiffness)
    _project_lengths(p, inv_mass, rest)
    p[0] = poses[0].position
    p[-1] = poses[1].position
    return SimState(
        particles=p,
        prev_particles=state.particles.copy(),
        gripper_poses=poses,
        time=state.time + dt,
    )


def sample_gripper_target(workspace: GripperWorkspace, rng: np.random.Generator) -> Pose:
    """Draw a target pose uniformly from a gripper workspace.

    Position is uniform in the box; orientation is a rotation about a uniform
    random axis with angle uniform in [0, max_tilt].
    """
    pos = rng.uniform(workspace.lo, workspace.hi)
    axis = rng.normal(size=3)
    norm = np.linalg.norm(axis)
    axis = axis / norm if norm > 1e-12 else np.array([0.0, 0.0, 1.0])
    angle = rng.uniform(0.0, workspace.max_tilt)
    quat = Rotation.from_rotvec(axis * angle).as_quat()
    return Pose(pos, quat)


def sample_target_pair(
    workspace_a: GripperWorkspace,
    workspace_b: GripperWorkspace,
    rng: np.random.Generator,
    min_separation: float,
    max_separation: float,
    max_tries: int = 200,
) -> tuple[Pose, Pose]:
    """Draw a pair of gripper targets with bounded mutual distance.

    Rejection-samples until the positions are at least ``min_separation`` and
    at most ``max_separation`` apart, so the rope can neither self-intersect
    at the grasps nor be pulled taut beyond its length.
    """
    for _ in range(max_tries):
        pa = sample_gripper_target(workspace_a, rng)
        pb = sample_gripper_target(workspace_b, rng)
        sep = float(np.linalg.norm(pb.position - pa.position))
        if min_separation <= sep <= max_separation:
            return pa, pb
    raise ConfigError(
        "could not sample gripper targets with separation in "
        f"[{min_separation:.3f}, {max_separation:.3f}] m; check workspace geometry"
    )
