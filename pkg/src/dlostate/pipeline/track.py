"""Sequence tracking with failure detection and re-initialization."""

from __future__ import annotations

import time
from collections.abc import Sequence

import numpy as np

from ..errors import ConfigError
from ..geometry import NodeSequence, PointCloud, spline_postprocess
from ..tracking import TrackingContext, track_step
from .estimate import estimate_frame
from .models import Models


def track_sequence(
    clouds: Sequence[PointCloud],
    models: Models,
    rng: np.random.Generator,
    init_nodes: NodeSequence | None = None,
    postprocess: bool = True,
    discard_k: int = 3,
) -> tuple[list[NodeSequence], list[dict]]:
    """Track a chain through a cloud sequence.

    Frame 0 uses ``init_nodes`` when given (mode "init"), otherwise a
    single-frame estimate (mode "estimate").  Later frames are tracked; a
    detected failure discards the proposal and re-runs single-frame
    estimation (mode "reinit").  Returns per-frame chains plus an event log
    whose mode field records exactly which path produced each output.
    """
    if models.tracker is None or models.tracker_schedule is None:
        raise ConfigError("tracking requires a tracker model")
    if len(clouds) == 0:
        return [], []

    outputs: list[NodeSequence] = []
    events: list[dict] = []

    t0 = time.perf_counter()
    if init_nodes is not None:
        current = NodeSequence(init_nodes.nodes.copy(), init_nodes.frame)
        mode = "init"
    else:
        current, _, _ = estimate_frame(
            clouds[0], models, rng, postprocess=postprocess, discard_k=discard_k
        )
        mode = "estimate"
    outputs.append(current)
    events.append({
        "frame": 0, "mode": mode, "failed": False,
        "max_delta_m": 0.0, "runtime_s": time.perf_counter() - t0,
    })

    context = TrackingContext(prev_nodes=current)
    for i in range(1, len(clouds)):
        t0 = time.perf_counter()
        proposed, info = track_step(
            clouds[i], context, models.tracker, models.tracker_schedule, rng
        )
        if info["failed"]:
            nodes, _, est_info = estimate_frame(
                clouds[i], models, rng, postprocess=postprocess, discard_k=discard_k
            )
            mode = "reinit"
            context = TrackingContext(
                prev_nodes=nodes,
                prev_prev_nodes=None,
                frame_index=i,
                reinit_count=context.reinit_count + 1,
                last_mode=mode,
            )
        else:
            nodes = proposed
            if postprocess:
                nodes = spline_postprocess(
                    nodes, nodes.nodes[[0, -1]], discard_k=discard_k
                )
            mode = "track"
            context = TrackingContext(
                prev_nodes=nodes,
                prev_prev_nodes=context.prev_nodes,
                frame_index=i,
                reinit_count=context.reinit_count,
                last_mode=mode,
            )
        outputs.append(nodes)
        events.append({
            "frame": i, "mode": mode, "failed": bool(info["failed"]),
            "max_delta_m": float(info["max_delta_m"]),
            "runtime_s": time.perf_counter() - t0,
        })
    return outputs, events
