"""Command-line interface.

Subcommands cover the full workflow: dataset generation, the three training
stages, single-frame estimation, sequence tracking, evaluation sweeps, and
plotting.  Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DloStateError, NumericError
from .geometry import NodeSequence, PointCloud, compute_metrics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _load_pipeline_config(path: str | None, scale: str = "desk"):
    from .pipeline import desk_config, load_config, small_config

    if path is not None:
        return load_config(path)
    return small_config() if scale == "small" else desk_config()


def _occlusion_list(text: str) -> list[float]:
    try:
        levels = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad occlusion list {text!r}: {exc}") from exc
    if not levels:
        raise ConfigError("occlusion list is empty")
    return levels


def _cmd_gen_data(args) -> int:
    from .sim import generate_dataset

    config = _load_pipeline_config(args.config, args.scale)
    manifest = generate_dataset(
        args.out,
        num_sequences=args.sequences or config.data.num_sequences,
        frames_per_sequence=args.frames or config.data.frames_per_sequence,
        config=config.sim,
        seed=args.seed if args.seed is not None else config.seed,
        steps_per_frame=config.data.steps_per_frame,
        gt_node_count=config.data.gt_node_count,
        max_points=config.data.max_points,
    )
    print(f"wrote {manifest['num_sequences']} sequences to {args.out}")
    return EXIT_OK


def _cmd_train_est(args) -> int:
    from .pipeline import train_estimator

    config = _load_pipeline_config(args.config, args.scale)
    history = train_estimator(
        args.dataset, config, args.out,
        seed=args.seed, epochs=args.epochs, log=print,
    )
    print(f"final loss {history['loss'][-1]:.5f}; checkpoint at {args.out}")
    return EXIT_OK


def _cmd_train_fusion(args) -> int:
    from .pipeline import train_fusion

    config = _load_pipeline_config(args.config, args.scale)
    history = train_fusion(
        args.dataset, config, args.checkpoint, args.out,
        seed=args.seed, epochs=args.epochs, log=print,
    )
    print(f"final loss {history['loss'][-1]:.5f}; checkpoint at {args.out}")
    return EXIT_OK


def _cmd_train_track(args) -> int:
    from .pipeline import train_tracker

    config = _load_pipeline_config(args.config, args.scale)
    history = train_tracker(
        args.dataset, config, args.out,
        seed=args.seed, epochs=args.epochs, log=print,
    )
    print(f"final loss {history['loss'][-1]:.5f}; checkpoint at {args.out}")
    return EXIT_OK


def _load_frames(dataset: str, sequence: int):
    from .sim import load_manifest, load_sequence

    manifest = load_manifest(dataset)
    return load_sequence(dataset, manifest, sequence)


def _cmd_estimate(args) -> int:
    from .pipeline import load_models, estimate_frame
    from .sim import occlude_points

    models = load_models(args.checkpoint, args.fusion_checkpoint)
    frames = _load_frames(args.dataset, args.sequence)
    if not (0 <= args.frame < len(frames)):
        raise DataError(f"frame {args.frame} outside sequence of {len(frames)}")
    rec = frames[args.frame]
    rng = np.random.default_rng(args.seed or 0)
    pts = rec.point_cloud.points
    if args.occlusion > 0.0:
        pts = occlude_points(pts, rec.camera, args.occlusion, rng)
    endpoints = rec.endpoints if args.gt_endpoints else None
    nodes, _, info = estimate_frame(PointCloud(pts), models, rng, endpoints=endpoints)
    met = compute_metrics(nodes, rec.gt_nodes)
    result = {
        "sequence": args.sequence,
        "frame": args.frame,
        "occlusion": args.occlusion,
        "mpne_mm": met.mpne_mm,
        "pcn": met.pcn,
        "nss": met.nss,
        "nodes": nodes.nodes.tolist(),
        "timings_s": info["timings"],
    }
    text = json.dumps(result, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote estimate to {args.out} (mpne {met.mpne_mm:.2f} mm)")
    else:
        print(text)
    return EXIT_OK


def _cmd_track(args) -> int:
    from .pipeline import load_models, track_sequence
    from .sim import occlude_points

    models = load_models(args.checkpoint, args.fusion_checkpoint, args.tracker_checkpoint)
    frames = _load_frames(args.dataset, args.sequence)
    rng = np.random.default_rng(args.seed or 0)
    clouds = []
    for rec in frames:
        pts = rec.point_cloud.points
        if args.occlusion > 0.0:
            pts = occlude_points(pts, rec.camera, args.occlusion, rng)
        clouds.append(PointCloud(pts))
    init = NodeSequence(frames[0].gt_nodes.nodes.copy()) if args.gt_init else None
    outputs, events = track_sequence(clouds, models, rng, init_nodes=init)
    rows = []
    for t, (nodes, event) in enumerate(zip(outputs, events)):
        met = compute_metrics(nodes, frames[t].gt_nodes)
        rows.append({
            "frame": t, "mode": event["mode"], "mpne_mm": met.mpne_mm,
            "nss": met.nss, "max_delta_m": event["max_delta_m"],
        })
    text = json.dumps({"sequence": args.sequence, "frames": rows}, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        mean = float(np.mean([r["mpne_mm"] for r in rows[1:]])) if len(rows) > 1 else 0.0
        print(f"wrote track log to {args.out} (mean mpne {mean:.2f} mm)")
    else:
        print(text)
    return EXIT_OK


def _cmd_eval(args) -> int:
    from .pipeline import evaluate, load_models

    models = load_models(
        args.checkpoint, args.fusion_checkpoint,
        args.tracker_checkpoint if args.mode == "track" else None,
    )
    report = evaluate(
        args.dataset, models,
        mode=args.mode,
        occlusion_levels=tuple(_occlusion_list(args.occlusion)),
        seed=args.seed or 0,
        max_frames=args.max_frames,
        track_window=args.track_window,
    )
    report.save(args.out)
    print(f"wrote report to {args.out}")
    for method, per_level in sorted(report.aggregates.items()):
        for level, agg in sorted(per_level.items()):
            if agg.get("frames"):
                print(
                    f"  {method} @ {float(level):.0%}: "
                    f"mpne {agg['mpne_mm']:.2f} mm, pcn {agg['pcn']:.3f}, nss {agg['nss']:.4f}"
                )
    return EXIT_OK


def _cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .pipeline import EvalReport

    report = EvalReport.load(args.report)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    levels = report.occlusion_levels
    for method, per_level in sorted(report.aggregates.items()):
        ys = [per_level.get(str(lv), {}).get("mpne_mm") for lv in levels]
        pts = [(lv, y) for lv, y in zip(levels, ys) if y is not None]
        if pts:
            ax1.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
        ys = [per_level.get(str(lv), {}).get("nss") for lv in levels]
        pts = [(lv, y) for lv, y in zip(levels, ys) if y is not None]
        if pts:
            ax2.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=method)
    ax1.set_xlabel("occlusion fraction")
    ax1.set_ylabel("mean node error (mm)")
    ax1.legend()
    ax1.grid(alpha=0.3)
    ax2.set_xlabel("occlusion fraction")
    ax2.set_ylabel("smoothness (rad$^2$)")
    ax2.legend()
    ax2.grid(alpha=0.3)
    fig.suptitle(f"{report.mode} evaluation")
    fig.tight_layout()
    fig.savefig(args.out, dpi=130)
    print(f"wrote plot to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlostate",
        description="Synthetic DLO data generation, state estimation, and tracking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="pipeline config JSON; defaults when omitted")
            p.add_argument(
                "--scale", choices=("desk", "small"), default="desk",
                help="built-in config scale used when --config is omitted",
            )
        p.add_argument("--seed", type=int, default=None, help="random seed override")

    p = sub.add_parser("gen-data", help="simulate and render a dataset")
    common(p)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--sequences", type=int, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train-est", help="train the two-branch estimator")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(fn=_cmd_train_est)

    p = sub.add_parser("train-fusion", help="train the diffusion fusion stage")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True, help="trained estimator checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(fn=_cmd_train_fusion)

    p = sub.add_parser("train-track", help="train the tracker")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(fn=_cmd_train_track)

    p = sub.add_parser("estimate", help="estimate one stored frame")
    common(p, config=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True, help="estimator checkpoint")
    p.add_argument("--fusion-checkpoint", required=True)
    p.add_argument("--sequence", type=int, default=0)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--occlusion", type=float, default=0.0)
    p.add_argument("--gt-endpoints", action="store_true")
    p.add_argument("--out", default=None, help="write result JSON here")
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("track", help="track one stored sequence")
    common(p, config=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True, help="estimator checkpoint")
    p.add_argument("--fusion-checkpoint", required=True)
    p.add_argument("--tracker-checkpoint", required=True)
    p.add_argument("--sequence", type=int, default=0)
    p.add_argument("--occlusion", type=float, default=0.0)
    p.add_argument("--gt-init", action="store_true", help="initialize from ground truth")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_track)

    p = sub.add_parser("eval", help="occlusion sweep evaluation")
    common(p, config=False)
    p.add_argument("--dataset", required=True)
    p.add_argument("--checkpoint", required=True, help="estimator checkpoint")
    p.add_argument("--fusion-checkpoint", required=True)
    p.add_argument("--tracker-checkpoint", default=None)
    p.add_argument("--mode", choices=("estimate", "track"), default="estimate")
    p.add_argument("--occlusion", default="0.0,0.1,0.3,0.5", help="comma-separated levels")
    p.add_argument("--max-frames", type=int, default=0)
    p.add_argument("--track-window", type=int, default=30)
    p.add_argument("--out", required=True, help="report JSON path")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("plot", help="plot an evaluation report")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True, help="output image path")
    p.set_defaults(fn=_cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DloStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
