"""Command-line interface.

``mamm align`` aligns a BVH motion to a control file and writes BVH out;
``mamm serve`` starts the HTTP service for the sketch UI. Input problems
exit with code 2, solver failures with 3; error lines on stderr carry a
machine-readable prefix (``mamm: E_INPUT:`` / ``mamm: E_SOLVER:``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .adapters import (load_audio_csv, load_labels_json, load_sketch_json,
                       load_waveform_csv)
from .exceptions import MammError, SolverError
from .motion import from_internal, load_bvh
from .pipeline import AlignmentConfig, HardKeyframe, SoftKeyframe, mamm_align

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3

CONTROL_TYPES = ("sketch", "waveform", "labels", "audio", "motion")


def _fail(kind: str, message: str, code: int) -> int:
    print(f"mamm: {kind}: {message}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mamm",
                                     description="Metric-aligning motion matching")
    sub = parser.add_subparsers(dest="command", required=True)

    al = sub.add_parser("align", help="align a BVH motion to a control sequence")
    al.add_argument("--original", help="original motion (BVH)")
    al.add_argument("--control", help="control sequence file")
    al.add_argument("--control-type", choices=CONTROL_TYPES)
    al.add_argument("--out", help="output BVH path")
    al.add_argument("--alpha", type=float, default=0.8)
    al.add_argument("--lambda", dest="lam", type=float, default=0.05)
    al.add_argument("--epsilon", type=float, default=1.0)
    al.add_argument("--stages", type=int, default=6)
    al.add_argument("--iters", type=int, default=20)
    al.add_argument("--patch-size", type=int, default=11)
    al.add_argument("--coarse-factor", type=float, default=4.0)
    al.add_argument("--norm-x", choices=("max", "mean"), default="mean")
    al.add_argument("--norm-y", choices=("max", "mean"), default=None)
    al.add_argument("--loop", action="store_true")
    al.add_argument("--soft-kf", help="soft keyframes JSON file")
    al.add_argument("--hard-kf", help="hard keyframes JSON file")
    al.add_argument("--trace", help="write per-iteration JSONL trace here")
    al.add_argument("--seed", type=int, default=None)
    al.add_argument("--tie-noise", type=float, default=0.0,
                    help="symmetry-breaking jitter on control distances (off by default)")
    al.add_argument("--control-fps", type=float, default=30.0,
                    help="fps for control files that do not carry one")
    al.add_argument("--print-config", action="store_true",
                    help="print the effective configuration as JSON and exit")

    sv = sub.add_parser("serve", help="serve the alignment HTTP API")
    sv.add_argument("--library", default=os.environ.get("MAMM_LIBRARY_DIR"),
                    help="directory of BVH files (or MAMM_LIBRARY_DIR)")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--ui", default=None,
                    help="serve the sketch UI from this directory (the frontend/ "
                         "folder after `npm run build`)")
    return parser


def _config_from_args(args) -> AlignmentConfig:
    return AlignmentConfig(
        alpha=args.alpha, lam=args.lam, epsilon=args.epsilon,
        stages=args.stages, iters_per_stage=args.iters,
        patch_size=args.patch_size, coarse_factor=args.coarse_factor,
        norm_mode_x=args.norm_x, norm_mode_y=args.norm_y or "auto",
        loop=args.loop, seed=args.seed, tie_noise=args.tie_noise,
    )


def _config_json(config: AlignmentConfig) -> str:
    return json.dumps({
        "alpha": config.alpha,
        "lambda": config.lam,
        "epsilon": config.epsilon,
        "stages": config.stages,
        "iters_per_stage": config.iters_per_stage,
        "patch_size": config.patch_size,
        "coarse_factor": config.coarse_factor,
        "norm_mode_x": config.norm_mode_x,
        "norm_mode_y": config.norm_mode_y,
        "loop": config.loop,
    }, indent=2)


def _load_control(args):
    path = Path(args.control)
    kind = args.control_type
    if kind == "sketch":
        return load_sketch_json(path, default_fps=args.control_fps)
    if kind == "waveform":
        return load_waveform_csv(path, fps=args.control_fps)
    if kind == "labels":
        return load_labels_json(path, fps=args.control_fps)
    if kind == "audio":
        return load_audio_csv(path, fps=args.control_fps)
    if kind == "motion":
        from .adapters import from_motion
        return from_motion(load_bvh(path.read_text()))
    raise ValueError(f"unknown control type {kind!r}")


def _load_soft_keyframes(path, original, patch_size):
    """Soft keyframe JSON: a list of
    {"control_patch": [[...]] | "canvas_patch": [x, y],
     "motion_frame_start": int, "weight": float}."""
    from .motion import features_of
    payload = json.loads(Path(path).read_text())
    fx = features_of(original)
    out = []
    for item in payload:
        if "control_patch" in item:
            cp = np.asarray(item["control_patch"], dtype=np.float64)
        else:
            point = np.asarray(item["canvas_patch"], dtype=np.float64).ravel()
            cp = np.tile(point, (patch_size, 1))
        start = int(item["motion_frame_start"])
        mp = fx.frames[start:start + patch_size]
        if mp.shape[0] != patch_size:
            raise ValueError(f"motion_frame_start {start} leaves no room for a "
                             f"{patch_size}-frame patch")
        out.append(SoftKeyframe(control_patch=cp, motion_patch=mp,
                                weight=float(item.get("weight", 1.0))))
    return out


def _load_hard_keyframes(path):
    """Hard keyframe JSON: a list of
    {"control_start": s, "control_end": e, "motion_start": m}."""
    payload = json.loads(Path(path).read_text())
    out = []
    for item in payload:
        s, e = int(item["control_start"]), int(item["control_end"])
        m = int(item["motion_start"])
        out.append(HardKeyframe(control_range=(s, e), motion_range=(m, m + (e - s))))
    return out


def _run_align(args) -> int:
    config = _config_from_args(args)
    if args.print_config:
        print(_config_json(config))
        return EXIT_OK
    for flag, value in (("--original", args.original), ("--control", args.control),
                        ("--control-type", args.control_type), ("--out", args.out)):
        if not value:
            return _fail("E_INPUT", f"missing required flag {flag}", EXIT_INPUT)
    try:
        original = load_bvh(Path(args.original).read_text())
    except (OSError, MammError, ValueError) as exc:
        return _fail("E_INPUT", f"cannot read original motion: {exc}", EXIT_INPUT)
    try:
        control = _load_control(args)
        soft = _load_soft_keyframes(args.soft_kf, original, args.patch_size) if args.soft_kf else []
        hard = _load_hard_keyframes(args.hard_kf) if args.hard_kf else []
    except (OSError, MammError, ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail("E_INPUT", f"cannot read control inputs: {exc}", EXIT_INPUT)

    trace_file = None
    try:
        if args.trace:
            trace_file = open(args.trace, "w")
        try:
            aligned = mamm_align(original, control, config,
                                 soft_keyframes=soft, hard_keyframes=hard,
                                 trace=trace_file)
        except SolverError as exc:
            return _fail("E_SOLVER", str(exc), EXIT_SOLVER)
        except (MammError, ValueError) as exc:
            return _fail("E_INPUT", str(exc), EXIT_INPUT)
        Path(args.out).write_text(from_internal(aligned))
    except OSError as exc:
        return _fail("E_INPUT", f"file error: {exc}", EXIT_INPUT)
    finally:
        if trace_file is not None:
            trace_file.close()
    return EXIT_OK


def _run_serve(args) -> int:
    if not args.library:
        return _fail("E_INPUT", "no motion library (use --library or MAMM_LIBRARY_DIR)",
                     EXIT_INPUT)
    import uvicorn

    from .service import create_app
    app = create_app(Path(args.library), frontend_dist=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "align":
        return _run_align(args)
    return _run_serve(args)


if __name__ == "__main__":
    sys.exit(main())
