"""HTTP service exposing the motion library and alignment to the sketch UI.

Endpoints (JSON):

* ``GET /api/motions`` — library listing (id, name, frames, fps, joints).
* ``GET /api/motions/{id}`` — skeleton plus world-space joint positions.
* ``POST /api/align`` — synchronous alignment; returns world-space joint
  positions per output frame. Requests time out after 120 s with a 504.

The motion library is a read-only directory of BVH files; each request owns
its own pipeline state, so concurrent aligns are independent.
"""

from __future__ import annotations

import asyncio
import functools
from pathlib import Path
from typing import Any, Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .adapters import from_audio_features, from_labels, from_motion, from_sketch, from_waveform
from .exceptions import MammError
from .motion import MotionSequence, features_of, load_bvh, world_joint_positions
from .pipeline import AlignmentConfig, HardKeyframe, SoftKeyframe, mamm_align

ALIGN_TIMEOUT_S = 120.0


class SketchPoint(BaseModel):
    x: float
    y: float
    t_ms: float


class AlignParams(BaseModel):
    alpha: float = 0.8
    lam: float = Field(default=0.05, alias="lambda")
    epsilon: float = 1.0
    stages: int = 6
    iters_per_stage: int = 20
    patch_size: int = 11
    coarse_factor: float = 4.0
    norm_mode_x: Literal["max", "mean"] = "mean"
    norm_mode_y: Literal["max", "mean", "auto"] = "auto"

    model_config = {"populate_by_name": True}


class SoftKeyframePayload(BaseModel):
    # a single canvas point (constant patch) or explicit patch rows
    canvas_patch: list[list[float]] | list[float] | None = None
    control_patch: list[list[float]] | None = None
    motion_frame_start: int
    weight: float = 1.0


class HardKeyframePayload(BaseModel):
    control_start: int
    control_end: int
    motion_start: int


class AlignRequest(BaseModel):
    motion_id: str
    control: dict[str, Any]
    control_type: Literal["sketch", "waveform", "labels", "audio", "motion"]
    params: AlignParams = AlignParams()
    soft_keyframes: list[SoftKeyframePayload] = []
    hard_keyframes: list[HardKeyframePayload] = []
    loop: bool = False


class MotionLibrary:
    """Lazy, cached view of a directory of BVH files."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._cache: dict[str, MotionSequence] = {}

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.bvh"))

    def load(self, motion_id: str) -> MotionSequence:
        if motion_id not in self._cache:
            path = self.root / f"{motion_id}.bvh"
            if not path.exists() or motion_id not in self.ids():
                raise KeyError(motion_id)
            self._cache[motion_id] = load_bvh(path.read_text())
        return self._cache[motion_id]


def _control_from_payload(payload: dict, control_type: str, library: MotionLibrary):
    if control_type == "sketch":
        return from_sketch(payload["points"],
                           target_fps=float(payload.get("target_fps", 30.0)),
                           sigma=float(payload.get("sigma", 2.0)))
    if control_type == "waveform":
        return from_waveform(payload["values"], fps=float(payload.get("fps", 30.0)))
    if control_type == "labels":
        return from_labels(payload["labels"], int(payload["num_classes"]),
                           fps=float(payload.get("fps", 30.0)))
    if control_type == "audio":
        return from_audio_features(np.asarray(payload["features"], dtype=np.float64),
                                   fps=float(payload.get("fps", 30.0)))
    if control_type == "motion":
        return from_motion(library.load(payload["motion_id"]))
    raise ValueError(f"unknown control type {control_type!r}")


def _soft_keyframes(request: AlignRequest, original: MotionSequence, control_width: int):
    fx = features_of(original)
    p = request.params.patch_size
    out = []
    for item in request.soft_keyframes:
        if item.control_patch is not None:
            cp = np.asarray(item.control_patch, dtype=np.float64)
        elif item.canvas_patch is not None:
            arr = np.asarray(item.canvas_patch, dtype=np.float64)
            cp = np.tile(arr.ravel(), (p, 1)) if arr.ndim == 1 else arr
        else:
            raise ValueError("soft keyframe needs canvas_patch or control_patch")
        if cp.shape != (p, control_width):
            raise ValueError(f"soft keyframe control patch must be ({p}, {control_width})")
        start = item.motion_frame_start
        mp = fx.frames[start:start + p]
        if mp.shape[0] != p:
            raise ValueError(f"motion_frame_start {start} out of range")
        out.append(SoftKeyframe(control_patch=cp, motion_patch=mp, weight=item.weight))
    return out


def _run_alignment(library: MotionLibrary, request: AlignRequest) -> dict:
    original = library.load(request.motion_id)
    control = _control_from_payload(request.control, request.control_type, library)
    p = request.params
    config = AlignmentConfig(alpha=p.alpha, lam=p.lam, epsilon=p.epsilon,
                             stages=p.stages, iters_per_stage=p.iters_per_stage,
                             patch_size=p.patch_size, coarse_factor=p.coarse_factor,
                             norm_mode_x=p.norm_mode_x, norm_mode_y=p.norm_mode_y,
                             loop=request.loop)
    soft = _soft_keyframes(request, original, control.width)
    hard = [HardKeyframe(control_range=(h.control_start, h.control_end),
                         motion_range=(h.motion_start, h.motion_start + (h.control_end - h.control_start)))
            for h in request.hard_keyframes]
    trace: list = []
    aligned = mamm_align(original, control, config, soft_keyframes=soft,
                         hard_keyframes=hard, trace=trace)
    positions = world_joint_positions(aligned)
    return {
        "frames": positions.tolist(),
        "fps": aligned.fps,
        "joint_names": aligned.skeleton.names,
        "bones": [[j.parent, i] for i, j in enumerate(aligned.skeleton.joints) if j.parent is not None],
        "trace_summary": {
            "records": len(trace),
            "final_objective": trace[-1]["objective"] if trace else None,
            "final_marginal_violation": trace[-1]["marginal_violation"] if trace else None,
        },
    }


def create_app(library_dir: Path | str, frontend_dist: Path | str | None = None) -> FastAPI:
    library = MotionLibrary(Path(library_dir))
    app = FastAPI(title="mamm", version="0.1.0")

    @app.get("/api/motions")
    def list_motions():
        out = []
        for motion_id in library.ids():
            m = library.load(motion_id)
            out.append({"id": motion_id, "name": motion_id, "frames": m.n_frames,
                        "fps": m.fps, "joints": m.skeleton.n_joints})
        return out

    @app.get("/api/motions/{motion_id}")
    def get_motion(motion_id: str):
        try:
            m = library.load(motion_id)
        except (KeyError, FileNotFoundError):
            raise HTTPException(status_code=404, detail=f"unknown motion {motion_id!r}")
        positions = world_joint_positions(m)
        return {
            "id": motion_id,
            "fps": m.fps,
            "joint_names": m.skeleton.names,
            "bones": [[j.parent, i] for i, j in enumerate(m.skeleton.joints) if j.parent is not None],
            "frames": positions.tolist(),
        }

    @app.post("/api/align")
    async def align(request: AlignRequest):
        if request.motion_id not in library.ids():
            raise HTTPException(status_code=404, detail=f"unknown motion {request.motion_id!r}")
        loop = asyncio.get_running_loop()
        job = functools.partial(_run_alignment, library, request)
        try:
            return await asyncio.wait_for(loop.run_in_executor(None, job), ALIGN_TIMEOUT_S)
        except asyncio.TimeoutError:
            raise HTTPException(status_code=504, detail="alignment timed out")
        except (MammError, ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    if frontend_dist is not None and Path(frontend_dist).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(frontend_dist), html=True), name="ui")
    return app
