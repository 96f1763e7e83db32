"""Control-modality adapters: everything becomes a FeatureSequence.

File conventions (used by the CLI and service):

* sketch JSON: ``{"points": [{"x":..,"y":..,"t_ms":..}], "sigma":.., "target_fps":..}``
* waveform CSV: one scalar per line; optional ``# fps=30`` header line
* labels JSON: ``{"labels": [int, ...], "num_classes": K, "fps":..}``
* audio CSV: 40 comma-separated reals per line; optional ``# fps=30`` header
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .motion import MotionSequence, features_of
from .patching import FeatureSequence


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Convolve each column with a discrete Gaussian (radius 3*sigma).

    The kernel is renormalized at the boundaries, so constant inputs stay
    constant all the way to the edges. ``sigma = 0`` is a no-op.
    """
    values = np.asarray(values, dtype=np.float64)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return values.copy()
    radius = int(np.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    T = values.shape[0]
    acc = np.zeros_like(values)
    weight = np.zeros(T)
    for off, w in zip(offsets, kernel):
        lo, hi = max(0, -off), min(T, T - off)
        acc[lo:hi] += w * values[lo + off:hi + off]
        weight[lo:hi] += w
    return acc / weight[:, None]


def from_sketch(points, target_fps: float, sigma: float = 2.0) -> FeatureSequence:
    """Resample a drawn 2D curve at constant time steps, then smooth it.

    ``points`` are (x, y, t_ms) samples with non-decreasing timestamps.
    Absolute canvas position is retained; the alignment only ever looks at
    distances between patches, so where the curve sits does not matter.
    """
    pts = _as_points(points)
    if pts.shape[0] < 2:
        raise ValueError("a sketch needs at least 2 points")
    t = pts[:, 2]
    if (np.diff(t) < 0).any():
        raise ValueError("sketch timestamps must be non-decreasing")
    duration_s = (t[-1] - t[0]) / 1000.0
    n = max(2, int(round(duration_s * target_fps)) + 1)
    grid = np.linspace(t[0], t[-1], n)
    xy = np.stack([np.interp(grid, t, pts[:, 0]), np.interp(grid, t, pts[:, 1])], axis=1)
    return FeatureSequence(frames=gaussian_smooth(xy, sigma), fps=target_fps,
                           domain_tag="sketch2d")


def _as_points(points) -> np.ndarray:
    if len(points) and isinstance(points[0], dict):
        return np.array([[p["x"], p["y"], p["t_ms"]] for p in points], dtype=np.float64)
    return np.asarray(points, dtype=np.float64).reshape(-1, 3)


def from_waveform(values, fps: float) -> FeatureSequence:
    """One-dimensional scalar series, used as-is."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("waveform is empty")
    return FeatureSequence(frames=v[:, None], fps=fps, domain_tag="waveform1d")


def from_labels(labels, num_classes: int, fps: float = 30.0) -> FeatureSequence:
    """Temporal segmentation labels as one-hot rows."""
    ids = np.asarray(labels, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("label sequence is empty")
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    if ids.min() < 0 or ids.max() >= num_classes:
        raise ValueError(f"label ids must lie in [0, {num_classes})")
    frames = np.zeros((ids.size, num_classes))
    frames[np.arange(ids.size), ids] = 1.0
    return FeatureSequence(frames=frames, fps=fps, domain_tag="labels")


def from_audio_features(matrix, fps: float, expected_dim: int = 40) -> FeatureSequence:
    """Precomputed audio feature rows (MFCC by convention), passed through."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != expected_dim:
        raise ValueError(f"audio features must be (frames, {expected_dim}), got {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("audio features contain NaN/Inf")
    return FeatureSequence(frames=m, fps=fps, domain_tag="audio")


def from_motion(motion: MotionSequence, channel_weights=None) -> FeatureSequence:
    """Featurize a motion for use as a control sequence.

    Skeletons never need to match the original's: distances are computed
    within each domain, so the control's feature width is free to differ.
    Weights (per feature channel) are baked in here because control features
    only ever feed distance computations.
    """
    seq = features_of(motion)
    if channel_weights is None:
        return seq
    w = np.asarray(channel_weights, dtype=np.float64)
    if w.shape != (seq.width,):
        raise ValueError(f"channel_weights must have {seq.width} entries")
    return FeatureSequence(frames=seq.frames * w, fps=seq.fps, domain_tag="motion",
                           displacement=seq.displacement,
                           rotation_blocks=seq.rotation_blocks)


# ---------------------------------------------------------------------------
# file loaders


def _read_fps_header(lines: list[str], default: float | None) -> tuple[float | None, list[str]]:
    fps = default
    body = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("#"):
            txt = stripped.lstrip("#").strip()
            if txt.startswith("fps"):
                fps = float(txt.split("=", 1)[1])
            continue
        if stripped:
            body.append(stripped)
    return fps, body


def load_sketch_json(path, default_fps: float = 30.0) -> FeatureSequence:
    payload = json.loads(Path(path).read_text())
    return from_sketch(payload["points"],
                       target_fps=float(payload.get("target_fps", default_fps)),
                       sigma=float(payload.get("sigma", 2.0)))


def load_waveform_csv(path, fps: float = 30.0) -> FeatureSequence:
    file_fps, body = _read_fps_header(Path(path).read_text().splitlines(), fps)
    values = [float(line.split(",")[0]) for line in body]
    return from_waveform(values, fps=file_fps)


def load_labels_json(path, fps: float = 30.0) -> FeatureSequence:
    payload = json.loads(Path(path).read_text())
    return from_labels(payload["labels"], int(payload["num_classes"]),
                       fps=float(payload.get("fps", fps)))


def load_audio_csv(path, fps: float = 30.0, expected_dim: int = 40) -> FeatureSequence:
    file_fps, body = _read_fps_header(Path(path).read_text().splitlines(), fps)
    rows = []
    for i, line in enumerate(body):
        parts = [p for p in line.replace(",", " ").split() if p]
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            if i == 0:
                continue  # tolerated text header row
            raise ValueError(f"audio CSV line {i + 1}: non-numeric value") from None
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise ValueError(f"audio CSV has ragged rows (widths {sorted(widths)})")
    return from_audio_features(np.array(rows), fps=file_fps, expected_dim=expected_dim)
