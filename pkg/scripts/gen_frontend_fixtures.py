"""Generate recorded fixtures for the frontend contract tests.

Smoothing fixtures capture the server-side resample+smooth outputs so the
client implementation can be checked against them to 1e-6; the stub result
fixture feeds the playback math test.
"""

import json
from pathlib import Path

import numpy as np

from mamm.adapters import from_sketch, gaussian_smooth

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def smoothing_cases():
    rng = np.random.default_rng(42)
    cases = []
    # raw kernel smoothing on a noisy curve
    for sigma in (0.0, 1.0, 2.0, 3.5):
        values = np.stack([np.cumsum(rng.normal(size=25)),
                           np.cumsum(rng.normal(size=25))], axis=1)
        cases.append({
            "kind": "smooth",
            "sigma": sigma,
            "values": values.tolist(),
            "expected": gaussian_smooth(values, sigma).tolist(),
        })
    # full resample + smooth pipeline
    t = np.sort(rng.uniform(0, 1500, 40))
    t[0], t[-1] = 0.0, 1500.0
    pts = [{"x": float(np.sin(u / 150)), "y": float(np.cos(u / 211)), "t_ms": float(u)}
           for u in t]
    for sigma, fps in ((2.0, 30.0), (0.0, 24.0)):
        seq = from_sketch(pts, target_fps=fps, sigma=sigma)
        cases.append({
            "kind": "resample_smooth",
            "sigma": sigma,
            "target_fps": fps,
            "points": pts,
            "expected": seq.frames.tolist(),
        })
    return cases


def stub_result():
    rng = np.random.default_rng(7)
    T, J = 100, 4
    base = np.zeros((T, J, 3))
    for j in range(J):
        base[:, j, 1] = j
    wob = 0.3 * np.sin(np.arange(T)[:, None, None] / 9 + np.arange(J)[None, :, None])
    frames = base + wob
    return {
        "frames": frames.tolist(),
        "fps": 30.0,
        "joint_names": [f"J{j}" for j in range(J)],
        "bones": [[j - 1, j] for j in range(1, J)],
        "trace_summary": {"records": 12, "final_objective": -1.0,
                          "final_marginal_violation": 1e-12},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "smoothing_cases.json").write_text(json.dumps(smoothing_cases()))
    (OUT / "align_result.json").write_text(json.dumps(stub_result()))
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
