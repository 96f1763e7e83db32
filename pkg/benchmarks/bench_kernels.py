"""Benchmark: compiled kernels vs the pure-numpy fallback.

Covers the two hot non-BLAS kernels (batched rotation projection and the
Sinkhorn scaling loop) plus a small end-to-end alignment. Run:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mamm import backend


def timeit(fn, repeat=5):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def random_rotations(rng, n):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], -2)


def bench_polar(rng):
    # one blend step at paper scale projects ~1441 frames x 25 joints
    n = 36_000
    M = 1.2 * random_rotations(rng, n) + 0.05 * rng.normal(size=(n, 3, 3))
    rows = []
    if backend.HAS_COMPILED:
        rows.append(("polar projection (compiled)",
                     timeit(lambda: backend._impl.polar_newton_batch(M))))
    rows.append(("polar projection (numpy Newton)",
                 timeit(lambda: backend.pure_polar_newton_batch(M))))
    rows.append(("polar projection (numpy SVD)",
                 timeit(lambda: np.linalg.svd(M))))
    return n, rows


def bench_sinkhorn(rng):
    # one projection at paper scale: 1431 x 584 kernel; the balanced limit
    # (exponent 1) is the iteration-heavy case
    K = np.exp(-20.0 * rng.random((1431, 584)))
    a = np.full(1431, 1 / 1431)
    b = np.full(584, 1 / 584)
    rows = []
    if backend.HAS_COMPILED:
        rows.append(("sinkhorn scaling (compiled)",
                     timeit(lambda: backend._impl.sinkhorn_scale(K, a, b, 1.0, 1e-12, 200))))
    rows.append(("sinkhorn scaling (numpy)",
                 timeit(lambda: backend.pure_sinkhorn_scale(K, a, b, 1.0, 1e-12, 200))))
    return K.shape, rows


def bench_end_to_end():
    import os
    import subprocess
    import sys
    code = (
        "import time, numpy as np\n"
        "import sys; sys.path.insert(0, 'tests')\n"
        "from helpers import make_cyclic_motion\n"
        "from mamm.adapters import from_waveform\n"
        "from mamm.pipeline import mamm_align, AlignmentConfig\n"
        "X = make_cyclic_motion(T=200, period=25)\n"
        "Y = from_waveform(np.sin(2*np.pi*np.arange(150)/30), fps=30)\n"
        "t0 = time.time()\n"
        "mamm_align(X, Y, AlignmentConfig())\n"
        "print(f'{time.time()-t0:.2f}')\n"
    )
    rows = []
    for label, env_extra in (("end-to-end align (compiled)", {}),
                             ("end-to-end align (pure python)", {"MAMM_PURE_PYTHON": "1"})):
        env = dict(os.environ, **env_extra)
        out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                             text=True, env=env)
        rows.append((label, float(out.stdout.strip())))
    return rows


def main():
    rng = np.random.default_rng(0)
    print(f"selected backend: {backend.BACKEND_NAME}\n")
    n, rows = bench_polar(rng)
    print(f"batched 3x3 rotation projection, n={n}:")
    for label, t in rows:
        print(f"  {label:38s} {t * 1e3:8.1f} ms")
    shape, rows = bench_sinkhorn(rng)
    print(f"\nsinkhorn scaling loop, K={shape[0]}x{shape[1]}, 200 iterations:")
    for label, t in rows:
        print(f"  {label:38s} {t * 1e3:8.1f} ms")
    print("\nend-to-end alignment (200-frame motion, 150-frame waveform, defaults):")
    for label, t in bench_end_to_end():
        print(f"  {label:38s} {t:8.2f} s")


if __name__ == "__main__":
    main()
