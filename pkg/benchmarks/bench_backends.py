"""Timing comparison of the numba and pure-numpy kernel backends.

Runs itself twice (QTOPT_NUMBA=1 / QTOPT_NUMBA=0) and times the two hot
codec paths: entropy-coded size accounting and full reconstruction.

    python benchmarks/bench_backends.py
"""

import os
import subprocess
import sys
import time

import numpy as np


def _bench_worker():
    from scipy.ndimage import gaussian_filter

    import qtopt
    from qtopt import codec
    from qtopt.qtable import standard_table

    rng = np.random.default_rng(0)
    plane = np.clip(
        gaussian_filter(rng.normal(0, 1, (512, 512)), 6) * 110
        + rng.normal(0, 12, (512, 512))
        + 128,
        0,
        255,
    ).astype(np.uint8)
    table = standard_table()

    # warm up (JIT compilation on the numba side)
    codec.entropy_size(plane, table)
    codec.reconstruct(plane, table)

    n = 20
    t0 = time.perf_counter()
    for _ in range(n):
        codec.entropy_size(plane, table)
    size_ms = (time.perf_counter() - t0) / n * 1000

    t0 = time.perf_counter()
    for _ in range(n):
        codec.reconstruct(plane, table)
    recon_ms = (time.perf_counter() - t0) / n * 1000

    print(f"{qtopt.BACKEND},{size_ms:.2f},{recon_ms:.2f}")


def main():
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, QTOPT_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--worker"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        ).stdout.strip().splitlines()[-1]
        backend, size_ms, recon_ms = out.split(",")
        results[backend] = (float(size_ms), float(recon_ms))

    print(f"{'backend':<10} {'entropy_size (ms)':>18} {'reconstruct (ms)':>18}")
    for backend, (size_ms, recon_ms) in results.items():
        print(f"{backend:<10} {size_ms:>18.2f} {recon_ms:>18.2f}")
    if "numba" in results and "numpy" in results:
        s = results["numpy"][0] / results["numba"][0]
        r = results["numpy"][1] / results["numba"][1]
        print(f"\nnumba speedup: entropy_size x{s:.1f}, reconstruct x{r:.1f}")


if __name__ == "__main__":
    if "--worker" in sys.argv:
        _bench_worker()
    else:
        main()
