"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Also checks that both backends draw the same normals (to a few ulps), so a
speedup never comes from computing something different.
"""

import argparse
import time

import numpy as np

from regime_sde.kernels import available_backends, get_backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def run(n, repeat):
    names = available_backends()
    results = {}
    for name in names:
        k = get_backend(name)
        y = np.zeros(n)
        x = np.full(n, 1.0)
        # first calls compile (numba) or warm caches (numpy)
        k.normals(1, 0, 16)
        k.advance_gaussian(np.zeros(16), 0.0, 1.0, 1, 1)
        k.advance_euler(np.ones(16), (1.0, 0.0, 0.0, 0.0, 0.1), (1.0, 0.0), 1e-3, 1.0, False, 1, 1)
        k.count_le(np.zeros(16), 0.0)
        results[name] = {
            "normals": best_of(lambda: k.normals(7, 3, n), repeat),
            "advance_gaussian": best_of(lambda: k.advance_gaussian(y, 0.0, 0.01, 7, 3), repeat),
            "advance_euler": best_of(
                lambda: k.advance_euler(x, (1.0, 0.0, 0.0, 0.0, 0.1), (1.0, 0.0), 1e-6, 1.0, False, 7, 3), repeat),
            "count_le": best_of(lambda: k.count_le(y, 0.0), repeat),
        }
    print(f"n = {n:,}, best of {repeat}")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) > 1 else ""))
    for kern in results[names[0]]:
        row = f"{kern:<18}" + "".join(f"{results[b][kern] * 1e3:>10.2f}ms" for b in names)
        if len(names) > 1:
            row += f"{results['numpy'][kern] / results['numba'][kern]:>11.1f}x"
        print(row)
    if len(names) > 1:
        a = get_backend("numba").normals(11, 5, n)
        b = get_backend("numpy").normals(11, 5, n)
        print(f"max |normal_numba - normal_numpy| = {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    run(a.n, a.repeat)
