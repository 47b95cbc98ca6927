"""Numba vs numpy timings for the three hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Both implementations are called directly, so the PAIRZERO_DISABLE_NUMBA flag
does not matter here.  The first numba call (compilation or cache load) is
excluded; each row reports the best of ``--repeat`` runs and checks that the
two paths agree.
"""

import argparse
import time

import numpy as np

from pairzero import power, rng
from pairzero._accel import HAVE_NUMBA
from pairzero.privacy import _tail_count_nb, _tail_count_np


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    key = np.uint64(rng.derive_key(7, 1))
    n = 2_000_000
    yield ("normal stream, 2e6 draws",
           lambda: rng._normals_nb(key, n), lambda: rng._normals_np(int(key), n),
           lambda a, b: np.max(np.abs(a - b)) < 1e-12)

    a = np.full(1000, 0.047)
    trials = 20_000
    yield ("privacy-loss tail, T=1000, 2e4 trials",
           lambda: _tail_count_nb(a, key, trials, 5.0), lambda: _tail_count_np(a, key, trials, 5.0),
           lambda x, y: abs(x - y) <= 2)

    g = np.random.default_rng(0)
    obj = g.uniform(0.1, 1.0, (3, 401))
    cost = g.uniform(0.0, 1.0, (3, 401))
    yield ("grid minimum, 3 x 401 axes",
           lambda: power._grid_min_nb(obj, cost, 1.2), lambda: power._grid_min_np(obj, cost, 1.2),
           lambda x, y: x[0] == y[0])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<40} {'numba':>10} {'numpy':>10} {'speedup':>8}  agree")
    for name, nb, npy, agree in cases():
        nb()  # compile or load from cache
        t_nb, out_nb = best_of(nb, args.repeat)
        t_np, out_np = best_of(npy, args.repeat)
        print(f"{name:<40} {t_nb * 1e3:>8.1f}ms {t_np * 1e3:>8.1f}ms {t_np / t_nb:>7.1f}x  "
              f"{'yes' if agree(out_nb, out_np) else 'NO'}")


if __name__ == "__main__":
    main()
