"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from gepgame import _fallback
from gepgame.verify import random_spd, random_symmetric

try:
    from gepgame import _kernels
except ImportError:
    _kernels = None


def _cases(rng):
    for d in (8, 32, 64):
        a = random_symmetric(d, rng)
        yield f"jacobi_eigh d={d}", "jacobi_eigh", (a, 1e-14, 100)
    for d, k in ((64, 1), (256, 8), (1024, 16)):
        A, B = random_symmetric(d, rng), random_spd(d, 10.0, rng)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        ys = rng.standard_normal((k - 1, d))
        yield f"game_direction d={d} parents={k - 1}", "game_direction", (v, A @ v, B @ v, ys, ys @ B)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("python", _fallback)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{'case':40s}" + "".join(f"{n:>14s}" for n, _ in impls) + ("     speedup" if _kernels else ""))
    for label, fn, fargs in _cases(np.random.default_rng(0)):
        best = []
        for _, mod in impls:
            f = getattr(mod, fn)
            number = 3 if fn == "jacobi_eigh" else 200
            t = min(timeit.repeat(lambda: f(*fargs), number=number, repeat=args.repeat)) / number
            best.append(t)
        row = f"{label:40s}" + "".join(f"{t * 1e6:11.1f} us" for t in best)
        if len(best) == 2:
            row += f"{best[0] / best[1]:11.1f}x"
        print(row)
    if not _kernels:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
