"""Pure-Python/NumPy versions of the compiled kernels.

Used when ``gepgame._kernels`` is not built, or when ``GEPGAME_PURE_PYTHON``
is set. Results agree with the compiled path to rounding, not bitwise.
"""
import math

import numpy as np


def jacobi_eigh(a_in, rel_tol, max_sweeps):
    a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    v = np.eye(n)
    tol = rel_tol * math.sqrt(float(np.sum(a * a)))

    offdiag = ~np.eye(n, dtype=bool)
    off = math.sqrt(float(np.sum(a[offdiag] ** 2)))
    sweep = 0
    while off > tol and sweep < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                x = a[:, p].copy()
                y = a[:, q].copy()
                a[:, p] = c * x - s * y
                a[:, q] = s * x + c * y
                x = a[p, :].copy()
                y = a[q, :].copy()
                a[p, :] = c * x - s * y
                a[q, :] = s * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                x = v[:, p].copy()
                y = v[:, q].copy()
                v[:, p] = c * x - s * y
                v[:, q] = s * x + c * y
        sweep += 1
        off = math.sqrt(float(np.sum(a[offdiag] ** 2)))
    return np.diagonal(a).copy(), v, sweep, off


def game_direction(v, av, bv, ys, bys):
    vbv = float(v @ bv)
    vav = float(v @ av)
    reward = vbv * av - vav * bv
    if len(ys):
        coef = ys @ av
        vby = bys @ v
        penalty = (coef * vbv) @ bys - float(coef @ vby) * bv
    else:
        penalty = np.zeros_like(v)
    return reward - penalty, float(np.linalg.norm(reward)), float(np.linalg.norm(penalty))
