"""Randomized property checks run by ``gepgame verify``.

Each check returns a :class:`PropertyResult`. The ``fast`` suite uses small
trial counts; ``full`` adds the 10^4-draw unbiasedness Monte Carlo.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    angle_under_metric,
    b_orthogonality_defect,
    generalized_rayleigh,
    oracle_residuals,
    oracle_solve,
)
from .datagen import generate_correlated_views, generate_random_gep, random_orthogonal
from .estimators import cca_matrices, cca_problem, raw_spd_problem
from .game import PlayerSet, eigengame_unloaded_direction, update_direction
from .tolerances import ORACLE_B_ORTHO_RTOL, ORACLE_RESIDUAL_RTOL


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def random_spd(d: int, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """SPD matrix with spectrum log-spaced on [1, kappa] and a random eigenbasis."""
    q = random_orthogonal(d, rng)
    w = np.exp(np.linspace(0.0, math.log(kappa), d)) if d > 1 else np.ones(1)
    m = (q * w) @ q.T
    return 0.5 * (m + m.T)


def random_symmetric(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d))
    return 0.5 * (g + g.T)


# --------------------------------------------------------------------------
# individual properties
# --------------------------------------------------------------------------

def check_oracle(rng, trials: int) -> tuple[bool, str]:
    worst_res = worst_orth = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 17))
        A = random_symmetric(d, rng)
        B = random_spd(d, float(10 ** rng.uniform(0, 3)), rng)
        sol = oracle_solve(A, B, d)
        worst_res = max(worst_res, float(oracle_residuals(A, B, sol).max()))
        worst_orth = max(worst_orth, b_orthogonality_defect(sol.eigenvectors, B))
    ok = worst_res <= ORACLE_RESIDUAL_RTOL and worst_orth <= ORACLE_B_ORTHO_RTOL
    return ok, f"max residual {worst_res:.2e}, max B-orth defect {worst_orth:.2e}"


def check_tangency(rng, trials: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        A = random_symmetric(d, rng)
        B = random_spd(d, 10.0, rng)
        ps = PlayerSet.from_vectors(rng.standard_normal((k, d)), B)
        for i in range(k):
            g = update_direction(i, ps, A, B).direction
            nrm = float(np.linalg.norm(g))
            if nrm > 0:
                worst = max(worst, abs(float(g @ ps.vhat[i])) / nrm)
    return worst <= 1e-8, f"max |<g, v>| / |g| = {worst:.2e}"


def check_identity_b(rng, trials: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d + 1))
        A = random_symmetric(d, rng)
        ps = PlayerSet.from_vectors(rng.standard_normal((k, d)))
        eye = np.eye(d)
        for i in range(k):
            g = update_direction(i, ps, A, eye).direction
            ref = eigengame_unloaded_direction(i, ps.vhat, A)
            worst = max(worst, float(np.max(np.abs(g - ref))))
    return worst <= 1e-10, f"max elementwise gap {worst:.2e}"


def lower_angle_bound(kappa: float) -> float:
    return 0.125 * (1.0 + kappa) ** -1.25


def upper_angle_bound(kappa: float, eps: float) -> float:
    return 4.0 * math.sqrt((1.0 + kappa) * math.sqrt(kappa) * eps + (kappa**2 / 4.0 + 1.0) * eps**2)


def check_angle_lower(rng, trials: int) -> tuple[bool, str]:
    margin = math.inf
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        kappa = float(10 ** rng.uniform(0, 4))
        C = random_spd(d, kappa, rng)
        q = random_orthogonal(d, rng)
        theta = angle_under_metric(q[:, 0], q[:, 1], C)
        margin = min(margin, theta / lower_angle_bound(kappa))
    return margin > 1.0, f"min angle / bound = {margin:.3g}"


def check_angle_upper(rng, trials: int) -> tuple[bool, str]:
    margin = math.inf
    for _ in range(trials):
        kappa = float(10 ** rng.uniform(0, 4))
        C = random_spd(2, kappa, rng)
        eps = float(rng.uniform(0.0, 1.0)) * min(1.0 / kappa, 0.5)
        u = np.array([1.0, 0.0])
        v = np.array([math.sqrt(1.0 - eps * eps), eps])
        theta = angle_under_metric(u, v, C)
        bound = upper_angle_bound(kappa, eps)
        margin = min(margin, (bound - theta) / max(bound, 1e-300))
    return margin >= 0.0, f"min relative slack {margin:.3g}"


def monte_carlo_direction(problem, players: PlayerSet, i: int, batch: int, draws: int, seed: int):
    """Mean and standard error of the stochastic direction over independent draws."""
    d = players.dim
    acc = np.zeros(d)
    acc2 = np.zeros(d)
    for t in range(draws):
        (A_est, B_est), = problem.draw(np.random.SeedSequence(seed, spawn_key=(t,)), batch, 1)
        g = update_direction(i, players, A_est, B_est).direction
        acc += g
        acc2 += g * g
    mean = acc / draws
    var = np.maximum(acc2 / draws - mean * mean, 0.0) * draws / (draws - 1)
    return mean, np.sqrt(var / draws)


def check_unbiased(rng, draws: int) -> tuple[bool, str]:
    """Frozen exact-aux players; stochastic mean within 3 SE of the full-batch direction."""
    worst = 0.0
    A, B, _ = generate_random_gep(5, 3, 0.5, 5.0, rng)
    data = generate_correlated_views(100_000, 3, 2, (0.8, 0.4), rng)
    setups = [(raw_spd_problem(A, B, 0.3), A, B, 1), (cca_problem(data), *cca_matrices(data), 50)]
    for problem, A_, B_, batch in setups:
        d = A_.shape[0]
        ps = PlayerSet.from_vectors(rng.standard_normal((3, d)), B_)
        # the last player carries every penalty term
        exact = update_direction(2, ps, A_, B_).direction
        mean, se = monte_carlo_direction(problem, ps, 2, batch, draws, int(rng.integers(2**32)))
        worst = max(worst, float(np.max(np.abs(mean - exact) / se)))
    return worst <= 3.0, f"max |mean - exact| / SE = {worst:.2f} over {draws} draws"


def check_rayleigh_consistency(rng, trials: int) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        A = random_symmetric(d, rng)
        B = random_spd(d, 20.0, rng)
        sol = oracle_solve(A, B, d)
        for lam, v in zip(sol.eigenvalues, sol.eigenvectors):
            worst = max(worst, abs(generalized_rayleigh(v, A, B) - lam) / max(1.0, abs(lam)))
    return worst <= 1e-10, f"max |rayleigh - lambda| = {worst:.2e}"


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------

def _suite(kind: str) -> list[tuple[str, Callable]]:
    fast = kind == "fast"
    return [
        ("oracle residual and B-orthogonality", lambda r: check_oracle(r, 50 if fast else 200)),
        ("oracle eigenvalue equals Rayleigh quotient", lambda r: check_rayleigh_consistency(r, 20 if fast else 100)),
        ("update direction is tangent", lambda r: check_tangency(r, 50 if fast else 200)),
        ("B = I reduces to the unloaded direction", lambda r: check_identity_b(r, 50 if fast else 100)),
        ("angle lower bound for orthogonal pairs", lambda r: check_angle_lower(r, 1000)),
        ("angle upper bound for nearby pairs", lambda r: check_angle_upper(r, 1000)),
        ("stochastic direction is unbiased", lambda r: check_unbiased(r, 1000 if fast else 10_000)),
    ]


def run_suite(kind: str = "fast", seed: int = 0) -> list[PropertyResult]:
    if kind not in ("fast", "full"):
        raise ValueError(f"suite must be 'fast' or 'full', got {kind!r}")
    out = []
    for idx, (name, fn) in enumerate(_suite(kind)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash counts as a failed property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(PropertyResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out


def format_table(results: list[PropertyResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'property':<{width}}  result  seconds  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.seconds:7.2f}  {r.detail}")
    return "\n".join(lines)
