"""In-process data parallelism over M workers with a fixed-order reduction.

Two modes are offered. ``per-worker-direction`` has each worker form its own
ascent direction from its own estimate pair and then averages the directions.
``sharded-matvec`` averages the workers' ``A v`` and ``B v`` products first and
forms a single direction from them. With exact matrices the two agree; with
minibatch estimates they differ, since one averages products of estimates and
the other takes products of averaged estimates.
"""
from __future__ import annotations

import os
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch
from .game import PlayerSet, UpdateDirection, direction_from_products, parent_terms

PER_WORKER = "per-worker-direction"
SHARDED = "sharded-matvec"
MODES = (PER_WORKER, SHARDED)

THREADS_ENV = "GEPGAME_THREADS"


@dataclass(frozen=True)
class WorkerPlan:
    M: int
    per_worker_batch: int = 1
    mode: str = PER_WORKER

    def __post_init__(self):
        if self.M < 1 or self.per_worker_batch < 1:
            raise ConfigInvalid("WorkerPlan needs M >= 1 and per_worker_batch >= 1")
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode must be one of {MODES}, got {self.mode!r}")


def pool_width(workers: int, requested: Optional[int] = None) -> int:
    """Thread count for ``workers`` tasks, capped by ``$GEPGAME_THREADS`` when set."""
    width = workers if requested is None else requested
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            width = min(width, int(cap))
        except ValueError:
            raise ConfigInvalid(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, width)


def ordered_mean(parts: Sequence[np.ndarray]) -> np.ndarray:
    """``(1/M) * sum(parts)`` as a flat left-to-right sum, independent of scheduling."""
    if not parts:
        raise ValueError("nothing to reduce")
    acc = np.array(parts[0], dtype=np.float64, copy=True)
    for p in parts[1:]:
        acc += p
    acc /= len(parts)
    return acc


def _map(fn, items, executor: Optional[Executor]):
    if executor is None or len(items) == 1:
        return [fn(x) for x in items]
    # map() yields results in submission order whatever the completion order
    return list(executor.map(fn, items))


def player_update(
    plan: WorkerPlan,
    i: int,
    players: PlayerSet,
    estimates: Sequence[tuple],
    rho: float = 0.0,
    denominators=None,
    executor: Optional[Executor] = None,
) -> tuple[UpdateDirection, np.ndarray]:
    """Reduced direction for player ``i`` plus the worker-averaged ``B v_i``."""
    if len(estimates) != plan.M:
        raise DimensionMismatch(f"plan has M={plan.M} workers but {len(estimates)} estimate pairs")
    v = players.vhat[i]
    ys, bys = parent_terms(i, players, rho, denominators)

    def matvecs(est):
        A_m, B_m = est
        return A_m @ v, B_m @ v

    prods = _map(matvecs, list(estimates), executor)
    mean_bv = ordered_mean([bv for _, bv in prods])
    if plan.mode == SHARDED:
        upd = direction_from_products(v, ordered_mean([av for av, _ in prods]), mean_bv, ys, bys)
        return upd, mean_bv

    ups = _map(lambda p: direction_from_products(v, p[0], p[1], ys, bys), prods, executor)
    m = len(ups)
    upd = UpdateDirection(
        direction=ordered_mean([u.direction for u in ups]),
        reward_norm=sum(u.reward_norm for u in ups) / m,
        penalty_norm=sum(u.penalty_norm for u in ups) / m,
        rayleigh=sum(u.rayleigh for u in ups) / m,
    )
    return upd, mean_bv


def parallel_directions(
    plan: WorkerPlan,
    i: int,
    players: PlayerSet,
    estimates: Sequence[tuple],
    rho: float = 0.0,
    denominators=None,
    executor: Optional[Executor] = None,
) -> UpdateDirection:
    """Average of the per-worker directions (or the sharded-matvec direction) for player ``i``.

    ``estimates`` holds one ``(A_m, B_m)`` pair per worker, in worker order.
    """
    return player_update(plan, i, players, estimates, rho, denominators, executor)[0]


def draw_estimates(problem, seq: np.random.SeedSequence, plan: WorkerPlan) -> list:
    """One estimate pair per worker from ``problem`` (see ``MinibatchProblem.draw``)."""
    return problem.draw(seq, plan.M * plan.per_worker_batch, plan.M)
