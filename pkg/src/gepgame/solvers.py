"""Iteration engines for the eigen-game: full-batch, stochastic and smooth stochastic.

All three share one initialization, one retraction and one per-iteration
layout so that the stochastic solver fed exact matrices with ``gamma = 1``
reproduces the full-batch solver bit for bit.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import parallel
from .core import (
    OracleSolution,
    _orthonormal_basis,
    spd,
    spd_power,
    symmetric,
)
from .errors import ConfigInvalid, DimensionMismatch
from .estimators import MinibatchProblem
from .game import PlayerSet, direction_from_products, normalize_y, utility

# spawn_key prefixes for the derived RNG streams
_INIT_STREAM = 0
_DRAW_STREAM = 1


# --------------------------------------------------------------------------
# step-size schedules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StepSchedule:
    """``const`` (c), ``harm`` (c / t) or ``warmharm`` (linear warmup then ~1/(t + dt)).

    ``total`` is the horizon T for ``warmharm``; it is taken from the solver
    configuration and is not part of the flag string.
    """

    kind: str
    c: float = 0.0
    t_c: int = 0
    eta0: float = 0.0
    etaT: float = 0.0
    total: int = 0

    def __post_init__(self):
        if self.kind in ("const", "harm"):
            if not self.c > 0:
                raise ConfigInvalid(f"{self.kind} schedule needs c > 0, got {self.c}")
        elif self.kind == "warmharm":
            if not (self.eta0 > self.etaT > 0):
                raise ConfigInvalid("warmharm needs eta0 > etaT > 0")
            if self.t_c < 1:
                raise ConfigInvalid("warmharm needs t_c >= 1")
            if self.total and not self.total > self.t_c:
                raise ConfigInvalid(f"warmharm horizon {self.total} must exceed t_c={self.t_c}")
        else:
            raise ConfigInvalid(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def parse(cls, text: str, total: int = 0) -> "StepSchedule":
        """Parse ``const:<c>``, ``harm:<c>`` or ``warmharm:<t_c>,<eta0>,<etaT>``."""
        kind, sep, args = str(text).partition(":")
        if not sep:
            raise ConfigInvalid(f"schedule {text!r} lacks a ':'")
        try:
            if kind in ("const", "harm"):
                return cls(kind, c=float(args))
            if kind == "warmharm":
                t_c, eta0, eta_t = args.split(",")
                return cls(kind, t_c=int(t_c), eta0=float(eta0), etaT=float(eta_t), total=total)
        except ValueError as exc:
            if isinstance(exc, ConfigInvalid):
                raise
            raise ConfigInvalid(f"bad schedule arguments in {text!r}") from exc
        raise ConfigInvalid(f"unknown schedule kind {kind!r}")

    def with_total(self, total: int) -> "StepSchedule":
        if self.kind != "warmharm":
            return self
        return StepSchedule(self.kind, t_c=self.t_c, eta0=self.eta0, etaT=self.etaT, total=total)

    def __str__(self) -> str:
        if self.kind == "warmharm":
            return f"warmharm:{self.t_c},{self.eta0!r},{self.etaT!r}"
        return f"{self.kind}:{self.c!r}"


def schedule_rate(s: StepSchedule, t: int) -> float:
    if t < 1:
        raise ConfigInvalid(f"t must be >= 1, got {t}")
    if s.kind == "const":
        return s.c
    if s.kind == "harm":
        return s.c / t
    if not s.total:
        raise ConfigInvalid("warmharm schedule has no horizon; call with_total(T)")
    if t <= s.t_c:
        return s.eta0 * t / s.t_c
    # eta0 * (t_c + dt) / (t + dt) equals eta0 at t_c and etaT at T
    dt = (s.etaT * s.total - s.eta0 * s.t_c) / (s.eta0 - s.etaT)
    return s.eta0 * (s.t_c + dt) / (t + dt)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Optimizer:
    kind: str = "sgd"
    b1: float = 0.9
    b2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ConfigInvalid(f"optimizer must be 'sgd' or 'adam', got {self.kind!r}")
        if self.kind == "adam" and not (0 <= self.b1 < 1 and 0 <= self.b2 < 1 and self.eps > 0):
            raise ConfigInvalid("adam needs 0 <= b1, b2 < 1 and eps > 0")

    def to_dict(self) -> dict:
        if self.kind == "sgd":
            return {"kind": "sgd"}
        return {"kind": "adam", "b1": self.b1, "b2": self.b2, "eps": self.eps}

    @classmethod
    def from_dict(cls, raw) -> "Optimizer":
        if isinstance(raw, str):
            return cls(kind=raw)
        unknown = set(raw) - {"kind", "b1", "b2", "eps"}
        if unknown:
            raise ConfigInvalid(f"unknown optimizer keys: {sorted(unknown)}")
        return cls(**raw)


_CONFIG_KEYS = (
    "k", "iterations", "eta", "gamma", "rho", "nu",
    "batch_size", "workers", "optimizer", "seed",
)


@dataclass(frozen=True)
class SolverConfig:
    k: int
    iterations: int
    eta: StepSchedule = field(default_factory=lambda: StepSchedule("const", c=0.1))
    gamma: StepSchedule = field(default_factory=lambda: StepSchedule("const", c=1.0))
    rho: float = 0.0
    nu: Optional[float] = None
    batch_size: int = 1
    workers: int = 1
    optimizer: Optimizer = field(default_factory=Optimizer)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.eta, str):
            object.__setattr__(self, "eta", StepSchedule.parse(self.eta))
        if isinstance(self.gamma, str):
            object.__setattr__(self, "gamma", StepSchedule.parse(self.gamma))
        if isinstance(self.optimizer, (str, dict)):
            object.__setattr__(self, "optimizer", Optimizer.from_dict(self.optimizer))
        # schedules learn the horizon from the config
        object.__setattr__(self, "eta", self.eta.with_total(self.iterations))
        object.__setattr__(self, "gamma", self.gamma.with_total(self.iterations))
        self.validate()

    def validate(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ConfigInvalid(f"k must be a positive integer, got {self.k}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigInvalid(f"iterations must be a positive integer, got {self.iterations}")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise ConfigInvalid(f"rho must be >= 0, got {self.rho}")
        if self.nu is not None and not self.nu > self.rho:
            raise ConfigInvalid(f"nu must exceed rho (rho={self.rho}, nu={self.nu})")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigInvalid("batch_size and workers must be >= 1")
        if self.batch_size % self.workers:
            raise ConfigInvalid(
                f"batch_size {self.batch_size} is not divisible by workers {self.workers}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "iterations": self.iterations,
            "eta": str(self.eta),
            "gamma": str(self.gamma),
            "rho": self.rho,
            "nu": self.nu,
            "batch_size": self.batch_size,
            "workers": self.workers,
            "optimizer": self.optimizer.to_dict(),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, raw: dict) -> "SolverConfig":
        unknown = set(raw) - set(_CONFIG_KEYS)
        if unknown:
            raise ConfigInvalid(f"unknown SolverConfig keys: {sorted(unknown)}")
        if "k" not in raw or "iterations" not in raw:
            raise ConfigInvalid("SolverConfig needs at least 'k' and 'iterations'")
        return cls(**raw)

    @classmethod
    def from_json(cls, text: str) -> "SolverConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"SolverConfig JSON is malformed: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid("SolverConfig JSON must be an object")
        return cls.from_dict(raw)


# --------------------------------------------------------------------------
# trajectory
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryRecord:
    iter: int
    rayleigh: tuple
    utility: Optional[tuple] = None
    subspace_error: Optional[float] = None
    wall_clock_ms: float = 0.0


class _SubspaceMeter:
    """Subspace error against a fixed oracle, caching B^{1/2} and the true basis."""

    def __init__(self, B, oracle: OracleSolution, k: int):
        self.k = k
        self.b_sqrt = spd_power(np.asarray(B, dtype=np.float64), 0.5)
        self.u_true = _orthonormal_basis(self.b_sqrt @ oracle.eigenvectors[:k].T)

    def __call__(self, V) -> float:
        u_hat = _orthonormal_basis(self.b_sqrt @ V.T)
        ov = self.u_true.T @ u_hat
        return min(max(1.0 - float(np.sum(ov * ov)) / self.k, 0.0), 1.0)


# --------------------------------------------------------------------------
# optimizer
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "AdamState":
        return cls(np.zeros(d), np.zeros(d))


def adam_step(state: AdamState, g, lr: float, b1: float, b2: float, eps: float, t: int):
    """One bias-corrected Adam update for ascent; returns ``(new_state, step)``.

    The step is added to the iterate, which is then renormalized.
    """
    g = np.asarray(g, dtype=np.float64)
    if state.m.shape != g.shape or state.v.shape != g.shape:
        raise DimensionMismatch(f"Adam state {state.m.shape} does not match gradient {g.shape}")
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * (g * g)
    mhat = m / (1.0 - b1**t)
    vhat = v / (1.0 - b2**t)
    return AdamState(m, v), lr * mhat / (np.sqrt(vhat) + eps)


class _Stepper:
    """Applies the configured optimizer and retracts to the sphere."""

    def __init__(self, cfg: SolverConfig, k: int, d: int):
        self.opt = cfg.optimizer
        self.eta = cfg.eta
        self.states = [AdamState.zeros(d) for _ in range(k)] if self.opt.kind == "adam" else None

    def __call__(self, i: int, v: np.ndarray, g: np.ndarray, t: int) -> np.ndarray:
        lr = schedule_rate(self.eta, t)
        if self.states is None:
            step = lr * g
        else:
            o = self.opt
            self.states[i], step = adam_step(self.states[i], g, lr, o.b1, o.b2, o.eps, t)
        w = v + step
        return w / np.linalg.norm(w)


# --------------------------------------------------------------------------
# shared helpers
# --------------------------------------------------------------------------

def initial_vectors(k: int, d: int, seed: int) -> np.ndarray:
    """Seeded standard-Gaussian rows, normalized to the unit sphere."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(_INIT_STREAM,))))
    V = rng.standard_normal((k, d))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _draw_seq(seed: int, i: int, t: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(_DRAW_STREAM, i, t))


def _start(cfg: SolverConfig, d: int, init) -> np.ndarray:
    if cfg.k > d:
        raise ConfigInvalid(f"k={cfg.k} exceeds the problem dimension {d}")
    if init is None:
        return initial_vectors(cfg.k, d, cfg.seed)
    V = np.atleast_2d(np.array(init, dtype=np.float64))
    if V.shape != (cfg.k, d):
        raise DimensionMismatch(f"init has shape {V.shape}, expected {(cfg.k, d)}")
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _should_record(t: int, every: int, total: int) -> bool:
    return t == total or (every > 0 and t % every == 0)


class _Recorder:
    def __init__(self, exact, oracle, k, full_batch):
        self.t0 = time.perf_counter()
        self.exact = exact
        self.full_batch = full_batch
        self.meter = None
        if oracle is not None and exact is not None:
            self.meter = _SubspaceMeter(exact[1], oracle, k)
        self.records: list[TrajectoryRecord] = []

    def __call__(self, t: int, players: PlayerSet, est_rayleigh=None) -> None:
        V = players.vhat
        if self.exact is not None:
            A, B = self.exact
            ray = tuple(float(v @ A @ v) / float(v @ B @ v) for v in V)
        else:
            ray = tuple(est_rayleigh) if est_rayleigh is not None else tuple([math.nan] * len(V))
        util = None
        if self.full_batch:
            util = tuple(utility(i, players, *self.exact) for i in range(players.k))
        err = self.meter(V) if self.meter is not None else None
        ms = 1000.0 * (time.perf_counter() - self.t0)
        self.records.append(TrajectoryRecord(t, ray, util, err, ms))


# --------------------------------------------------------------------------
# Algorithm: deterministic
# --------------------------------------------------------------------------

def solve_deterministic(
    A,
    B,
    cfg: SolverConfig,
    record_every: int = 0,
    *,
    init=None,
    oracle: Optional[OracleSolution] = None,
):
    """Full-batch game: every player moves simultaneously from the iteration-start state.

    Returns ``(players, trajectory)``. A record is taken at t = 0, every
    ``record_every`` iterations, and at the final iteration.
    """
    A = symmetric(A, "A")
    B = spd(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"A is {A.shape} but B is {B.shape}")
    d = A.shape[0]
    V = _start(cfg, d, init)
    k = cfg.k
    players = PlayerSet(V, np.array([B @ v for v in V]))
    step = _Stepper(cfg, k, d)
    rec = _Recorder((A, B), oracle, k, full_batch=True)
    rec(0, players)

    for t in range(1, cfg.iterations + 1):
        V = players.vhat
        bv = np.empty_like(V)
        ys = np.empty_like(V)
        bys = np.empty_like(V)
        for j in range(k):
            bv[j] = B @ V[j]
            ys[j], scale = normalize_y(V[j], float(V[j] @ bv[j]), 0.0)
            bys[j] = scale * bv[j]
        new_v = np.empty_like(V)
        for i in range(k):
            upd = direction_from_products(V[i], A @ V[i], bv[i], ys[:i], bys[:i])
            new_v[i] = step(i, V[i], upd.direction, t)
        players = PlayerSet(new_v, np.array([B @ v for v in new_v]), players.aux_z)
        if _should_record(t, record_every, cfg.iterations):
            rec(t, players)
    return players, rec.records


# --------------------------------------------------------------------------
# Algorithms: stochastic and smooth stochastic
# --------------------------------------------------------------------------

def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def smooth_denominator(z: float, rho: float, nu: float) -> float:
    """``exp(log rho + (log nu - log rho) sigmoid(z))``, always inside (rho, nu)."""
    return math.exp(math.log(rho) + (math.log(nu) - math.log(rho)) * _sigmoid(z))


def smooth_z_gradient(vbv: float, z: float, rho: float, nu: float) -> float:
    """Ascent direction for z, zero exactly when the bracketed denominator equals ``vbv``."""
    den = smooth_denominator(z, rho, nu)
    s = _sigmoid(z)
    return (vbv - den) * den * (math.log(nu) - math.log(rho)) * s * (1.0 - s)


def _run_stochastic(problem: MinibatchProblem, cfg: SolverConfig, oracle, record_every, init, smooth, mode, threads):
    d = problem.dim
    V = _start(cfg, d, init)
    k = cfg.k
    players = PlayerSet(V, V.copy())
    step = _Stepper(cfg, k, d)
    rec = _Recorder(problem.exact, oracle, k, full_batch=False)
    plan = parallel.WorkerPlan(cfg.workers, cfg.batch_size // cfg.workers, mode)
    rho = cfg.rho
    nu = cfg.nu
    est_ray = [math.nan] * k
    rec(0, players, est_ray)

    with ThreadPoolExecutor(max_workers=parallel.pool_width(cfg.workers, threads)) as pool:
        for t in range(1, cfg.iterations + 1):
            gamma = schedule_rate(cfg.gamma, t)
            V = players.vhat
            aux = players.aux_bv.copy()
            z = players.aux_z.copy()
            dirs = np.empty_like(V)
            for i in range(k):
                estimates = problem.draw(_draw_seq(cfg.seed, i, t), cfg.batch_size, cfg.workers)
                snap = PlayerSet(V, aux, z)
                dens = [smooth_denominator(zj, rho, nu) for zj in z[:i]] if smooth else None
                upd, mean_bv = parallel.player_update(
                    plan, i, snap, estimates, 0.0 if smooth else rho, dens, pool
                )
                dirs[i] = upd.direction
                est_ray[i] = upd.rayleigh
                # running average of B v_i; gamma = 1 makes it the fresh estimate
                aux[i] = (1.0 - gamma) * aux[i] + gamma * mean_bv
                if smooth:
                    z[i] = z[i] + gamma * smooth_z_gradient(float(V[i] @ aux[i]), z[i], rho, nu)
            new_v = np.array([step(i, V[i], dirs[i], t) for i in range(k)])
            players = PlayerSet(new_v, aux, z)
            if _should_record(t, record_every, cfg.iterations):
                rec(t, players, est_ray)
    return players, rec.records


def solve_stochastic(
    problem: MinibatchProblem,
    cfg: SolverConfig,
    oracle: Optional[OracleSolution] = None,
    record_every: int = 0,
    *,
    init=None,
    mode: str = parallel.PER_WORKER,
    threads: Optional[int] = None,
):
    """Minibatch game with running-average estimates of each parent's ``B v``.

    Per iteration and player, every worker gets its own estimate pair; the
    averaged ``B v_i`` refreshes the player's auxiliary estimate before later
    players read it, and all vectors then step from the iteration-start state.
    ``cfg.rho`` is the clipping floor on parents' B-norms.
    """
    return _run_stochastic(problem, cfg, oracle, record_every, init, False, mode, threads)


def solve_smooth_stochastic(
    problem: MinibatchProblem,
    cfg: SolverConfig,
    oracle: Optional[OracleSolution] = None,
    record_every: int = 0,
    *,
    init=None,
    mode: str = parallel.PER_WORKER,
    threads: Optional[int] = None,
):
    """Like :func:`solve_stochastic`, with parents' B-norms learned in log space.

    Each denominator lives in ``(rho, nu)`` through a sigmoid of ``z_j``, and
    ``z`` follows its own averaging step with rate ``gamma``.
    """
    if cfg.nu is None or not 0 < cfg.rho < cfg.nu:
        raise ConfigInvalid(f"smooth variant needs 0 < rho < nu (rho={cfg.rho}, nu={cfg.nu})")
    return _run_stochastic(problem, cfg, oracle, record_every, init, True, mode, threads)
