"""Player utilities and ascent directions for the generalized eigen-game.

Player ``i`` picks a unit vector ``vhat[i]`` and is rewarded by its generalized
Rayleigh quotient, minus penalties for B-aligning with its parents
(players ``j < i``). Indices are zero-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .core import generalized_rayleigh
from .errors import DimensionMismatch, NonPositiveDenominator
from .tolerances import UNIT_NORM_ATOL

# Small two-dimensional problem whose B is far from the identity (condition
# number around 16); used by the utility-curve harness and several tests.
EXAMPLE_2X2_A = np.array([[0.77759061, 0.26842584], [0.26842584, 0.87788983]])
EXAMPLE_2X2_B = np.array([[0.2325605, 0.06042127], [0.06042127, 0.03241424]])


@dataclass
class PlayerSet:
    """Joint strategy of all players plus their auxiliary running estimates.

    Attributes:
      vhat: (k, d) unit-norm rows, one per player.
      aux_bv: (k, d) running estimates of ``B @ vhat[i]``.
      aux_z: (k,) log-space denominator parameters (smooth variant only).
    """

    vhat: np.ndarray
    aux_bv: np.ndarray
    aux_z: np.ndarray = field(default=None)

    def __post_init__(self):
        self.vhat = np.atleast_2d(np.asarray(self.vhat, dtype=np.float64))
        self.aux_bv = np.atleast_2d(np.asarray(self.aux_bv, dtype=np.float64))
        if self.aux_z is None:
            self.aux_z = np.zeros(self.vhat.shape[0])
        self.aux_z = np.asarray(self.aux_z, dtype=np.float64)
        if self.aux_bv.shape != self.vhat.shape:
            raise DimensionMismatch(
                f"aux_bv shape {self.aux_bv.shape} != vhat shape {self.vhat.shape}"
            )
        if self.aux_z.shape != (self.vhat.shape[0],):
            raise DimensionMismatch("aux_z must hold one scalar per player")
        norms = np.linalg.norm(self.vhat, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_ATOL):
            raise ValueError(f"vhat rows must be unit norm, got norms {norms}")

    @classmethod
    def from_vectors(cls, vhat, B=None) -> "PlayerSet":
        """Normalize ``vhat`` rows; aux is ``B @ v`` if B is given, else ``v`` itself."""
        vhat = np.atleast_2d(np.asarray(vhat, dtype=np.float64))
        vhat = vhat / np.linalg.norm(vhat, axis=1, keepdims=True)
        aux = vhat.copy() if B is None else np.array([np.asarray(B) @ v for v in vhat])
        return cls(vhat=vhat, aux_bv=aux)

    @property
    def k(self) -> int:
        return self.vhat.shape[0]

    @property
    def dim(self) -> int:
        return self.vhat.shape[1]

    def copy(self) -> "PlayerSet":
        return PlayerSet(self.vhat.copy(), self.aux_bv.copy(), self.aux_z.copy())


@dataclass(frozen=True)
class UpdateDirection:
    direction: np.ndarray
    reward_norm: float
    penalty_norm: float
    rayleigh: float


def normalize_y(v, Bv_inner: float, rho: float = 0.0) -> tuple[np.ndarray, float]:
    """Rescale ``v`` by ``1 / sqrt(max(Bv_inner, rho))``.

    With ``rho = 0`` and ``Bv_inner = <v, B v>`` this is ``v / ||v||_B``.
    """
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    den = max(float(Bv_inner), float(rho))
    if not den > 0.0:
        raise NonPositiveDenominator(
            f"max(<v, [Bv]>, rho) = {den!r} <= 0; B is not SPD or rho is too small"
        )
    scale = 1.0 / math.sqrt(den)
    return scale * np.asarray(v, dtype=np.float64), scale


def _check(i: int, players: PlayerSet, A: np.ndarray, B: np.ndarray) -> None:
    if not 0 <= i < players.k:
        raise IndexError(f"player {i} out of range for k={players.k}")
    d = players.dim
    if A.shape != (d, d) or B.shape != (d, d):
        raise DimensionMismatch(f"matrices {A.shape}, {B.shape} do not match d={d}")


def utility(i: int, players: PlayerSet, A, B) -> float:
    """Exact utility of player ``i`` given its parents (full-batch)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check(i, players, A, B)
    V = players.vhat
    bv = V[: i + 1] @ B  # rows B v_j (B symmetric)
    bnorm2 = np.sum(V[: i + 1] * bv, axis=1)
    lam = np.sum(V[: i + 1] * (V[: i + 1] @ A), axis=1) / bnorm2
    y_i = V[i] / math.sqrt(bnorm2[i])
    by = bv[:i] / np.sqrt(bnorm2[:i])[:, None]
    return float(lam[i] - np.sum(lam[:i] * (by @ y_i) ** 2))


def utility_ratio_form(i: int, players: PlayerSet, A, B) -> float:
    """The same utility written as Rayleigh quotient minus ratio penalties."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check(i, players, A, B)
    V = players.vhat
    vi = V[i]
    vbv = float(vi @ B @ vi)
    out = float(vi @ A @ vi) / vbv
    for j in range(i):
        vj = V[j]
        bj = float(vj @ B @ vj)
        out -= float(vj @ A @ vj) * float(vi @ B @ vj) ** 2 / (bj**2 * vbv)
    return out


def full_gradient(i: int, players: PlayerSet, A, B) -> np.ndarray:
    """Half the Euclidean gradient of ``utility(i)`` with respect to ``vhat[i]``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check(i, players, A, B)
    V = players.vhat
    vi = V[i]
    av, bv = A @ vi, B @ vi
    vbv = float(vi @ bv)
    grad = (vbv * av - float(vi @ av) * bv) / vbv**2
    for j in range(i):
        vj = V[j]
        bvj = B @ vj
        bj = float(vj @ bvj)
        lam_j = float(vj @ A @ vj) / bj
        vibj = float(vi @ bvj)
        grad -= (lam_j / bj) * vibj * (vbv * bvj - vibj * bv) / vbv**2
    return grad


def riemannian_project(v, g) -> np.ndarray:
    """Project ``g`` onto the tangent space of the unit sphere at ``v``."""
    v = np.asarray(v, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if v.shape != g.shape:
        raise DimensionMismatch(f"v {v.shape} and g {g.shape} differ")
    return g - float(g @ v) * v


def parent_terms(
    i: int,
    players: PlayerSet,
    rho: float = 0.0,
    denominators: Optional[Sequence[float]] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Parents' ``y_j`` and ``[B y]_j`` rows built from the auxiliary ``[B v]_j``.

    ``denominators`` overrides the clipped ``<v_j, [Bv]_j>`` (smooth variant).
    """
    d = players.dim
    ys = np.empty((i, d))
    bys = np.empty((i, d))
    for j in range(i):
        vj = players.vhat[j]
        auxj = players.aux_bv[j]
        inner = float(denominators[j]) if denominators is not None else float(vj @ auxj)
        ys[j], scale = normalize_y(vj, inner, rho)
        bys[j] = scale * auxj
    return ys, bys


def direction_from_products(v, av, bv, ys, bys) -> UpdateDirection:
    """Assemble rewards - penalties from precomputed ``A v`` and ``B v``."""
    direction, rn, pn = _backend.game_direction(v, av, bv, ys, bys)
    vbv = float(v @ bv)
    ray = float(v @ av) / vbv if vbv != 0.0 else math.nan
    return UpdateDirection(direction=direction, reward_norm=rn, penalty_norm=pn, rayleigh=ray)


def update_direction(
    i: int,
    players: PlayerSet,
    A_est,
    B_est,
    rho: float = 0.0,
    denominators: Optional[Sequence[float]] = None,
) -> UpdateDirection:
    """Simplified ascent direction for player ``i``.

    ``A_est`` and ``B_est`` may be exact matrices or minibatch estimates; the
    parents enter only through ``players.aux_bv`` and the clipping floor ``rho``.
    The result is tangent to the sphere at ``vhat[i]``.
    """
    A_est = np.asarray(A_est, dtype=np.float64)
    B_est = np.asarray(B_est, dtype=np.float64)
    _check(i, players, A_est, B_est)
    v = players.vhat[i]
    ys, bys = parent_terms(i, players, rho, denominators)
    return direction_from_products(v, A_est @ v, B_est @ v, ys, bys)


def eigengame_unloaded_direction(i: int, V, A) -> np.ndarray:
    """Projected direction of the identity-B eigen-game, used as a reference."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    A = np.asarray(A, dtype=np.float64)
    v = V[i]
    g = A @ v
    for j in range(i):
        g = g - float(v @ A @ V[j]) * V[j]
    return riemannian_project(v, g)


def utility_curve(theta_samples: int, A, B, parent) -> list[tuple[float, float]]:
    """Second player's utility on the unit circle, theta uniform on [0, 2 pi)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != (2, 2) or B.shape != (2, 2) or np.shape(parent) != (2,):
        raise DimensionMismatch("utility_curve needs a 2x2 problem and a 2-d parent")
    if theta_samples < 8:
        raise ValueError(f"theta_samples must be >= 8, got {theta_samples}")
    parent = np.asarray(parent, dtype=np.float64)
    parent = parent / np.linalg.norm(parent)
    out = []
    for theta in 2.0 * np.pi * np.arange(theta_samples) / theta_samples:
        v = np.array([math.cos(theta), math.sin(theta)])
        ps = PlayerSet(np.vstack([parent, v]), np.vstack([B @ parent, B @ v]))
        out.append((float(theta), utility(1, ps, A, B)))
    return out


def rayleigh_quotients(V, A, B) -> np.ndarray:
    return np.array([generalized_rayleigh(v, A, B) for v in np.atleast_2d(V)])
