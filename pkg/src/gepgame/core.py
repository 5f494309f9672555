"""Dense GEP primitives: validated matrices, the exact oracle, and evaluation metrics.

Everything here works on plain float64 ndarrays. Vectors that play the role of
eigenvector estimates are stored as the *rows* of a ``(k, d)`` array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import DimensionMismatch, NotConverged, NotSpd, NotSymmetric, RankDeficient
from .tolerances import (
    JACOBI_MAX_SWEEPS,
    JACOBI_REL_TOL,
    RANK_RTOL,
    SPD_CHECK_MAX_DIM,
    SYMMETRY_ATOL,
    UNIT_NORM_ATOL,
)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def symmetric(a, name: str = "A") -> np.ndarray:
    """Return ``a`` as a float64 square array, raising if it is not symmetric."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotSymmetric(f"{name} has non-finite entries")
    asym = float(np.max(np.abs(a - a.T)))
    if asym > SYMMETRY_ATOL:
        raise NotSymmetric(f"{name} is not symmetric (max |a_ij - a_ji| = {asym:.3g})")
    return a


def spd(b, name: str = "B", check_max_dim: int = SPD_CHECK_MAX_DIM) -> np.ndarray:
    """Return ``b`` validated as symmetric positive definite.

    The eigenvalue check runs only up to ``check_max_dim``; above that the
    caller vouches for positive definiteness.
    """
    b = symmetric(b, name)
    if b.shape[0] <= check_max_dim:
        w, _ = eigh(b)
        if not w[-1] > 0.0:
            raise NotSpd(f"{name} has smallest eigenvalue {w[-1]:.3g} <= 0")
    return b


def unit_vector(v, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > UNIT_NORM_ATOL:
        raise ValueError(f"{name} is not unit norm (|v| = {nrm!r})")
    return v


def _check_square_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"A is {a.shape} but B is {b.shape}")


def _check_vec(v: np.ndarray, dim: int, name: str = "v") -> None:
    if v.shape[-1] != dim:
        raise DimensionMismatch(f"{name} has dimension {v.shape[-1]}, expected {dim}")


# --------------------------------------------------------------------------
# symmetric eigendecomposition (in-repo cyclic Jacobi)
# --------------------------------------------------------------------------

def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a symmetric matrix by cyclic Jacobi sweeps.

    Returns eigenvalues sorted descending and the matching eigenvectors as
    columns.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.shape[0] == 1:
        return a[0].copy(), np.ones((1, 1))
    w, v, _, off = _backend.jacobi_eigh(a, JACOBI_REL_TOL, JACOBI_MAX_SWEEPS)
    fro = float(np.linalg.norm(a))
    if off > JACOBI_REL_TOL * fro:
        raise NotConverged(f"Jacobi did not converge (off-diagonal norm {off:.3g})")
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def spd_power(b: np.ndarray, power: float) -> np.ndarray:
    """``b ** power`` for SPD ``b`` via its eigendecomposition."""
    w, v = eigh(b)
    if not w[-1] > 0.0:
        raise NotSpd(f"matrix has smallest eigenvalue {w[-1]:.3g} <= 0")
    out = (v * w**power) @ v.T
    return 0.5 * (out + out.T)


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry is positive (ties: lowest index)."""
    idx = int(np.argmax(np.abs(v)))  # argmax returns the first maximum
    return -v if v[idx] < 0 else v


# --------------------------------------------------------------------------
# oracle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleSolution:
    """Ground-truth generalized eigenpairs.

    ``eigenvectors`` holds one unit-norm, sign-canonical vector per row.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


def oracle_solve(A, B, k: int) -> OracleSolution:
    """Top-k generalized eigenpairs of ``A v = lambda B v`` by similarity reduction.

    Solves the symmetric problem ``B^{-1/2} A B^{-1/2} w = lambda w`` and maps
    back with ``v = B^{-1/2} w``.
    """
    A = symmetric(A, "A")
    B = symmetric(B, "B")
    _check_square_pair(A, B)
    d = A.shape[0]
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    wb, vb = eigh(B)
    if not wb[-1] > 0.0:
        raise NotSpd(f"B has smallest eigenvalue {wb[-1]:.3g} <= 0")
    b_isqrt = (vb * wb**-0.5) @ vb.T
    b_isqrt = 0.5 * (b_isqrt + b_isqrt.T)
    c = b_isqrt @ A @ b_isqrt
    c = 0.5 * (c + c.T)
    lam, w = eigh(c)
    vecs = (b_isqrt @ w[:, :k]).T
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = np.array([canonical_sign(v) for v in vecs])
    return OracleSolution(eigenvalues=lam[:k].copy(), eigenvectors=vecs)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------

def generalized_rayleigh(v, A, B) -> float:
    """``<v, A v> / <v, B v>``; scale invariant in ``v``."""
    v = np.asarray(v, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check_square_pair(A, B)
    _check_vec(v, A.shape[0])
    return float(v @ A @ v) / float(v @ B @ v)


def _orthonormal_basis(W: np.ndarray) -> np.ndarray:
    """Orthonormal basis for span(columns of W) via the Gram eigendecomposition."""
    g, q = eigh(W.T @ W)
    sv = np.sqrt(np.clip(g, 0.0, None))
    if sv[-1] < RANK_RTOL * sv[0] or sv[0] == 0.0:
        raise RankDeficient(
            f"basis has numerical rank < {W.shape[1]} (singular values {sv})"
        )
    return W @ (q / sv)


def subspace_error(
    Vhat,
    A,
    B,
    k: Optional[int] = None,
    *,
    oracle: Optional[OracleSolution] = None,
) -> float:
    """Normalized subspace error ``1 - tr(U* P) / k`` in the B^{1/2}-mapped space.

    ``Vhat`` holds the k approximations as rows. ``U*`` and ``P`` are the
    orthogonal projectors onto ``B^{1/2} V*`` and ``B^{1/2} Vhat``. Pass a
    precomputed ``oracle`` to skip the dense solve.
    """
    Vhat = np.atleast_2d(np.asarray(Vhat, dtype=np.float64))
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _check_square_pair(A, B)
    _check_vec(Vhat, A.shape[0], "Vhat")
    k = Vhat.shape[0] if k is None else k
    if Vhat.shape[0] != k:
        raise DimensionMismatch(f"Vhat has {Vhat.shape[0]} rows, expected k={k}")
    if oracle is None:
        oracle = oracle_solve(A, B, k)
    b_sqrt = spd_power(B, 0.5)
    u_true = _orthonormal_basis(b_sqrt @ oracle.eigenvectors[:k].T)
    u_hat = _orthonormal_basis(b_sqrt @ Vhat.T)
    overlap = u_true.T @ u_hat
    err = 1.0 - float(np.sum(overlap * overlap)) / k
    return min(max(err, 0.0), 1.0)


def angle_under_metric(u, v, C) -> float:
    """Angle between ``u`` and ``v`` in the C inner product, folded into [0, pi/2]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    _check_vec(u, C.shape[0], "u")
    _check_vec(v, C.shape[0], "v")
    cos = abs(float(u @ C @ v)) / math.sqrt(float(u @ C @ u) * float(v @ C @ v))
    return math.acos(min(cos, 1.0))


def b_orthogonality_defect(V, B) -> float:
    """``max_{i != j} |v_i^T B v_j| / ||B||_F`` over the rows of ``V``."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    B = np.asarray(B, dtype=np.float64)
    _check_vec(V, B.shape[0], "V")
    if V.shape[0] < 2:
        return 0.0
    g = np.abs(V @ B @ V.T)
    np.fill_diagonal(g, 0.0)
    return float(g.max()) / float(np.linalg.norm(B))


def angular_errors(Vhat, V) -> np.ndarray:
    """Per-row angle (radians, sign-folded) between estimates and targets."""
    Vhat = np.atleast_2d(Vhat)
    V = np.atleast_2d(V)
    cos = np.abs(np.sum(Vhat * V, axis=1)) / (
        np.linalg.norm(Vhat, axis=1) * np.linalg.norm(V, axis=1)
    )
    return np.arccos(np.clip(cos, 0.0, 1.0))


def oracle_residuals(A, B, sol: OracleSolution) -> np.ndarray:
    """Relative residuals ``|A v - lam B v| / (|A|_F + |lam| |B|_F)`` per pair."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    fa, fb = np.linalg.norm(A), np.linalg.norm(B)
    out = []
    for lam, v in zip(sol.eigenvalues, sol.eigenvectors):
        out.append(np.linalg.norm(A @ v - lam * (B @ v)) / (fa + abs(lam) * fb))
    return np.array(out)
