"""Problem constructors and unbiased minibatch estimates of (A, B).

Every product of expectations in an estimate (e.g. ``tr(B) B`` in the ICA
matrix) is formed from disjoint row batches so each factor is estimated
independently. Exact full-data constructors are provided for evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import spd, symmetric
from .errors import ConfigInvalid, DimensionMismatch, StreamExhausted
from .tolerances import CENTERING_RTOL

Estimate = tuple[np.ndarray, np.ndarray]


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def center_columns(X: np.ndarray) -> np.ndarray:
    return X - X.mean(axis=0, keepdims=True)


def is_centered(X: np.ndarray) -> bool:
    mean = np.abs(X.mean(axis=0))
    std = X.std(axis=0)
    return bool(np.all(mean <= CENTERING_RTOL * np.maximum(std, 1e-300)))


def _prepare(X, center: bool, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d (n, d), got shape {X.shape}")
    if center:
        return center_columns(X)
    if not is_centered(X):
        raise ConfigInvalid(f"{name} is not centered; pass center=True to auto-center")
    return X


@dataclass(frozen=True)
class PairedDataset:
    """Two views of the same ``n`` samples, rows aligned."""

    X: np.ndarray
    Y: np.ndarray
    centered: bool = True

    @classmethod
    def from_arrays(cls, X, Y, center: bool = True) -> "PairedDataset":
        X = _prepare(X, center, "X")
        Y = _prepare(Y, center, "Y")
        if X.shape[0] != Y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        return cls(X=X, Y=Y, centered=True)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dx(self) -> int:
        return self.X.shape[1]

    @property
    def dy(self) -> int:
        return self.Y.shape[1]


# --------------------------------------------------------------------------
# row selection
# --------------------------------------------------------------------------

def disjoint_batches(n: int, sizes: Sequence[int], rng: np.random.Generator) -> list[np.ndarray]:
    """Draw row-index batches of the given sizes without replacement.

    When they fit (``sum(sizes) <= n``) the batches are consecutive slices of
    one permutation and hence disjoint. Otherwise each batch is a prefix of its
    own fresh permutation (so ``size == n`` yields the whole dataset).
    """
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ConfigInvalid(f"batch sizes must be >= 1, got {sizes}")
    if max(sizes) > n:
        raise StreamExhausted(f"a batch of {max(sizes)} rows exceeds the {n} available")
    if sum(sizes) <= n:
        perm = rng.permutation(n)
        bounds = np.cumsum([0] + sizes)
        return [perm[bounds[i] : bounds[i + 1]] for i in range(len(sizes))]
    return [rng.permutation(n)[:s] for s in sizes]


# --------------------------------------------------------------------------
# CCA
# --------------------------------------------------------------------------

def cca_blocks(Xa, Ya, Xb, Yb) -> Estimate:
    """Block matrices with the cross-covariance from batch a and covariances from batch b."""
    dx, dy = Xa.shape[1], Ya.shape[1]
    d = dx + dy
    A = np.zeros((d, d))
    cxy = Xa.T @ Ya / Xa.shape[0]
    A[:dx, dx:] = cxy
    A[dx:, :dx] = cxy.T
    B = np.zeros((d, d))
    B[:dx, :dx] = _sym(Xb.T @ Xb / Xb.shape[0])
    B[dx:, dx:] = _sym(Yb.T @ Yb / Yb.shape[0])
    return A, B


def cca_matrices(data: PairedDataset) -> Estimate:
    """Full-data CCA pair ``A = [[0, Cxy], [Cyx, 0]]``, ``B = diag(Cxx, Cyy)``."""
    A, B = cca_blocks(data.X, data.Y, data.X, data.Y)
    return A, spd(B, "B")


def cca_minibatch(data: PairedDataset, batch: int, rng: np.random.Generator, audit: Optional[list] = None) -> Estimate:
    """Unbiased CCA estimates: A from one batch of rows, B from a disjoint one."""
    ia, ib = disjoint_batches(data.n, (batch, batch), rng)
    if audit is not None:
        audit.append((ia, ib))
    return cca_blocks(data.X[ia], data.Y[ia], data.X[ib], data.Y[ib])


# --------------------------------------------------------------------------
# ICA (kurtosis-based)
# --------------------------------------------------------------------------

def _second_moment(X: np.ndarray) -> np.ndarray:
    return _sym(X.T @ X / X.shape[0])


def _fourth_moment_term(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    return _sym((X * sq[:, None]).T @ X / X.shape[0])


def ica_estimate(X1, X2, X3, X4) -> Estimate:
    """Kurtosis pair from four row batches.

    ``B`` comes from batch 1; ``A = E[|x|^2 x x^T]`` (batch 2)
    ``- tr(B3) B4 - (B3 B4 + B4 B3)`` with B3, B4 from batches 3 and 4.
    """
    b3 = _second_moment(X3)
    b4 = _second_moment(X4)
    A = _fourth_moment_term(X2) - np.trace(b3) * b4 - (b3 @ b4 + b4 @ b3)
    return _sym(A), _second_moment(X1)


def ica_matrices(X, center: bool = True) -> Estimate:
    """Full-data ICA pair ``A = E[<x,x> x x^T] - tr(B) B - 2 B^2``, ``B = E[x x^T]``."""
    X = _prepare(X, center, "X")
    B = _second_moment(X)
    A = _fourth_moment_term(X) - np.trace(B) * B - 2.0 * (B @ B)
    return _sym(A), spd(B, "B")


def ica_minibatch(X, batch: int, rng: np.random.Generator, audit: Optional[list] = None) -> Estimate:
    """Unbiased ICA estimates from four disjoint sub-batches of ``batch`` rows."""
    X = np.asarray(X, dtype=np.float64)
    idx = disjoint_batches(X.shape[0], (batch,) * 4, rng)
    if audit is not None:
        audit.append(tuple(idx))
    return ica_estimate(*(X[i] for i in idx))


# --------------------------------------------------------------------------
# synthetic noise around known matrices
# --------------------------------------------------------------------------

def _sym_noise(d: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d))
    return sigma * (g + g.T) / np.sqrt(2.0)


def raw_spd_sampler(A, B, noise_sigma: float, rng: np.random.Generator) -> Estimate:
    """``A`` and ``B`` plus independent zero-mean symmetric Gaussian noise."""
    if noise_sigma < 0:
        raise ConfigInvalid(f"noise_sigma must be >= 0, got {noise_sigma}")
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if noise_sigma == 0:
        return A.copy(), B.copy()
    d = A.shape[0]
    return A + _sym_noise(d, noise_sigma, rng), B + _sym_noise(d, noise_sigma, rng)


# --------------------------------------------------------------------------
# problems consumed by the stochastic solvers
# --------------------------------------------------------------------------

def _rng(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seq))


def _worker_seq(seq: np.random.SeedSequence, m: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=tuple(seq.spawn_key) + (m,))


class MinibatchProblem:
    """A source of (A, B) estimate pairs, plus the exact pair when it is known.

    ``sampler(rng, batch)`` returns one estimate pair. ``draw`` hands each of
    ``workers`` workers its own pair; subclasses backed by a dataset override
    it so that the rows of a draw do not depend on the worker count.
    """

    def __init__(
        self,
        dim: int,
        sampler: Callable[[np.random.Generator, int], Estimate],
        exact: Optional[Estimate] = None,
        name: str = "problem",
    ):
        self.dim = int(dim)
        self.sampler = sampler
        self.exact = exact
        self.name = name

    def draw(self, seq: np.random.SeedSequence, batch: int, workers: int = 1) -> list[Estimate]:
        per = batch // workers
        return [self.sampler(_rng(_worker_seq(seq, m)), per) for m in range(workers)]

    def fingerprint_bytes(self) -> bytes:
        if self.exact is None:
            return self.name.encode()
        return b"".join(np.ascontiguousarray(m).tobytes() for m in self.exact)


class DatasetProblem(MinibatchProblem):
    """Problem backed by a row dataset; each estimate needs ``parts`` row batches.

    A draw of batch size ``b`` over ``M`` workers gives every worker ``parts``
    sub-batches of ``b / M`` rows each. When all of them fit in the dataset
    they are consecutive slices of one permutation, so changing ``M`` regroups
    the same rows; otherwise each sub-batch is an independent subset.
    """

    def __init__(self, dim, n, parts, from_rows, exact, data_bytes, name):
        super().__init__(dim, self._sample, exact, name)
        self.n = n
        self.parts = parts
        self.from_rows = from_rows
        self._data_bytes = data_bytes

    def _sample(self, rng, batch):
        return self.from_rows(disjoint_batches(self.n, (batch,) * self.parts, rng))

    def draw(self, seq, batch, workers=1):
        if batch % workers:
            raise ConfigInvalid(f"batch {batch} not divisible by workers {workers}")
        per = batch // workers
        idx = disjoint_batches(self.n, (per,) * (self.parts * workers), _rng(seq))
        p = self.parts
        return [self.from_rows(idx[m * p : (m + 1) * p]) for m in range(workers)]

    def fingerprint_bytes(self) -> bytes:
        return self._data_bytes


def exact_problem(A, B) -> MinibatchProblem:
    """Degenerate stream that returns the exact matrices on every draw."""
    A = symmetric(A, "A")
    B = spd(B, "B")
    return MinibatchProblem(A.shape[0], lambda rng, batch: (A, B), exact=(A, B), name="exact")


def raw_spd_problem(A, B, noise_sigma: float) -> MinibatchProblem:
    A = symmetric(A, "A")
    B = spd(B, "B")
    return MinibatchProblem(
        A.shape[0],
        lambda rng, batch: raw_spd_sampler(A, B, noise_sigma, rng),
        exact=(A, B),
        name="raw-spd",
    )


def cca_problem(data: PairedDataset) -> DatasetProblem:
    X, Y = data.X, data.Y

    def from_rows(idx):
        ia, ib = idx
        return cca_blocks(X[ia], Y[ia], X[ib], Y[ib])

    return DatasetProblem(
        data.dx + data.dy, data.n, 2, from_rows, cca_matrices(data),
        np.ascontiguousarray(np.hstack([X, Y])).tobytes(), "cca",
    )


def ica_problem(X, minimize_kurtosis: bool = True, center: bool = True) -> DatasetProblem:
    """ICA as a top-k GEP.

    With ``minimize_kurtosis`` the sign of A is flipped so the most
    sub-Gaussian directions come first and, for sub-Gaussian sources, all
    eigenvalues are positive, as the game requires.
    """
    X = _prepare(X, center, "X")
    sign = -1.0 if minimize_kurtosis else 1.0
    A, B = ica_matrices(X, center=False)

    def from_rows(idx):
        a, b = ica_estimate(*(X[i] for i in idx))
        return sign * a, b

    return DatasetProblem(
        X.shape[1], X.shape[0], 4, from_rows, (sign * A, B),
        np.ascontiguousarray(X).tobytes(), "ica",
    )
