"""Synthetic problems with known answers: mixed signals, planted GEPs, correlated views."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import OracleSolution, canonical_sign
from .errors import ConfigInvalid
from .estimators import PairedDataset


DATA_STREAM = 7


def data_rng(seed: int) -> np.random.Generator:
    """Generator for synthetic data, kept apart from the solver's own streams."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(DATA_STREAM,)))


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


# --------------------------------------------------------------------------
# blind source separation
# --------------------------------------------------------------------------

SOURCE_KINDS = ("sine", "square", "sawtooth", "gaussian-noise")


@dataclass
class SignalSpec:
    """Sources on the time grid ``linspace(0, t_max, n)``.

    Each source is a dict with ``kind`` in SOURCE_KINDS. Frequencies are
    angular (radians per unit time): ``sine`` is ``sin(freq t + phase)``,
    ``square`` is ``sign(sin(freq t))``, ``sawtooth`` ramps from -1 to 1 once
    per ``2 pi / freq``; ``gaussian-noise`` takes ``sigma``.
    """

    n: int = 2000
    sources: list = field(
        default_factory=lambda: [
            {"kind": "sine", "freq": 2.0, "phase": 0.0},
            {"kind": "square", "freq": 3.0},
            {"kind": "sawtooth", "freq": 2.0 * np.pi},
        ]
    )
    mixing: list = field(
        default_factory=lambda: [[1.0, 1.0, 1.0], [0.5, 2.0, 1.0], [1.5, 1.0, 2.0]]
    )
    noise_sigma: float = 0.2
    t_max: float = 80.0

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigInvalid("n must be >= 2")
        s = len(self.sources)
        mix = np.asarray(self.mixing, dtype=np.float64)
        if mix.shape != (s, s):
            raise ConfigInvalid(f"mixing must be {s}x{s}, got {mix.shape}")
        if abs(np.linalg.det(mix)) <= 1e-8:
            raise ConfigInvalid("mixing matrix is singular")
        if self.noise_sigma < 0:
            raise ConfigInvalid("noise_sigma must be >= 0")
        for src in self.sources:
            if src.get("kind") not in SOURCE_KINDS:
                raise ConfigInvalid(f"unknown source kind {src.get('kind')!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SignalSpec":
        raw = json.loads(text)
        unknown = set(raw) - {"n", "sources", "mixing", "noise_sigma", "t_max"}
        if unknown:
            raise ConfigInvalid(f"unknown SignalSpec keys: {sorted(unknown)}")
        return cls(**raw)


def _source(src: dict, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    kind = src["kind"]
    if kind == "sine":
        return np.sin(src["freq"] * t + src.get("phase", 0.0))
    if kind == "square":
        return np.sign(np.sin(src["freq"] * t))
    if kind == "sawtooth":
        x = src["freq"] * t / (2.0 * np.pi)
        return 2.0 * (x - np.floor(x)) - 1.0
    return src.get("sigma", 1.0) * rng.standard_normal(t.shape)


def generate_mixed_signals(spec: SignalSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sources, mixed)``, both ``(n, s)``, with ``mixed = sources @ mixing.T``.

    Gaussian noise of scale ``noise_sigma`` perturbs each clean waveform, and
    the noisy sources are then standardized to zero mean and unit variance.
    The noise is therefore part of what gets mixed and what an unmixing
    method can hope to recover.
    """
    spec.validate()
    t = np.linspace(0.0, spec.t_max, spec.n)
    S = np.column_stack([_source(src, t, rng) for src in spec.sources])
    if spec.noise_sigma > 0:
        S = S + spec.noise_sigma * rng.standard_normal(S.shape)
    S = S - S.mean(axis=0)
    S = S / S.std(axis=0)
    mixed = S @ np.asarray(spec.mixing, dtype=np.float64).T
    return S, mixed


# --------------------------------------------------------------------------
# planted generalized eigenproblems
# --------------------------------------------------------------------------

def planted_spectrum(d: int, k: int, eigengap: float, rng: np.random.Generator) -> np.ndarray:
    """Descending values with consecutive gaps in [gap, 1.5 gap] and the top k positive."""
    gaps = eigengap * (1.0 + 0.5 * rng.random(d - 1))
    lam = np.empty(d)
    lam[k - 1] = eigengap * (1.0 + 0.5 * rng.random())
    for i in range(k - 2, -1, -1):
        lam[i] = lam[i + 1] + gaps[i]
    for i in range(k, d):
        lam[i] = lam[i - 1] - gaps[i - 1]
    return lam


def generate_random_gep(
    d: int, k: int, eigengap: float, cond_B: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, OracleSolution]:
    """Random ``(A, B)`` with planted top-k generalized eigenpairs.

    ``B`` has a log-uniform spectrum spanning exactly ``[1, cond_B]``; ``A`` is
    ``B^{1/2} Q diag(lam) Q^T B^{1/2}`` so the generalized eigenvectors are
    ``B^{-1/2} Q``.
    """
    if not (1 <= k < d):
        raise ConfigInvalid(f"need 1 <= k < d, got k={k}, d={d}")
    if not eigengap > 0 or not cond_B >= 1:
        raise ConfigInvalid("eigengap must be > 0 and cond_B >= 1")
    logs = np.log(cond_B) * rng.random(d)
    if d >= 2:
        logs[0], logs[1] = 0.0, np.log(cond_B)
    spec_b = np.exp(logs)
    U = random_orthogonal(d, rng)
    B = (U * spec_b) @ U.T
    B = 0.5 * (B + B.T)
    b_half = (U * np.sqrt(spec_b)) @ U.T
    b_ihalf = (U / np.sqrt(spec_b)) @ U.T
    lam = planted_spectrum(d, k, eigengap, rng)
    Q = random_orthogonal(d, rng)
    A = b_half @ (Q * lam) @ Q.T @ b_half
    A = 0.5 * (A + A.T)
    vecs = (b_ihalf @ Q[:, :k]).T
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = np.array([canonical_sign(v) for v in vecs])
    return A, B, OracleSolution(eigenvalues=lam[:k].copy(), eigenvectors=vecs)


# --------------------------------------------------------------------------
# correlated views
# --------------------------------------------------------------------------

def generate_correlated_views(n: int, d_x: int, d_y: int, canonical_corrs, rng: np.random.Generator) -> PairedDataset:
    """Two Gaussian views whose population canonical correlations are ``canonical_corrs``.

    Canonical coordinates are drawn with ``corr(x_c[i], y_c[i]) = corrs[i]``
    and then mapped through random well-conditioned linear maps, which leaves
    canonical correlations unchanged.
    """
    corrs = np.asarray(canonical_corrs, dtype=np.float64)
    k = corrs.size
    if k > min(d_x, d_y):
        raise ConfigInvalid("more canonical correlations than the smaller view's dimension")
    if np.any(corrs <= 0) or np.any(corrs > 1) or np.any(np.diff(corrs) >= 0):
        raise ConfigInvalid("canonical_corrs must be strictly decreasing values in (0, 1]")
    xc = rng.standard_normal((n, d_x))
    yc = rng.standard_normal((n, d_y))
    yc[:, :k] = corrs * xc[:, :k] + np.sqrt(1.0 - corrs**2) * yc[:, :k]

    def mixer(d):
        U, V = random_orthogonal(d, rng), random_orthogonal(d, rng)
        return (U * np.exp(rng.uniform(-0.5, 0.5, d))) @ V.T

    X = xc @ mixer(d_x).T
    Y = yc @ mixer(d_y).T
    return PairedDataset.from_arrays(X, Y, center=True)
