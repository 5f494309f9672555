import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gepgame.core import (
    angle_under_metric,
    b_orthogonality_defect,
    canonical_sign,
    eigh,
    generalized_rayleigh,
    oracle_residuals,
    oracle_solve,
    spd,
    spd_power,
    subspace_error,
    symmetric,
    unit_vector,
)
from gepgame.datagen import random_orthogonal
from gepgame.errors import DimensionMismatch, NotSpd, NotSymmetric, RankDeficient
from gepgame.game import EXAMPLE_2X2_A, EXAMPLE_2X2_B
from gepgame.verify import random_spd, random_symmetric


def _power_top_pair(A, B, iters=20_000):
    """Top pair of B^{-1} A by power iteration on a shifted operator (second oracle path)."""
    d = A.shape[0]
    M = np.linalg.solve(B, A)
    shift = np.abs(np.linalg.eigvals(M)).max()
    v = np.ones(d) / math.sqrt(d)
    for _ in range(iters):
        w = M @ v + shift * v
        v = w / np.linalg.norm(w)
    return generalized_rayleigh(v, A, B), v


# oracle ----------------------------------------------------------------------

def test_oracle_identity_pair():
    sol = oracle_solve(np.eye(3), np.eye(3), 3)
    np.testing.assert_allclose(sol.eigenvalues, 1.0, atol=1e-12)
    np.testing.assert_allclose(sol.eigenvectors @ sol.eigenvectors.T, np.eye(3), atol=1e-12)


def test_oracle_diagonal():
    sol = oracle_solve(np.diag([3.0, 2.0, 1.0]), np.eye(3), 2)
    np.testing.assert_allclose(sol.eigenvalues, [3.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(sol.eigenvectors), np.eye(3)[:2], atol=1e-12)


def test_oracle_2x2_example_b_orthogonal_but_not_euclidean():
    A, B = EXAMPLE_2X2_A, EXAMPLE_2X2_B
    sol = oracle_solve(A, B, 2)
    assert oracle_residuals(A, B, sol).max() <= 1e-8
    v1, v2 = sol.eigenvectors
    assert abs(angle_under_metric(v1, v2, B) - math.pi / 2) <= 1e-8
    euclid = math.degrees(angle_under_metric(v1, v2, np.eye(2)))
    assert abs(euclid - 71.0) <= 0.5


def test_oracle_random_8x8_matches_power_iteration():
    rng = np.random.default_rng(8)
    A = random_spd(8, 30.0, rng)
    B = random_spd(8, 10.0, rng)
    sol = oracle_solve(A, B, 8)
    assert oracle_residuals(A, B, sol).max() <= 1e-8
    assert b_orthogonality_defect(sol.eigenvectors, B) <= 1e-8
    lam, v = _power_top_pair(A, B)
    assert abs(lam - sol.eigenvalues[0]) <= 1e-8 * abs(lam)
    cos = abs(float(v @ sol.eigenvectors[0])) / np.linalg.norm(v)
    assert math.acos(min(cos, 1.0)) <= 1e-6


def test_oracle_sign_is_canonical():
    rng = np.random.default_rng(2)
    sol = oracle_solve(random_symmetric(5, rng), random_spd(5, 5.0, rng), 5)
    for v in sol.eigenvectors:
        assert v[np.argmax(np.abs(v))] > 0


def test_oracle_eigenvalues_sorted_descending():
    rng = np.random.default_rng(3)
    sol = oracle_solve(random_symmetric(7, rng), random_spd(7, 5.0, rng), 7)
    assert np.all(np.diff(sol.eigenvalues) <= 0)


@pytest.mark.parametrize("k", [0, 4])
def test_oracle_rejects_bad_k(k):
    with pytest.raises(ValueError):
        oracle_solve(np.eye(3), np.eye(3), k)


def test_oracle_rejects_asymmetric_a():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(NotSymmetric):
        oracle_solve(A, np.eye(2), 1)


def test_oracle_rejects_indefinite_b():
    with pytest.raises(NotSpd):
        oracle_solve(np.eye(2), np.diag([1.0, -1.0]), 1)


def test_oracle_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        oracle_solve(np.eye(2), np.eye(3), 1)


def test_oracle_eigenvalue_equals_rayleigh():
    rng = np.random.default_rng(4)
    A, B = random_symmetric(6, rng), random_spd(6, 20.0, rng)
    sol = oracle_solve(A, B, 6)
    for lam, v in zip(sol.eigenvalues, sol.eigenvectors):
        assert abs(generalized_rayleigh(v, A, B) - lam) <= 1e-10 * max(1.0, abs(lam))


# validation -----------------------------------------------------------------

def test_symmetric_tolerates_tiny_asymmetry():
    a = np.array([[1.0, 0.5], [0.5 + 5e-13, 2.0]])
    symmetric(a)
    with pytest.raises(NotSymmetric):
        symmetric(a + np.array([[0.0, 0.0], [1e-9, 0.0]]))


def test_symmetric_rejects_nonfinite_and_nonsquare():
    with pytest.raises(NotSymmetric):
        symmetric(np.array([[np.nan]]))
    with pytest.raises(DimensionMismatch):
        symmetric(np.ones((2, 3)))


def test_spd_check_threshold():
    bad = np.diag([1.0, 0.0])
    with pytest.raises(NotSpd):
        spd(bad)
    # above the threshold the caller vouches for definiteness
    spd(bad, check_max_dim=1)


def test_unit_vector_check():
    unit_vector(np.array([0.6, 0.8]))
    with pytest.raises(ValueError):
        unit_vector(np.array([1.0, 1.0]))


def test_canonical_sign_ties_use_lowest_index():
    np.testing.assert_array_equal(canonical_sign(np.array([-1.0, 1.0])), [1.0, -1.0])
    np.testing.assert_array_equal(canonical_sign(np.array([0.2, -0.9])), [-0.2, 0.9])


# Jacobi ----------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(d=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_eigh_reconstructs(d, seed):
    a = random_symmetric(d, np.random.default_rng(seed))
    w, v = eigh(a)
    np.testing.assert_allclose(v @ np.diag(w) @ v.T, a, atol=1e-10 * max(1.0, np.linalg.norm(a)))
    np.testing.assert_allclose(v.T @ v, np.eye(d), atol=1e-10)
    assert np.all(np.diff(w) <= 0)


def test_eigh_agrees_with_numpy():
    a = random_symmetric(9, np.random.default_rng(5))
    np.testing.assert_allclose(eigh(a)[0], np.linalg.eigvalsh(a)[::-1], atol=1e-12)


def test_spd_power_half_squares_back():
    b = random_spd(5, 50.0, np.random.default_rng(6))
    h = spd_power(b, 0.5)
    np.testing.assert_allclose(h @ h, b, atol=1e-10)


# Rayleigh --------------------------------------------------------------------

def test_rayleigh_diagonal():
    assert generalized_rayleigh(np.array([1.0, 0.0]), np.diag([3.0, 2.0]), np.eye(2)) == 3.0


def test_rayleigh_scale_invariant():
    rng = np.random.default_rng(7)
    A, B = random_symmetric(4, rng), random_spd(4, 5.0, rng)
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    w = 2 * v
    assert generalized_rayleigh(v, A, B) == pytest.approx(generalized_rayleigh(w / np.linalg.norm(w), A, B), abs=1e-14)


# subspace error --------------------------------------------------------------

def _problem(seed, d=6):
    rng = np.random.default_rng(seed)
    return random_symmetric(d, rng), random_spd(d, 10.0, rng)


def test_subspace_error_zero_at_oracle():
    A, B = _problem(11)
    sol = oracle_solve(A, B, 3)
    assert subspace_error(sol.eigenvectors, A, B, 3) <= 1e-10


def test_subspace_error_one_on_complement():
    A = np.diag([4.0, 3.0, 2.0, 1.0])
    bottom = np.eye(4)[2:]
    assert abs(subspace_error(bottom, A, np.eye(4), 2) - 1.0) <= 1e-10


def test_subspace_error_rotation_invariant():
    A, B = _problem(12)
    sol = oracle_solve(A, B, 3)
    R = random_orthogonal(3, np.random.default_rng(13))
    V = R @ sol.eigenvectors
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    assert subspace_error(V, A, B, 3) <= 1e-8


def test_subspace_error_sign_invariant():
    A, B = _problem(14)
    V = np.random.default_rng(15).standard_normal((2, 6))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    flipped = V * np.array([[-1.0], [1.0]])
    assert subspace_error(V, A, B) == pytest.approx(subspace_error(flipped, A, B), abs=1e-12)


def test_subspace_error_rank_deficient():
    A, B = _problem(16)
    v = np.eye(6)[0]
    with pytest.raises(RankDeficient):
        subspace_error(np.vstack([v, v]), A, B)


def test_subspace_error_bounds():
    A, B = _problem(17)
    V = np.random.default_rng(18).standard_normal((3, 6))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    assert 0.0 <= subspace_error(V, A, B) <= 1.0


# angle and B-orthogonality ------------------------------------------------------

def test_angle_identity_metric():
    assert angle_under_metric(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.eye(2)) == pytest.approx(math.pi / 2)


def test_angle_is_folded():
    u = np.array([1.0, 0.0])
    assert angle_under_metric(u, -u, np.eye(2)) == 0.0


def test_b_orthogonality_defect_examples():
    A, B = _problem(19)
    assert b_orthogonality_defect(oracle_solve(A, B, 6).eigenvectors, B) <= 1e-8
    e1 = np.eye(4)[0]
    assert b_orthogonality_defect(np.vstack([e1, e1]), np.eye(4)) == pytest.approx(1 / 2)
    assert b_orthogonality_defect(e1[None, :], np.eye(4)) == 0.0
