"""SVD wrapper, effective rank, and low-rank truncation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freespec import (
    NonFiniteInputError,
    effective_rank,
    normalized_spectrum,
    svd,
    truncate_reconstruct,
    truncation_error,
    truncation_rank,
)


def _random(shape, dtype=np.float64, seed=0):
    return np.random.default_rng(seed).standard_normal(shape).astype(dtype)


def test_svd_reconstructs():
    z = _random((40, 12))
    dec = svd(z)
    assert dec.u.shape == (40, 12) and dec.v.shape == (12, 12)
    assert dec.rank == 12
    np.testing.assert_allclose(dec.reconstruct(), z, atol=1e-10)


def test_svd_orthonormal_and_sorted():
    z = _random((30, 8), seed=2)
    dec = svd(z)
    np.testing.assert_allclose(dec.u.T @ dec.u, np.eye(8), atol=1e-12)
    np.testing.assert_allclose(dec.v.T @ dec.v, np.eye(8), atol=1e-12)
    assert np.all(np.diff(dec.sigma) <= 0)
    assert np.all(dec.sigma >= 0)


def test_svd_wide_matrix():
    z = _random((6, 20), seed=3)
    dec = svd(z)
    assert dec.u.shape == (6, 6) and dec.v.shape == (20, 6)
    np.testing.assert_allclose(dec.reconstruct(), z, atol=1e-10)


def test_svd_rejects_bad_inputs():
    with pytest.raises(ValueError):
        svd(np.ones(4))
    with pytest.raises(NonFiniteInputError):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_effective_rank_closed_forms():
    assert effective_rank(np.array([1.0, 1.0, 1.0, 1.0])) == pytest.approx(4.0, abs=1e-9)
    assert effective_rank(np.array([5.0, 0.0, 0.0])) == pytest.approx(1.0, abs=1e-9)
    assert effective_rank(np.array([2.0, 1.0, 1.0])) == pytest.approx(
        2.8284271247461903, abs=1e-9
    )


def test_effective_rank_rejects_bad_spectra():
    with pytest.raises(ValueError):
        effective_rank(np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        effective_rank(np.array([-1.0, 2.0]))
    with pytest.raises(ValueError):
        effective_rank(np.array([[1.0, 2.0]]))


@settings(max_examples=250, deadline=None)
@given(
    st.lists(st.floats(1e-6, 1e6, allow_nan=False), min_size=1, max_size=40),
    st.floats(1e-3, 1e3),
    st.randoms(use_true_random=False),
)
def test_effective_rank_scale_and_permutation_invariant(vals, scale, rnd):
    sigma = np.array(vals)
    r = effective_rank(sigma)
    assert 1.0 - 1e-9 <= r <= len(vals) + 1e-9
    assert effective_rank(sigma * scale) == pytest.approx(r, rel=1e-9)
    perm = list(range(len(vals)))
    rnd.shuffle(perm)
    assert effective_rank(sigma[perm]) == pytest.approx(r, rel=1e-9)


def test_normalized_spectrum_sums_to_one():
    p = normalized_spectrum(np.array([3.0, 1.0]))
    np.testing.assert_allclose(p, [0.75, 0.25])


def test_truncation_rank_formula():
    assert truncation_rank(3, 0.34) == 2  # ceil(1.02)
    assert truncation_rank(3, 1.0 / 3.0) == 1
    assert truncation_rank(3, 1.0) == 3
    assert truncation_rank(10, 0.05) == 1  # floor is 1
    assert truncation_rank(8, 0.5) == 4
    with pytest.raises(ValueError):
        truncation_rank(0, 0.5)


def test_truncate_keep_all_is_identity():
    z = _random((16, 10), seed=4)
    out = truncate_reconstruct(svd(z), 1.0)
    np.testing.assert_allclose(out, z, atol=1e-10)


def test_truncate_rejects_bad_fraction():
    dec = svd(_random((4, 4), seed=5))
    for kf in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            truncate_reconstruct(dec, kf)


def test_truncation_drops_tail_of_diagonal():
    z = np.diag([3.0, 2.0, 1.0])
    dec = svd(z)
    out = truncate_reconstruct(dec, 0.34)  # keeps k=2
    np.testing.assert_allclose(out, np.diag([3.0, 2.0, 0.0]), atol=1e-12)
    assert truncation_error(dec.sigma, 2) == pytest.approx(1.0)
    assert truncation_error(dec.sigma, 1) == pytest.approx(math.sqrt(5.0))


def test_truncation_error_matches_direct_norm():
    z = _random((24, 9), seed=6)
    dec = svd(z)
    for k in (1, 3, 5, 9):
        z_k = (dec.u[:, :k] * dec.sigma[:k]) @ dec.v[:, :k].T
        measured = np.linalg.norm(z - z_k)
        assert truncation_error(dec.sigma, k) == pytest.approx(measured, abs=1e-9)


def test_truncation_error_bounds():
    sigma = np.array([4.0, 2.0, 1.0])
    assert truncation_error(sigma, 3) == 0.0
    assert truncation_error(sigma, 0) == pytest.approx(np.linalg.norm(sigma))
    with pytest.raises(ValueError):
        truncation_error(sigma, 4)
    with pytest.raises(ValueError):
        truncation_error(sigma, -1)
