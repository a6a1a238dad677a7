"""Singular-spectrum diagnostics: thin SVD, effective rank, truncation.

Effective rank is the exponential of the Shannon entropy of the normalized
spectrum; it counts how many singular directions carry meaningful energy
and is the quantity that collapses when attention windows grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInputError


@dataclass(frozen=True)
class SpectralDecomposition:
    """Thin SVD triple: ``u @ diag(sigma) @ v.T`` reconstructs the source.

    ``u`` is N x r and ``v`` is d x r, both column-orthonormal; ``sigma`` is
    non-negative and non-increasing, r = min(N, d).  Zero singular values are
    kept so both fusion branches always expose the same r.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def svd(z: np.ndarray) -> SpectralDecomposition:
    """Thin SVD of a tokens-x-channels feature matrix.

    Deterministic up to simultaneous sign flips of paired u/v columns, which
    cancel in every reconstruction.  Raises on non-finite input; LAPACK
    convergence failures propagate as ``numpy.linalg.LinAlgError``.
    """
    z = np.asarray(z)
    if z.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {z.shape}")
    if z.shape[0] < 1 or z.shape[1] < 1:
        raise ValueError(f"matrix must be at least 1x1, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteInputError("matrix contains NaN or infinity")
    u, s, vh = np.linalg.svd(z, full_matrices=False)
    return SpectralDecomposition(u=u, sigma=s, v=vh.T)


def _checked_spectrum(sigma) -> np.ndarray:
    s = np.asarray(sigma, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError(f"spectrum must be 1-D, got shape {s.shape}")
    if s.size == 0:
        raise ValueError("spectrum is empty")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("spectrum entries must be finite and non-negative")
    if not np.any(s > 0):
        raise ValueError("undefined spectrum: all singular values are zero")
    return s


def normalized_spectrum(sigma) -> np.ndarray:
    """p_i = sigma_i / sum(sigma); sums to 1."""
    s = _checked_spectrum(sigma)
    return s / s.sum()


def effective_rank(sigma) -> float:
    """exp of the Shannon entropy of the normalized spectrum.

    Zero entries contribute nothing (0 * log 0 = 0 convention).  Lies in
    [1, number of positive entries], hitting the top only for a flat
    spectrum.
    """
    p = normalized_spectrum(sigma)
    pos = p[p > 0]
    return float(np.exp(-np.sum(pos * np.log(pos))))


def truncate_reconstruct(dec: SpectralDecomposition, keep_fraction: float) -> np.ndarray:
    """Rank-ratio truncation: keep the leading ceil(keep_fraction * r)
    components (at least one) and rebuild.

    By Eckart-Young the Frobenius error is sqrt(sum of the squared dropped
    singular values).
    """
    kf = float(keep_fraction)
    if not (0.0 < kf <= 1.0) or math.isnan(kf):
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    k = truncation_rank(dec.rank, kf)
    return (dec.u[:, :k] * dec.sigma[:k]) @ dec.v[:, :k].T


def truncation_rank(r: int, keep_fraction: float) -> int:
    """Number of components kept for a rank-r spectrum: max(1, ceil(kf*r))."""
    if r < 1:
        raise ValueError(f"rank must be >= 1, got {r}")
    return max(1, math.ceil(keep_fraction * r))


def truncation_error(sigma, k: int) -> float:
    """Frobenius norm of the dropped tail: sqrt(sum_{i>k} sigma_i^2)."""
    s = np.asarray(sigma, dtype=np.float64)
    if k < 0 or k > s.shape[0]:
        raise ValueError(f"k must lie in [0, {s.shape[0]}], got {k}")
    return float(np.sqrt(np.sum(s[k:] ** 2)))
