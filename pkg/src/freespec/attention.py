"""Masked scaled-dot-product attention with banded and full windows.

The two windows produce the local branch (each token attends only to tokens
within ``|i - j| <= window``) and the global branch (every token attends to
the whole sequence).  The kernel is single-head and bidirectional; callers
iterate heads themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import NonFiniteInputError

_FEATURE_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def _check_feature_matrix(name: str, arr: np.ndarray) -> None:
    if not isinstance(arr, np.ndarray):
        raise ValueError(f"{name} must be a numpy array, got {type(arr).__name__}")
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (tokens x channels), got shape {arr.shape}")
    if arr.dtype not in _FEATURE_DTYPES:
        raise ValueError(f"{name} must be float32 or float64, got {arr.dtype}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one token and one channel")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"{name} contains NaN or infinity")


@dataclass(frozen=True)
class AttentionInputs:
    """Query/key/value features, N tokens by d channels each.

    ``scale`` defaults to 1/sqrt(d).
    """

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        for name, arr in (("q", self.q), ("k", self.k), ("v", self.v)):
            _check_feature_matrix(name, arr)
        if not (self.q.shape == self.k.shape == self.v.shape):
            raise ValueError(
                f"q, k, v must share one shape, got {self.q.shape}, {self.k.shape}, {self.v.shape}"
            )
        if not (self.q.dtype == self.k.dtype == self.v.dtype):
            raise ValueError("q, k, v must share one dtype")
        if self.scale is None:
            object.__setattr__(self, "scale", 1.0 / math.sqrt(self.q.shape[1]))
        else:
            s = float(self.scale)
            if not math.isfinite(s) or s <= 0.0:
                raise ValueError(f"scale must be finite and positive, got {self.scale}")
            object.__setattr__(self, "scale", s)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def d(self) -> int:
        return self.q.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.q.dtype


@dataclass(frozen=True)
class WindowSpec:
    """Local-attention window: ``native_window`` tokens times ``multiple``.

    ``native_window`` is the pretraining token count f*h*w; ``multiple`` 1
    means the native window, larger values widen it, and 0 degenerates to
    self-only attention.
    """

    native_window: int
    multiple: int = 1

    def __post_init__(self):
        if self.native_window < 1:
            raise ValueError(f"native_window must be >= 1, got {self.native_window}")
        if self.multiple < 0:
            raise ValueError(f"multiple must be >= 0, got {self.multiple}")

    @property
    def effective(self) -> int:
        return self.native_window * self.multiple


def band_mask(n: int, window: int) -> np.ndarray:
    """Boolean n x n mask admitting pairs with ``|i - j| <= window``."""
    if n < 1:
        raise ValueError(f"token count must be >= 1, got {n}")
    if window < 0:
        raise ValueError(f"window must be >= 0, got {window}")
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :]) <= window


def full_mask(n: int) -> np.ndarray:
    """All-admissible n x n mask (the global branch)."""
    if n < 1:
        raise ValueError(f"token count must be >= 1, got {n}")
    return np.ones((n, n), dtype=bool)


def masked_attention(inp: AttentionInputs, mask: np.ndarray) -> np.ndarray:
    """Row-wise softmax attention restricted to admissible pairs.

    Per row i the logits ``scale * q_i . k_j`` are softmaxed over admissible
    j (max-subtracted for stability); inadmissible pairs get zero weight.
    Accumulation runs in float64 regardless of feature dtype; the output is
    cast back to the input dtype.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (inp.n, inp.n):
        raise ValueError(f"mask must be {inp.n}x{inp.n}, got {mask.shape}")
    if not mask.any(axis=1).all():
        bad = int(np.flatnonzero(~mask.any(axis=1))[0])
        raise ValueError(f"mask row {bad} admits no key; every row needs >= 1 admissible entry")

    q64 = inp.q.astype(np.float64, copy=False)
    k64 = inp.k.astype(np.float64, copy=False)
    v64 = inp.v.astype(np.float64, copy=False)
    out = backend.attend_masked(q64, k64, v64, inp.scale, mask)
    return out.astype(inp.dtype, copy=False)


def dual_branch(inp: AttentionInputs, win: WindowSpec) -> tuple[np.ndarray, np.ndarray]:
    """Local (banded) and global (full-window) branch outputs, both N x d."""
    z_local = masked_attention(inp, band_mask(inp.n, win.effective))
    z_global = masked_attention(inp, full_mask(inp.n))
    return z_local, z_global
