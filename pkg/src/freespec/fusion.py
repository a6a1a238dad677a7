"""Spectrum-level fusion of the global and local attention branches.

The pipeline for a timestep t inside the fusion stage (tau < t <= T):

1.  normalized progress  p = (T - t) / (T - tau)
2.  branch weights       w_l = (1 - exp(-alpha*p)) / (1 - exp(-alpha)),
                         w_g = 1 - w_l
3.  per-rank coefficients gamma(k) = w_g * exp(-beta * k / r), k = 1..r
4.  fused spectrum       sigma_hat(k) = gamma(k)*sigma_g(k) + (1-gamma(k))*sigma_l(k)
5.  reconstruction       Z_hat = U_l @ diag(sigma_hat) @ V_l.T   (local basis)
6.  global residual      a_t = a0 + a1*w_g;  Z_o = (1-a_t)*Z_hat + a_t*Z_g

For t <= tau the operator returns the local branch unchanged.  The global
branch thereby acts only as low-rank spectral guidance early on, while the
local singular basis keeps the high-rank detail directions throughout.

Schedule math always runs in float64, whatever the feature dtype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .attention import AttentionInputs, WindowSpec, band_mask, dual_branch, full_mask, masked_attention
from .spectral import svd


class FusionMode(Enum):
    """Fusion variants; FREESPEC is the full method (alias of LB_RA_TA_TGR).

    Naming: GB/LB = global/local reconstruction basis, RA/TA = rank-aware /
    timestep-aware modulation, FGR/TGR = fixed / timestep-scaled global
    residual.  LOCAL_ONLY and GLOBAL_ONLY are the single-branch baselines.
    """

    FREESPEC = "FREESPEC"
    GLOBAL_BASIS = "GLOBAL_BASIS"
    LOCAL_BASIS_FIXED = "LOCAL_BASIS_FIXED"
    LB_RA = "LB_RA"
    LB_TA = "LB_TA"
    LB_RA_TA = "LB_RA_TA"
    LB_RA_TA_FGR = "LB_RA_TA_FGR"
    LB_RA_TA_TGR = "LB_RA_TA_TGR"
    LOCAL_ONLY = "LOCAL_ONLY"
    GLOBAL_ONLY = "GLOBAL_ONLY"


_RESIDUAL_MODES = frozenset(
    {FusionMode.FREESPEC, FusionMode.LB_RA_TA_TGR, FusionMode.LB_RA_TA_FGR}
)


@dataclass(frozen=True)
class FusionConfig:
    """All scalar knobs of the fusion operator.

    Defaults: T=1.0, tau=0.9, alpha=5.0, beta=5.0, a0=0.15, a1=0.2.
    ``fixed_weight`` replaces w_g in LB_RA and gamma in LOCAL_BASIS_FIXED,
    the two variants whose schedule is deliberately frozen.
    """

    t_max: float = 1.0
    tau: float = 0.9
    alpha: float = 5.0
    beta: float = 5.0
    a0: float = 0.15
    a1: float = 0.2
    mode: FusionMode = FusionMode.FREESPEC
    fixed_weight: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.tau < self.t_max):
            raise ValueError(f"need 0 <= tau < T, got tau={self.tau}, T={self.t_max}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.a0 < 0.0 or self.a1 < 0.0 or self.a0 + self.a1 > 1.0:
            raise ValueError(f"need a0, a1 >= 0 and a0 + a1 <= 1, got a0={self.a0}, a1={self.a1}")
        if not isinstance(self.mode, FusionMode):
            raise ValueError(f"mode must be a FusionMode, got {self.mode!r}")
        if not (0.0 <= self.fixed_weight <= 1.0):
            raise ValueError(f"fixed_weight must lie in [0, 1], got {self.fixed_weight}")

    def as_dict(self) -> dict:
        return {
            "t_max": self.t_max,
            "tau": self.tau,
            "alpha": self.alpha,
            "beta": self.beta,
            "a0": self.a0,
            "a1": self.a1,
            "mode": self.mode.name,
            "fixed_weight": self.fixed_weight,
        }


@dataclass(frozen=True)
class ScheduleState:
    """Resolved schedule at one timestep: progress and branch weights."""

    t: float
    p: float
    w_local: float
    w_global: float


def progress(t: float, cfg: FusionConfig) -> float:
    """Normalized progress (T - t) / (T - tau) within the fusion stage.

    Defined only for tau < t <= T; callers gate t <= tau to the local branch
    before asking for progress.
    """
    if not (cfg.tau < t <= cfg.t_max):
        raise ValueError(
            f"t={t} is outside the fusion stage ({cfg.tau}, {cfg.t_max}]; gate first"
        )
    return (cfg.t_max - t) / (cfg.t_max - cfg.tau)


def branch_weights(p: float, alpha: float) -> tuple[float, float]:
    """Exponential schedule (w_local, w_global) at progress p in [0, 1].

    w_local rises monotonically from 0 at p=0 to 1 at p=1; alpha controls
    how quickly guidance hands over from the global to the local branch.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"progress must lie in [0, 1], got {p}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    w_local = (1.0 - math.exp(-alpha * p)) / (1.0 - math.exp(-alpha))
    return w_local, 1.0 - w_local


def schedule_state(t: float, cfg: FusionConfig) -> ScheduleState:
    p = progress(t, cfg)
    w_local, w_global = branch_weights(p, cfg.alpha)
    return ScheduleState(t=t, p=p, w_local=w_local, w_global=w_global)


def rank_coefficients(w_global: float, beta: float, r: int) -> np.ndarray:
    """Per-rank global coefficients gamma(k) = w_g * exp(-beta * k / r).

    k is 1-based, so even the leading component is decayed by exp(-beta/r).
    Non-increasing in k; every entry lies in [0, w_g].
    """
    if r < 1:
        raise ValueError(f"rank count must be >= 1, got {r}")
    if not (0.0 <= w_global <= 1.0):
        raise ValueError(f"w_global must lie in [0, 1], got {w_global}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    k = np.arange(1, r + 1, dtype=np.float64)
    return w_global * np.exp(-beta * k / r)


def fuse_spectrum(gamma, sigma_global, sigma_local) -> np.ndarray:
    """Per-rank convex blend: gamma*sigma_g + (1 - gamma)*sigma_l."""
    g = np.asarray(gamma, dtype=np.float64)
    sg = np.asarray(sigma_global, dtype=np.float64)
    sl = np.asarray(sigma_local, dtype=np.float64)
    if not (g.shape == sg.shape == sl.shape) or g.ndim != 1:
        raise ValueError(
            f"gamma and both spectra must share one 1-D length, got {g.shape}, {sg.shape}, {sl.shape}"
        )
    return g * sg + (1.0 - g) * sl


def reconstruct_local_basis(u, v, sigma_hat) -> np.ndarray:
    """Rebuild a feature matrix from a basis pair and a fused spectrum."""
    u = np.asarray(u)
    v = np.asarray(v)
    s = np.asarray(sigma_hat)
    if u.ndim != 2 or v.ndim != 2 or s.ndim != 1:
        raise ValueError("u, v must be 2-D and sigma_hat 1-D")
    if u.shape[1] != s.shape[0] or v.shape[1] != s.shape[0]:
        raise ValueError(
            f"rank mismatch: u is {u.shape}, v is {v.shape}, sigma_hat has length {s.shape[0]}"
        )
    return (u * s) @ v.T


def residual_weight(w_global: float, cfg: FusionConfig) -> float:
    """Residual strength a_t = a0 + a1*w_g (just a0 for the fixed variant)."""
    if cfg.mode is FusionMode.LB_RA_TA_FGR:
        return cfg.a0
    return cfg.a0 + cfg.a1 * w_global


def global_residual(z_hat, z_global, w_global: float, cfg: FusionConfig) -> np.ndarray:
    """Convex blend (1 - a_t)*Z_hat + a_t*Z_g keeping a little full-window signal."""
    z_hat = np.asarray(z_hat)
    z_global = np.asarray(z_global)
    if z_hat.shape != z_global.shape:
        raise ValueError(f"shape mismatch: {z_hat.shape} vs {z_global.shape}")
    a_t = residual_weight(w_global, cfg)
    return (1.0 - a_t) * z_hat + a_t * z_global


def _gamma_for_mode(cfg: FusionConfig, w_global: float, r: int) -> np.ndarray:
    mode = cfg.mode
    if mode is FusionMode.LOCAL_BASIS_FIXED:
        return np.full(r, cfg.fixed_weight, dtype=np.float64)
    if mode is FusionMode.LB_RA:
        # rank decay only: the timestep weight is pinned to fixed_weight
        return rank_coefficients(cfg.fixed_weight, cfg.beta, r)
    if mode is FusionMode.LB_TA:
        # timestep weight only: no rank decay
        return rank_coefficients(w_global, 0.0, r)
    return rank_coefficients(w_global, cfg.beta, r)


def fuse_branches(z_local: np.ndarray, z_global: np.ndarray, t: float,
                  cfg: FusionConfig) -> np.ndarray:
    """Fuse precomputed branch outputs at timestep t.

    Gating: GLOBAL_ONLY always returns the global branch; LOCAL_ONLY and any
    t <= tau return the local branch unchanged (bit-equal).  Otherwise both
    branches are decomposed and blended per ``cfg.mode``.
    """
    z_local = np.asarray(z_local)
    z_global = np.asarray(z_global)
    if z_local.shape != z_global.shape:
        raise ValueError(f"branch shape mismatch: {z_local.shape} vs {z_global.shape}")
    if not (0.0 <= t <= cfg.t_max):
        raise ValueError(f"t must lie in [0, {cfg.t_max}], got {t}")

    if cfg.mode is FusionMode.GLOBAL_ONLY:
        return z_global
    if cfg.mode is FusionMode.LOCAL_ONLY or t <= cfg.tau:
        return z_local

    dec_local = svd(z_local)
    dec_global = svd(z_global)
    state = schedule_state(t, cfg)
    gamma = _gamma_for_mode(cfg, state.w_global, dec_local.rank)
    sigma_hat = fuse_spectrum(gamma, dec_global.sigma, dec_local.sigma)
    basis = dec_global if cfg.mode is FusionMode.GLOBAL_BASIS else dec_local
    fused = reconstruct_local_basis(basis.u, basis.v, sigma_hat)
    if cfg.mode in _RESIDUAL_MODES:
        fused = global_residual(fused, z_global, state.w_global, cfg)
    return fused.astype(z_local.dtype, copy=False)


def freespec_attention(inp: AttentionInputs, win: WindowSpec, t: float,
                       cfg: FusionConfig) -> np.ndarray:
    """End-to-end operator: dual-branch attention plus spectral fusion.

    Single-branch modes and the t <= tau gate skip the unused branch
    entirely, which is where the late-stage speedup comes from.
    """
    if not (0.0 <= t <= cfg.t_max):
        raise ValueError(f"t must lie in [0, {cfg.t_max}], got {t}")
    if cfg.mode is FusionMode.GLOBAL_ONLY:
        return masked_attention(inp, full_mask(inp.n))
    if cfg.mode is FusionMode.LOCAL_ONLY or t <= cfg.tau:
        return masked_attention(inp, band_mask(inp.n, win.effective))
    z_local, z_global = dual_branch(inp, win)
    return fuse_branches(z_local, z_global, t, cfg)
