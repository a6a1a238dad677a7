"""Surrogate denoising trajectory and sweep drivers for spectral diagnostics.

A pretrained video backbone is far too heavy for a test bench, so effective
rank experiments run on the smallest system that still shows window- and
timestep-dependent spectra: a fixed low-rank signal matrix blended with fresh
per-step noise, pushed through one seeded attention block.

    X_t = (1 - lambda(t)) * S + lambda(t) * E_t

S has rank ``signal_rank`` and varies smoothly across frames; E_t is
unit-variance Gaussian noise redrawn per timestep; Q, K, V come from three
fixed linear maps shared across the trajectory.  Everything is a pure
function of the spec, so sweeps are reproducible bit for bit.

Numbers produced here track the direction of the real phenomenon (wider
windows and later timesteps concentrate the spectrum), not its magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .attention import AttentionInputs, WindowSpec, band_mask, masked_attention
from .fusion import FusionConfig, freespec_attention
from .spectral import effective_rank, svd

DEFAULT_TIMESTEPS: tuple[float, ...] = tuple(
    float(t) for t in np.linspace(1.0, 0.0, 21)
)

# purpose tags feeding SeedSequence so signal, noise and maps never share a stream
_TAG_SIGNAL = 1
_TAG_NOISE = 2
_TAG_MAPS = 3

_LATENT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def _linear_schedule(t: float) -> float:
    return t


@dataclass(frozen=True)
class TrajectorySpec:
    """Shape, seed and noise schedule of one surrogate trajectory.

    Tokens are ordered frame-major, N = frames * spatial_tokens.  The native
    attention window covers native_frames of those frames, so window multiple
    m spans m * native_frames * spatial_tokens tokens.  ``noise_schedule``
    maps a timestep to a noise level in [0, 1]; None means lambda(t) = t.
    """

    frames: int = 16
    spatial_tokens: int = 16
    channels: int = 32
    native_frames: int = 4
    timesteps: tuple[float, ...] = DEFAULT_TIMESTEPS
    seed: int = 0
    signal_rank: int = 4
    noise_schedule: Callable[[float], float] | None = None

    def __post_init__(self):
        for name in ("frames", "spatial_tokens", "channels", "native_frames"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.frames % self.native_frames != 0:
            raise ValueError(
                f"frames ({self.frames}) must be divisible by native_frames ({self.native_frames})"
            )
        if not isinstance(self.seed, (int, np.integer)) or not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not isinstance(self.signal_rank, (int, np.integer)) or self.signal_rank < 1:
            raise ValueError(f"signal_rank must be >= 1, got {self.signal_rank!r}")
        if self.signal_rank > min(self.tokens, self.channels):
            raise ValueError(
                f"signal_rank ({self.signal_rank}) exceeds min(tokens, channels) "
                f"= {min(self.tokens, self.channels)}"
            )
        ts = tuple(float(t) for t in self.timesteps)
        if not ts:
            raise ValueError("timesteps must be non-empty")
        if not all(math.isfinite(t) for t in ts):
            raise ValueError("timesteps must be finite")
        if any(b >= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"timesteps must be strictly descending, got {ts}")
        object.__setattr__(self, "timesteps", ts)
        levels = [self.lambda_at(t) for t in ts]
        if any(b > a for a, b in zip(levels, levels[1:])):
            raise ValueError("noise schedule must be monotone in t over the timestep grid")

    @property
    def tokens(self) -> int:
        return self.frames * self.spatial_tokens

    @property
    def native_window(self) -> int:
        return self.native_frames * self.spatial_tokens

    def lambda_at(self, t: float) -> float:
        sched = self.noise_schedule or _linear_schedule
        lam = float(sched(t))
        if not (0.0 <= lam <= 1.0):
            raise ValueError(f"noise level lambda({t}) = {lam} is outside [0, 1]")
        return lam

    def as_dict(self) -> dict:
        return {
            "frames": self.frames,
            "spatial_tokens": self.spatial_tokens,
            "channels": self.channels,
            "native_frames": self.native_frames,
            "timesteps": list(self.timesteps),
            "seed": int(self.seed),
            "signal_rank": self.signal_rank,
            "noise_schedule": "linear" if self.noise_schedule is None else "custom",
        }


@dataclass(frozen=True)
class TrajectoryStep:
    """One timestep of a trajectory: the latent and its derived Q/K/V."""

    t: float
    latent: np.ndarray
    inputs: AttentionInputs


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *tags]))


def _signal_matrix(spec: TrajectorySpec) -> np.ndarray:
    """Fixed rank-`signal_rank` clean component, unit standard deviation.

    Each component is a sinusoidal frame profile times a Gaussian spatial
    profile, broadcast over channels by a Gaussian mixing vector, so the
    signal moves smoothly along the frame axis the way video features do.
    """
    rng = _rng(spec.seed, _TAG_SIGNAL)
    frame_idx = np.arange(spec.frames, dtype=np.float64)
    s = np.zeros((spec.tokens, spec.channels), dtype=np.float64)
    for c in range(spec.signal_rank):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        temporal = np.sin(2.0 * np.pi * (c + 1) * frame_idx / spec.frames + phase)
        spatial = rng.standard_normal(spec.spatial_tokens)
        channel = rng.standard_normal(spec.channels)
        token_profile = (temporal[:, None] * spatial[None, :]).ravel()
        s += np.outer(token_profile, channel)
    std = s.std()
    if std < 1e-12:
        raise ValueError("degenerate signal draw; choose a different seed")
    return s / std


def _feature_maps(spec: TrajectorySpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = _rng(spec.seed, _TAG_MAPS)
    scale = 1.0 / math.sqrt(spec.channels)
    shape = (spec.channels, spec.channels)
    return (
        rng.standard_normal(shape) * scale,
        rng.standard_normal(shape) * scale,
        rng.standard_normal(shape) * scale,
    )


def latent_at(spec: TrajectorySpec, t: float, step_index: int) -> np.ndarray:
    """Noised latent X_t with noise redrawn per step index."""
    lam = spec.lambda_at(t)
    noise = _rng(spec.seed, _TAG_NOISE, step_index).standard_normal(
        (spec.tokens, spec.channels)
    )
    return (1.0 - lam) * _signal_matrix(spec) + lam * noise


def make_trajectory(spec: TrajectorySpec, dtype=np.float64) -> tuple[TrajectoryStep, ...]:
    """Materialize every timestep of the trajectory, deterministically in seed."""
    dt = np.dtype(dtype)
    if dt not in _LATENT_DTYPES:
        raise ValueError(f"dtype must be float32 or float64, got {dt}")
    signal = _signal_matrix(spec)
    w_q, w_k, w_v = _feature_maps(spec)
    steps = []
    for i, t in enumerate(spec.timesteps):
        lam = spec.lambda_at(t)
        noise = _rng(spec.seed, _TAG_NOISE, i).standard_normal(
            (spec.tokens, spec.channels)
        )
        x = (1.0 - lam) * signal + lam * noise
        inputs = AttentionInputs(
            q=(x @ w_q).astype(dt),
            k=(x @ w_k).astype(dt),
            v=(x @ w_v).astype(dt),
        )
        steps.append(TrajectoryStep(t=t, latent=x, inputs=inputs))
    return tuple(steps)


@dataclass(frozen=True)
class RankRow:
    """One measurement: effective rank of one attention output."""

    timestep: float
    window_multiple: int
    seed: int
    effective_rank: float


@dataclass(frozen=True)
class SummaryRow:
    """Seed-aggregated statistics for one (timestep, window_multiple) cell."""

    timestep: float
    window_multiple: int
    n: int
    mean_effective_rank: float
    stderr_effective_rank: float


@dataclass(frozen=True)
class RankReport:
    """Sorted measurement rows plus per-cell summary statistics."""

    rows: tuple[RankRow, ...]
    summary: tuple[SummaryRow, ...]

    @classmethod
    def from_rows(cls, rows: Sequence[RankRow]) -> "RankReport":
        ordered = tuple(
            sorted(rows, key=lambda r: (-r.timestep, r.window_multiple, r.seed))
        )
        cells: dict[tuple[float, int], list[float]] = {}
        for r in ordered:
            cells.setdefault((r.timestep, r.window_multiple), []).append(r.effective_rank)
        summary = []
        for (t, m), vals in cells.items():
            n = len(vals)
            arr = np.asarray(vals, dtype=np.float64)
            stderr = 0.0 if n == 1 else float(arr.std(ddof=1) / math.sqrt(n))
            summary.append(
                SummaryRow(
                    timestep=t,
                    window_multiple=m,
                    n=n,
                    mean_effective_rank=float(arr.mean()),
                    stderr_effective_rank=stderr,
                )
            )
        return cls(rows=ordered, summary=tuple(summary))


def _checked_multiples(spec: TrajectorySpec, multiples: Sequence[int]) -> list[int]:
    ms = list(multiples)
    if not ms:
        raise ValueError("need at least one window multiple")
    for m in ms:
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ValueError(f"window multiples must be positive integers, got {m!r}")
        if m * spec.native_frames > spec.frames:
            raise ValueError(
                f"window multiple {m} spans {m * spec.native_frames} frames, "
                f"more than the sequence's {spec.frames}"
            )
    return [int(m) for m in ms]


def sweep_windows(spec: TrajectorySpec, multiples: Sequence[int],
                  seeds: Sequence[int], dtype=np.float64) -> RankReport:
    """Effective rank of banded attention across (timestep, window, seed).

    The driver behind rank-decay curves: larger multiples widen the band
    until it covers the full sequence at multiple = frames / native_frames.
    """
    ms = _checked_multiples(spec, multiples)
    seed_list = [int(s) for s in seeds]
    if not seed_list:
        raise ValueError("need at least one seed")
    n = spec.tokens
    masks = {m: band_mask(n, m * spec.native_window) for m in set(ms)}
    rows = []
    for seed in seed_list:
        steps = make_trajectory(replace(spec, seed=seed), dtype)
        for step in steps:
            for m in ms:
                z = masked_attention(step.inputs, masks[m])
                rows.append(
                    RankRow(
                        timestep=step.t,
                        window_multiple=m,
                        seed=seed,
                        effective_rank=effective_rank(svd(z).sigma),
                    )
                )
    return RankReport.from_rows(rows)


def run_mode(spec: TrajectorySpec, cfg: FusionConfig, win: WindowSpec,
             dtype=np.float64) -> tuple[tuple[np.ndarray, ...], RankReport]:
    """Run one fusion mode down the whole trajectory.

    Returns the per-timestep outputs plus a report of their effective ranks
    (window column = win.multiple, seed column = spec.seed).
    """
    steps = make_trajectory(spec, dtype)
    outputs = []
    rows = []
    for step in steps:
        z = freespec_attention(step.inputs, win, step.t, cfg)
        outputs.append(z)
        rows.append(
            RankRow(
                timestep=step.t,
                window_multiple=win.multiple,
                seed=spec.seed,
                effective_rank=effective_rank(svd(z).sigma),
            )
        )
    return tuple(outputs), RankReport.from_rows(rows)
