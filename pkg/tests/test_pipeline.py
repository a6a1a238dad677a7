"""Surrogate trajectory: determinism, statistics, and sweep drivers."""

from dataclasses import replace

import numpy as np
import pytest

from freespec import (
    FusionConfig,
    FusionMode,
    RankReport,
    RankRow,
    TrajectorySpec,
    WindowSpec,
    band_mask,
    effective_rank,
    make_trajectory,
    masked_attention,
    run_mode,
    svd,
    sweep_windows,
)

SMALL = TrajectorySpec(frames=8, spatial_tokens=8, channels=16, native_frames=4,
                       timesteps=(1.0, 0.95, 0.5, 0.0), signal_rank=3)


# --- spec validation ---------------------------------------------------------

def test_spec_defaults():
    spec = TrajectorySpec()
    assert spec.tokens == 256
    assert spec.native_window == 64
    assert len(spec.timesteps) == 21
    assert spec.timesteps[0] == 1.0 and spec.timesteps[-1] == 0.0


@pytest.mark.parametrize(
    "kw",
    [
        {"frames": 10, "native_frames": 4},
        {"frames": 0},
        {"signal_rank": 0},
        {"signal_rank": 999},
        {"timesteps": ()},
        {"timesteps": (0.5, 0.9)},
        {"timesteps": (0.9, 0.9)},
        {"timesteps": (np.nan, 0.5)},
        {"timesteps": (2.0, 0.5)},  # linear schedule leaves [0, 1]
        {"seed": -1},
    ],
)
def test_spec_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        TrajectorySpec(**kw)


def test_non_monotone_schedule_rejected():
    with pytest.raises(ValueError):
        TrajectorySpec(timesteps=(1.0, 0.5, 0.0),
                       noise_schedule=lambda t: 1.0 - t)


def test_custom_schedule_accepted():
    spec = TrajectorySpec(timesteps=(1.0, 0.5, 0.0), noise_schedule=lambda t: t * t)
    assert spec.lambda_at(0.5) == 0.25
    assert spec.as_dict()["noise_schedule"] == "custom"


# --- trajectory construction -------------------------------------------------

def test_same_seed_bit_identical():
    a = make_trajectory(SMALL)
    b = make_trajectory(SMALL)
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.latent, sb.latent)
        assert np.array_equal(sa.inputs.q, sb.inputs.q)
        assert np.array_equal(sa.inputs.v, sb.inputs.v)


def test_different_seeds_differ():
    a = make_trajectory(SMALL)
    b = make_trajectory(replace(SMALL, seed=1))
    assert not np.array_equal(a[0].latent, b[0].latent)


def test_shapes_follow_spec():
    spec = TrajectorySpec(frames=8, spatial_tokens=16, channels=32,
                          native_frames=4, timesteps=(1.0, 0.0))
    steps = make_trajectory(spec)
    assert len(steps) == 2
    for s in steps:
        assert s.latent.shape == (128, 32)
        assert s.inputs.q.shape == (128, 32)
        assert s.inputs.q.dtype == np.float64


def test_float32_trajectory():
    steps = make_trajectory(SMALL, np.float32)
    assert steps[0].inputs.q.dtype == np.float32
    with pytest.raises(ValueError):
        make_trajectory(SMALL, np.int32)


def test_unit_variance_at_pure_noise():
    spec = TrajectorySpec(frames=8, spatial_tokens=16, channels=32,
                          native_frames=4, timesteps=(1.0, 0.0))
    x = make_trajectory(spec)[0].latent  # t = 1, lambda = 1
    assert x.var() == pytest.approx(1.0, abs=0.15)


def test_clean_endpoint_is_the_low_rank_signal():
    steps = make_trajectory(SMALL)
    x0 = steps[-1].latent  # t = 0, lambda = 0
    assert np.linalg.matrix_rank(x0) == SMALL.signal_rank
    assert x0.std() == pytest.approx(1.0, abs=1e-9)


def test_noise_redrawn_per_step():
    spec = TrajectorySpec(frames=8, spatial_tokens=8, channels=16,
                          native_frames=4, timesteps=(1.0, 0.999))
    steps = make_trajectory(spec)
    assert not np.array_equal(steps[0].latent, steps[1].latent)


def test_latent_rank_rises_with_noise():
    # pure-noise endpoint has much flatter spectrum than the rank-3 signal
    highs, lows = [], []
    for seed in range(20):
        steps = make_trajectory(replace(SMALL, seed=seed))
        highs.append(effective_rank(svd(steps[0].latent).sigma))
        lows.append(effective_rank(svd(steps[-1].latent).sigma))
    assert np.median(highs) > np.median(lows)


# --- rank report -------------------------------------------------------------

def test_report_sorted_and_summarized():
    rows = [
        RankRow(0.5, 2, 1, 4.0),
        RankRow(1.0, 1, 0, 6.0),
        RankRow(0.5, 1, 0, 3.0),
        RankRow(0.5, 1, 1, 5.0),
        RankRow(1.0, 1, 1, 8.0),
    ]
    rep = RankReport.from_rows(rows)
    keys = [(r.timestep, r.window_multiple, r.seed) for r in rep.rows]
    assert keys == [(1.0, 1, 0), (1.0, 1, 1), (0.5, 1, 0), (0.5, 1, 1), (0.5, 2, 1)]
    cell = {(s.timestep, s.window_multiple): s for s in rep.summary}
    top = cell[(1.0, 1)]
    assert top.n == 2 and top.mean_effective_rank == 7.0
    assert top.stderr_effective_rank == pytest.approx(np.std([6, 8], ddof=1) / np.sqrt(2))
    assert cell[(0.5, 2)].stderr_effective_rank == 0.0


# --- sweep -------------------------------------------------------------------

def test_sweep_row_count_and_bounds():
    rep = sweep_windows(SMALL, [1, 2], [0, 1, 2])
    assert len(rep.rows) == len(SMALL.timesteps) * 2 * 3
    n, d = SMALL.tokens, SMALL.channels
    for r in rep.rows:
        assert 1.0 <= r.effective_rank <= min(n, d)


def test_sweep_duplicate_multiples_duplicate_stats():
    rep = sweep_windows(SMALL, [1, 1], [0])
    by_t = {}
    for r in rep.rows:
        by_t.setdefault(r.timestep, []).append(r.effective_rank)
    for vals in by_t.values():
        assert vals[0] == vals[1]


def test_sweep_rejects_oversized_multiple():
    with pytest.raises(ValueError):
        sweep_windows(SMALL, [3], [0])  # 3 * 4 frames > 8 frames
    with pytest.raises(ValueError):
        sweep_windows(SMALL, [], [0])
    with pytest.raises(ValueError):
        sweep_windows(SMALL, [1], [])


def test_sweep_deterministic():
    a = sweep_windows(SMALL, [1, 2], [0, 1])
    b = sweep_windows(SMALL, [1, 2], [0, 1])
    assert a == b


# --- run_mode ----------------------------------------------------------------

def test_run_mode_local_only_matches_branch_oracle():
    cfg = FusionConfig(mode=FusionMode.LOCAL_ONLY)
    win = WindowSpec(SMALL.native_window, 1)
    outputs, rep = run_mode(SMALL, cfg, win)
    steps = make_trajectory(SMALL)
    mask = band_mask(SMALL.tokens, win.effective)
    for out, step in zip(outputs, steps):
        assert np.array_equal(out, masked_attention(step.inputs, mask))
    assert len(rep.rows) == len(SMALL.timesteps)
    assert all(r.seed == SMALL.seed and r.window_multiple == 1 for r in rep.rows)


def test_run_mode_gated_grid_equals_local_only():
    spec = replace(SMALL, timesteps=(0.8, 0.5, 0.1))  # all below tau
    win = WindowSpec(spec.native_window, 1)
    fused, _ = run_mode(spec, FusionConfig(), win)
    local, _ = run_mode(spec, FusionConfig(mode=FusionMode.LOCAL_ONLY), win)
    for a, b in zip(fused, local):
        assert np.array_equal(a, b)


def test_run_mode_all_modes_execute():
    win = WindowSpec(SMALL.native_window, 1)
    for mode in FusionMode:
        outputs, rep = run_mode(SMALL, FusionConfig(mode=mode), win)
        assert len(outputs) == len(SMALL.timesteps)
        assert all(np.isfinite(o).all() for o in outputs)
