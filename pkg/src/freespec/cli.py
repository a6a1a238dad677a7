"""Command-line front end.

Four subcommands:

  fuse      fuse two branch tensors (or raw Q/K/V) at a timestep
  effrank   effective-rank sweep over window multiples, CSV out
  demo      run fusion modes down a surrogate trajectory, JSON report out
  truncate  top-k spectral truncation of a stored matrix

Exit codes are a stable contract: 0 success, 2 usage or parameter errors,
3 file and format errors, 4 numerical failures.  Every report comes with a
manifest (embedded for JSON, a sibling .manifest.json for CSV) recording the
full resolved configuration, so a run can be reproduced byte for byte.

Float columns use repr's shortest round-trip decimals, which keeps golden
files stable across platforms.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .attention import AttentionInputs, WindowSpec
from .errors import NonFiniteInputError
from .fusion import FusionConfig, FusionMode, freespec_attention, fuse_branches, schedule_state
from .pipeline import (
    DEFAULT_TIMESTEPS,
    RankReport,
    RankRow,
    TrajectorySpec,
    make_trajectory,
    sweep_windows,
)
from .spectral import effective_rank, svd, truncate_reconstruct, truncation_error, truncation_rank
from .tensor_io import TensorFormatError, read_tensor, write_tensor

_PRECISIONS = {"f32": np.float32, "f64": np.float64}

CSV_HEADER = "timestep,window_multiple,seed,effective_rank"
SUMMARY_HEADER = "timestep,window_multiple,n,mean_effective_rank,stderr_effective_rank"


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(x))


def _parse_mode(name: str) -> FusionMode:
    try:
        return FusionMode[name]
    except KeyError:
        valid = ", ".join(m.name for m in FusionMode)
        raise ValueError(f"unknown mode {name!r}; valid modes: {valid}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated number list, got {text!r}") from None


def _add_fusion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=float, default=1.0, help="max timestep (default 1.0)")
    p.add_argument("--tau", type=float, default=0.9, help="gate timestep (default 0.9)")
    p.add_argument("--alpha", type=float, default=5.0, help="schedule speed (default 5.0)")
    p.add_argument("--beta", type=float, default=5.0, help="rank decay (default 5.0)")
    p.add_argument("--a0", type=float, default=0.15, help="residual floor (default 0.15)")
    p.add_argument("--a1", type=float, default=0.2, help="residual slope (default 0.2)")
    p.add_argument("--fixed-weight", type=float, default=0.5,
                   help="constant weight for LB_RA / LOCAL_BASIS_FIXED (default 0.5)")


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frames", type=int, default=16, help="temporal extent (default 16)")
    p.add_argument("--spatial-tokens", type=int, default=16,
                   help="tokens per frame (default 16)")
    p.add_argument("--channels", type=int, default=32, help="feature channels (default 32)")
    p.add_argument("--native-frames", type=int, default=4,
                   help="frames per native window (default 4)")
    p.add_argument("--signal-rank", type=int, default=4,
                   help="rank of the clean component (default 4)")
    p.add_argument("--timesteps", type=_float_list, default=None,
                   help="comma list, strictly descending (default 21-point grid from 1 to 0)")


def _fusion_config(args, mode: FusionMode) -> FusionConfig:
    return FusionConfig(
        t_max=args.T,
        tau=args.tau,
        alpha=args.alpha,
        beta=args.beta,
        a0=args.a0,
        a1=args.a1,
        mode=mode,
        fixed_weight=args.fixed_weight,
    )


def _trajectory_spec(args, seed: int = 0) -> TrajectorySpec:
    ts = DEFAULT_TIMESTEPS if args.timesteps is None else tuple(args.timesteps)
    return TrajectorySpec(
        frames=args.frames,
        spatial_tokens=args.spatial_tokens,
        channels=args.channels,
        native_frames=args.native_frames,
        timesteps=ts,
        seed=seed,
        signal_rank=args.signal_rank,
    )


def _read_matrix(path: str, precision) -> np.ndarray:
    z = read_tensor(path)
    if z.ndim != 2:
        raise ValueError(f"{path}: expected a 2-D matrix, got {z.ndim} dimensions")
    if precision is not None:
        z = z.astype(precision)
    return z


def _require_finite(name: str, z: np.ndarray) -> None:
    if not np.isfinite(z).all():
        raise NonFiniteInputError(f"{name} contains non-finite values")


def _write_manifest(out: str, manifest: dict) -> Path:
    path = Path(out).with_suffix(".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _write_rank_csv(out: str, report: RankReport) -> None:
    lines = [CSV_HEADER]
    for r in report.rows:
        lines.append(
            f"{_fmt(r.timestep)},{r.window_multiple},{r.seed},{_fmt(r.effective_rank)}"
        )
    Path(out).write_text("\n".join(lines) + "\n")
    summary_path = Path(out).with_suffix(".summary.csv")
    lines = [SUMMARY_HEADER]
    for s in report.summary:
        lines.append(
            f"{_fmt(s.timestep)},{s.window_multiple},{s.n},"
            f"{_fmt(s.mean_effective_rank)},{_fmt(s.stderr_effective_rank)}"
        )
    summary_path.write_text("\n".join(lines) + "\n")


def cmd_fuse(args) -> int:
    mode = _parse_mode(args.mode)
    cfg = _fusion_config(args, mode)
    precision = _PRECISIONS.get(args.precision)
    t = args.t
    qkv = [args.q, args.k, args.v]
    pre = [args.local, args.global_path]

    if any(pre) and any(qkv):
        raise ValueError("give either --local/--global or --q/--k/--v, not both")
    if any(pre):
        if not all(pre):
            raise ValueError("--local and --global must be given together")
        z_local = _read_matrix(args.local, precision)
        z_global = _read_matrix(args.global_path, precision)
        _require_finite("--local", z_local)
        _require_finite("--global", z_global)
        if z_local.dtype != z_global.dtype:
            raise ValueError(
                f"branch dtypes differ: {z_local.dtype} vs {z_global.dtype}; use --precision"
            )
        out = fuse_branches(z_local, z_global, t, cfg)
        shape = out.shape
    else:
        if not all(qkv):
            raise ValueError("need all of --q, --k, --v (or --local/--global)")
        if args.window is None:
            raise ValueError("--window is required with --q/--k/--v")
        if args.window < 0:
            raise ValueError(f"--window must be >= 0, got {args.window}")
        q = _read_matrix(args.q, precision)
        k = _read_matrix(args.k, precision)
        v = _read_matrix(args.v, precision)
        inp = AttentionInputs(q=q, k=k, v=v)
        win = WindowSpec(args.window, 1) if args.window >= 1 else WindowSpec(1, 0)
        out = freespec_attention(inp, win, t, cfg)
        shape = out.shape

    write_tensor(args.out, out)
    if mode is FusionMode.GLOBAL_ONLY:
        detail = "branch=global"
    elif mode is FusionMode.LOCAL_ONLY or t <= cfg.tau:
        detail = "branch=local"
    else:
        state = schedule_state(t, cfg)
        a_t = cfg.a0 if mode is FusionMode.LB_RA_TA_FGR else cfg.a0 + cfg.a1 * state.w_global
        detail = f"w_g={_fmt(state.w_global)} a_t={_fmt(a_t)}"
    print(f"mode={mode.name} t={_fmt(t)} shape={shape[0]}x{shape[1]} {detail} out={args.out}")
    return 0


def cmd_effrank(args) -> int:
    windows = args.windows
    if not windows or any(w < 1 for w in windows):
        raise ValueError(f"--windows must be positive integers, got {windows}")
    precision = _PRECISIONS[args.precision]

    if args.input is not None:
        z = _read_matrix(args.input, None)
        _require_finite("--input", z)
        r_eff = effective_rank(svd(z).sigma)
        rows = [
            RankRow(timestep=args.t, window_multiple=m, seed=0, effective_rank=r_eff)
            for m in windows
        ]
        report = RankReport.from_rows(rows)
        manifest = {
            "command": "effrank",
            "version": __version__,
            "input": str(args.input),
            "t": args.t,
            "windows": windows,
            "seeds": [0],
        }
    else:
        if args.seeds < 1:
            raise ValueError(f"--seeds must be >= 1, got {args.seeds}")
        spec = _trajectory_spec(args)
        seeds = list(range(args.seeds))
        report = sweep_windows(spec, windows, seeds, precision)
        manifest = {
            "command": "effrank",
            "version": __version__,
            "spec": spec.as_dict(),
            "windows": windows,
            "seeds": seeds,
            "precision": args.precision,
        }

    _write_rank_csv(args.out, report)
    manifest["out"] = str(args.out)
    _write_manifest(args.out, manifest)
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return 0


def cmd_demo(args) -> int:
    modes = [_parse_mode(name) for name in args.modes.split(",") if name.strip()]
    if not modes:
        raise ValueError("--modes must name at least one fusion mode")
    if args.seeds < 1:
        raise ValueError(f"--seeds must be >= 1, got {args.seeds}")
    if args.window < 1:
        raise ValueError(f"--window must be >= 1, got {args.window}")
    precision = _PRECISIONS[args.precision]
    base_cfg = _fusion_config(args, FusionMode.FREESPEC)
    local_cfg = replace(base_cfg, mode=FusionMode.LOCAL_ONLY)
    spec = _trajectory_spec(args)
    win = WindowSpec(spec.native_window, args.window)
    seeds = list(range(args.seeds))

    per_mode: dict[str, list[dict]] = {m.name: [] for m in modes}
    for seed in seeds:
        sp = replace(spec, seed=seed)
        steps = make_trajectory(sp, precision)
        reference = [
            freespec_attention(s.inputs, win, s.t, local_cfg) for s in steps
        ]
        for mode in modes:
            cfg = replace(base_cfg, mode=mode)
            for step, ref in zip(steps, reference):
                z = freespec_attention(step.inputs, win, step.t, cfg)
                dist = float(np.linalg.norm(
                    z.astype(np.float64) - ref.astype(np.float64)
                ))
                per_mode[mode.name].append({
                    "timestep": step.t,
                    "seed": seed,
                    "effective_rank": effective_rank(svd(z).sigma),
                    "frobenius_distance_to_local_only": dist,
                })

    mode_blocks = {}
    for name, rows in per_mode.items():
        rows.sort(key=lambda r: (-r["timestep"], r["seed"]))
        summary = []
        for t in sorted({r["timestep"] for r in rows}, reverse=True):
            cell = [r for r in rows if r["timestep"] == t]
            ranks = np.asarray([r["effective_rank"] for r in cell])
            dists = np.asarray([r["frobenius_distance_to_local_only"] for r in cell])
            n = len(cell)
            summary.append({
                "timestep": t,
                "n": n,
                "mean_effective_rank": float(ranks.mean()),
                "stderr_effective_rank":
                    0.0 if n == 1 else float(ranks.std(ddof=1) / np.sqrt(n)),
                "mean_frobenius_distance_to_local_only": float(dists.mean()),
            })
        mode_blocks[name] = {"rows": rows, "per_timestep": summary}

    manifest = {
        "command": "demo",
        "version": __version__,
        "spec": spec.as_dict(),
        "config": base_cfg.as_dict(),
        "modes": [m.name for m in modes],
        "seeds": seeds,
        "window_multiple": args.window,
        "precision": args.precision,
        "out": str(args.out),
    }
    report = {"manifest": manifest, "modes": mode_blocks}
    Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote demo report for {len(modes)} modes x {len(seeds)} seeds to {args.out}")
    return 0


def cmd_truncate(args) -> int:
    kf = args.keep_fraction
    if not (0.0 < kf <= 1.0):
        raise ValueError(f"--keep-fraction must lie in (0, 1], got {kf}")
    z = _read_matrix(args.input, None)
    _require_finite("--input", z)
    dec = svd(z)
    k = truncation_rank(dec.rank, kf)
    z_k = truncate_reconstruct(dec, kf).astype(z.dtype)
    err = truncation_error(dec.sigma, k)
    write_tensor(args.out, z_k)
    print(f"kept_rank={k} total_rank={dec.rank} tail_frobenius_error={_fmt(err)} out={args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freespec",
        description="Training-free singular-spectrum fusion of attention features.",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"freespec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse two branch tensors or raw Q/K/V at a timestep")
    p.add_argument("--q", help="query matrix (FST1)")
    p.add_argument("--k", help="key matrix (FST1)")
    p.add_argument("--v", help="value matrix (FST1)")
    p.add_argument("--local", help="precomputed local branch output (FST1)")
    p.add_argument("--global", dest="global_path", help="precomputed global branch output (FST1)")
    p.add_argument("--t", type=float, required=True, help="denoising timestep")
    p.add_argument("--window", type=int, default=None,
                   help="local band half-width in tokens (with --q/--k/--v)")
    p.add_argument("--mode", default="FREESPEC",
                   help="fusion mode name (default FREESPEC)")
    _add_fusion_flags(p)
    p.add_argument("--precision", choices=sorted(_PRECISIONS), default=None,
                   help="cast inputs to this dtype (default: keep file dtype)")
    p.add_argument("--out", required=True, help="output tensor path (FST1)")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("effrank", help="effective-rank sweep, CSV report")
    p.add_argument("--input", default=None,
                   help="measure one stored matrix instead of the surrogate trajectory")
    p.add_argument("--t", type=float, default=0.0,
                   help="timestep column value for --input mode (default 0.0)")
    p.add_argument("--windows", type=_int_list, default=[1, 2, 3, 4],
                   help="comma list of window multiples (default 1,2,3,4)")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds, 0..n-1 (default 20)")
    _add_spec_flags(p)
    p.add_argument("--precision", choices=sorted(_PRECISIONS), default="f64")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_effrank)

    p = sub.add_parser("demo", help="run fusion modes on the surrogate trajectory")
    p.add_argument("--modes", default="LOCAL_ONLY,GLOBAL_ONLY,FREESPEC",
                   help="comma list of mode names (default LOCAL_ONLY,GLOBAL_ONLY,FREESPEC)")
    p.add_argument("--seeds", type=int, default=20, help="number of seeds, 0..n-1 (default 20)")
    p.add_argument("--window", type=int, default=1,
                   help="window multiple of the local branch (default 1)")
    _add_spec_flags(p)
    _add_fusion_flags(p)
    p.add_argument("--precision", choices=sorted(_PRECISIONS), default="f64")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("truncate", help="top-k spectral truncation of a stored matrix")
    p.add_argument("--input", required=True, help="input matrix (FST1)")
    p.add_argument("--keep-fraction", type=float, required=True,
                   help="fraction of ranks to keep, in (0, 1]")
    p.add_argument("--out", required=True, help="output tensor path (FST1)")
    p.set_defaults(func=cmd_truncate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TensorFormatError, OSError) as e:
        print(f"freespec: error: {e}", file=sys.stderr)
        return 3
    except (NonFiniteInputError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"freespec: numerical error: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"freespec: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
