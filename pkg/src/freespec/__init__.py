"""Training-free singular-spectrum fusion for long-sequence attention features.

The package splits into small, separately testable layers:

  tensor_io   bit-exact FST1 tensor files
  attention   banded (local) and full (global) masked attention
  backend     numba or numpy kernel selection (FREESPEC_BACKEND)
  spectral    SVD, effective rank, low-rank truncation
  fusion      timestep schedule, spectrum modulation, end-to-end operator
  pipeline    surrogate denoising trajectory and sweep drivers
  cli         the `freespec` command
"""

__version__ = "0.1.0"

from .errors import NonFiniteInputError
from .tensor_io import (
    BadMagicError,
    InvalidHeaderError,
    TensorFormatError,
    TruncatedFileError,
    UnsupportedDtypeError,
    read_tensor,
    write_tensor,
)
from .backend import backend_name
from .attention import (
    AttentionInputs,
    WindowSpec,
    band_mask,
    dual_branch,
    full_mask,
    masked_attention,
)
from .spectral import (
    SpectralDecomposition,
    effective_rank,
    normalized_spectrum,
    svd,
    truncate_reconstruct,
    truncation_error,
    truncation_rank,
)
from .fusion import (
    FusionConfig,
    FusionMode,
    ScheduleState,
    branch_weights,
    freespec_attention,
    fuse_branches,
    fuse_spectrum,
    global_residual,
    progress,
    rank_coefficients,
    reconstruct_local_basis,
    residual_weight,
    schedule_state,
)
from .pipeline import (
    DEFAULT_TIMESTEPS,
    RankReport,
    RankRow,
    SummaryRow,
    TrajectorySpec,
    TrajectoryStep,
    latent_at,
    make_trajectory,
    run_mode,
    sweep_windows,
)

__all__ = [
    "__version__",
    "NonFiniteInputError",
    "TensorFormatError",
    "BadMagicError",
    "TruncatedFileError",
    "UnsupportedDtypeError",
    "InvalidHeaderError",
    "read_tensor",
    "write_tensor",
    "backend_name",
    "AttentionInputs",
    "WindowSpec",
    "band_mask",
    "full_mask",
    "masked_attention",
    "dual_branch",
    "SpectralDecomposition",
    "svd",
    "normalized_spectrum",
    "effective_rank",
    "truncate_reconstruct",
    "truncation_rank",
    "truncation_error",
    "FusionMode",
    "FusionConfig",
    "ScheduleState",
    "progress",
    "branch_weights",
    "schedule_state",
    "rank_coefficients",
    "fuse_spectrum",
    "reconstruct_local_basis",
    "residual_weight",
    "global_residual",
    "fuse_branches",
    "freespec_attention",
    "TrajectorySpec",
    "TrajectoryStep",
    "RankRow",
    "SummaryRow",
    "RankReport",
    "DEFAULT_TIMESTEPS",
    "latent_at",
    "make_trajectory",
    "sweep_windows",
    "run_mode",
]
