from kdv5_control.spectral.grid import (
    TWO_PI,
    PeriodicGrid,
    SpectralField,
    from_padded_samples,
    padded_samples,
    to_physical,
    to_spectral,
)
from kdv5_control.spectral.multipliers import (
    MultiplierKind,
    MultiplierSymbol,
    apply_multiplier,
    dr,
    dx,
    hilbert,
    mollify,
)
from kdv5_control.spectral.norms import (
    inner_product,
    mean,
    project_mean_zero,
    sobolev_norm,
)
from kdv5_control.spectral.trajectory import (
    Trajectory,
    l2_time_norm,
    trapezoid_weights,
    unit_interval_norms,
    zst_norm,
)
from kdv5_control.spectral.dense import DenseOperator, assemble_matrix

__all__ = [
    "TWO_PI",
    "PeriodicGrid",
    "SpectralField",
    "to_spectral",
    "to_physical",
    "padded_samples",
    "from_padded_samples",
    "MultiplierKind",
    "MultiplierSymbol",
    "apply_multiplier",
    "dr",
    "dx",
    "hilbert",
    "mollify",
    "sobolev_norm",
    "inner_product",
    "mean",
    "project_mean_zero",
    "Trajectory",
    "zst_norm",
    "l2_time_norm",
    "unit_interval_norms",
    "trapezoid_weights",
    "DenseOperator",
    "assemble_matrix",
]
