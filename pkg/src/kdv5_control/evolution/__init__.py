from kdv5_control.evolution.linear import (
    LinearFlow,
    LinearModel,
    adjoint_evolve,
    assemble_generator,
    decay_rate,
    evolve_linear,
    propagator,
    spectral_abscissa,
    uniform_estimate_constant,
    weighted_adjoint_evolve,
)
from kdv5_control.evolution.decay import DecayFit, fit_decay
from kdv5_control.evolution.ledger import (
    LedgerReport,
    adjoint_weighted_ledger,
    energy_ledger,
    weighted_ledger,
)
from kdv5_control.evolution.regularization import (
    BonaSmithStudy,
    bona_smith_study,
    mollifier_bound,
    mollifier_constants,
)
from kdv5_control.evolution.nonlinear import (
    KDV5_COEFFICIENTS,
    NonlinearModel,
    PicardResult,
    evolve_nonlinear,
    measure_decay,
    nonlinear_forcing,
    nonlinear_source,
    nonlinearity,
    picard_solve,
    x_space_check,
)

__all__ = [
    "LinearModel",
    "LinearFlow",
    "assemble_generator",
    "propagator",
    "spectral_abscissa",
    "evolve_linear",
    "adjoint_evolve",
    "weighted_adjoint_evolve",
    "decay_rate",
    "uniform_estimate_constant",
    "DecayFit",
    "fit_decay",
    "LedgerReport",
    "energy_ledger",
    "weighted_ledger",
    "adjoint_weighted_ledger",
    "mollifier_bound",
    "mollifier_constants",
    "BonaSmithStudy",
    "bona_smith_study",
    "KDV5_COEFFICIENTS",
    "NonlinearModel",
    "nonlinearity",
    "evolve_nonlinear",
    "PicardResult",
    "picard_solve",
    "measure_decay",
    "nonlinear_forcing",
    "nonlinear_source",
    "x_space_check",
]
