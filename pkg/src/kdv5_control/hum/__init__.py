from kdv5_control.hum.signal import ControlSignal, physical_control
from kdv5_control.hum.gramian import (
    GramianMatrix,
    GramianOperator,
    ObservabilityReport,
    control_from_adjoint,
    gramian,
    observability_report,
    observability_sweep,
)
from kdv5_control.hum.synthesis import (
    HumSolver,
    solve_linear_control,
    solve_nonlinear_control,
)

__all__ = [
    "ControlSignal",
    "physical_control",
    "GramianMatrix",
    "GramianOperator",
    "ObservabilityReport",
    "control_from_adjoint",
    "gramian",
    "observability_report",
    "observability_sweep",
    "HumSolver",
    "solve_linear_control",
    "solve_nonlinear_control",
]
