"""Control signals k(t_n) and the physical control they induce."""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np

from kdv5_control.control.operators import actuation_matrix, galerkin_matrix
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.evolution.linear import MEAN_TOL, LinearModel
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField
from kdv5_control.spectral.multipliers import dr_symbol
from kdv5_control.spectral.norms import sobolev_norms
from kdv5_control.spectral.trajectory import Trajectory, l2_time_norm, trapezoid_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Mean-zero control k(t_n) on the time grid of the solve it drives.

    ``endpoint_error`` is the relative H^s error of the resimulated endpoint;
    ``trajectory`` is the controlled state along which it was measured.
    """

    grid: PeriodicGrid
    dt: float
    values: np.ndarray
    endpoint_error: Optional[float] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    trajectory: Optional[Trajectory] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[1] != self.grid.n_coeffs:
            raise DimensionError(
                f"control values must have shape (n, {self.grid.n_coeffs}), got {values.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(values))) if values.size else 0.0)
        if np.max(np.abs(values[:, self.grid.zero_index]), initial=0.0) > MEAN_TOL * scale:
            raise DomainError("control signal must have mean zero at every time")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_mean_zero_vectors(
        cls, grid: PeriodicGrid, dt: float, vectors: np.ndarray, **kwargs
    ) -> "ControlSignal":
        values = np.zeros((vectors.shape[0], grid.n_coeffs), dtype=complex)
        values[:, grid.mean_zero_index] = vectors
        return cls(grid, dt, values, **kwargs)

    @classmethod
    def zeros(cls, grid: PeriodicGrid, dt: float, n_nodes: int) -> "ControlSignal":
        return cls(grid, dt, np.zeros((n_nodes, grid.n_coeffs), dtype=complex))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self))

    @property
    def t_final(self) -> float:
        return self.dt * (len(self) - 1)

    @property
    def mean_zero_vectors(self) -> np.ndarray:
        return self.values[:, self.grid.mean_zero_index]

    def state(self, n: int) -> SpectralField:
        return SpectralField(self.grid, self.values[n])

    def as_trajectory(self) -> Trajectory:
        return Trajectory(self.grid, self.dt, self.values)

    def energy(self) -> float:
        """sum_n w_n ||k(t_n)||^2 with trapezoid weights."""
        weights = trapezoid_weights(len(self), self.dt)
        return float(np.sum(weights * sobolev_norms(self.values, self.grid.wavenumbers, 0.0) ** 2))

    def l2_norm(self, s: float = 0.0) -> float:
        """Discrete L2(0,T; H^s) norm."""
        return l2_time_norm(self.as_trajectory(), s)

    def forcing_vectors(self, model: LinearModel) -> np.ndarray:
        """G D^{3/2} k(t_n) on mean-zero modes, one row per node."""
        if model.grid != self.grid:
            raise DimensionError("control signal and model live on different grids")
        return self.mean_zero_vectors @ actuation_matrix(model.profile).T

    def with_results(self, **changes) -> "ControlSignal":
        return replace(self, **changes)


def physical_control(signal: ControlSignal, trajectory: Trajectory, model: LinearModel) -> Trajectory:
    """h = -D^{2l-1} G u + D^{3/2} k along a controlled trajectory (G h is the applied forcing).

    The feedback part is present only when the model's feedback is on.
    """
    if len(trajectory) != len(signal) or trajectory.grid != signal.grid:
        raise DimensionError("trajectory and control signal differ in grid or length")
    k = signal.grid.mean_zero_wavenumbers
    h = signal.mean_zero_vectors * dr_symbol(k, 1.5)
    if model.feedback_on:
        observed = trajectory.mean_zero_vectors @ galerkin_matrix(model.profile).T
        h = h - observed * dr_symbol(k, model.feedback_order)
    return Trajectory.from_mean_zero_vectors(signal.grid, signal.dt, h)
