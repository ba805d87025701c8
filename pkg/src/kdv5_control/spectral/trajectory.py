"""
Time-indexed sequences of spectral fields and the Z_{s,T} trajectory norm.

Z_{s,T} = C([0,T]; H^s) with the L2(0,T; H^{s+l-1/2}) smoothing part, measured
on the trajectory's own time grid with composite trapezoid weights.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField
from kdv5_control.spectral.norms import sobolev_norms


def trapezoid_weights(n_nodes: int, dt: float) -> np.ndarray:
    """Composite trapezoid weights for n_nodes equispaced samples."""
    weights = np.full(n_nodes, float(dt))
    if n_nodes == 1:
        return np.zeros(1)
    weights[0] = weights[-1] = 0.5 * dt
    return weights


def step_count(T: float, dt: float) -> int:
    """Number of steps n with n*dt = T; dt must divide T."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}", {"dt": dt})
    if T < 0:
        raise DomainError(f"T must be nonnegative, got {T}", {"T": T})
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise DomainError(
            f"dt={dt} does not divide T={T}", {"dt": dt, "T": T}
        )
    return n_steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States u(t_n), t_n = n*dt, stored as an (n_nodes, 2K+1) coefficient array."""

    grid: PeriodicGrid
    dt: float
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim != 2 or coeffs.shape[1] != self.grid.n_coeffs or coeffs.shape[0] < 1:
            raise DimensionError(
                f"trajectory coefficients must have shape (n>=1, {self.grid.n_coeffs}), got {coeffs.shape}"
            )
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_states(
        cls, grid: PeriodicGrid, dt: float, states: Sequence[SpectralField]
    ) -> "Trajectory":
        for state in states:
            if state.grid != grid:
                raise DimensionError("all trajectory states must share one grid")
        return cls(grid, dt, np.stack([state.coeffs for state in states]))

    @classmethod
    def from_mean_zero_vectors(
        cls, grid: PeriodicGrid, dt: float, vectors: np.ndarray, mean: complex = 0.0
    ) -> "Trajectory":
        coeffs = np.zeros((vectors.shape[0], grid.n_coeffs), dtype=complex)
        coeffs[:, grid.mean_zero_index] = vectors
        coeffs[:, grid.zero_index] = mean
        return cls(grid, dt, coeffs)

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_steps(self) -> int:
        return len(self) - 1

    @property
    def t_final(self) -> float:
        return self.dt * self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self))

    @property
    def states(self) -> List[SpectralField]:
        return [SpectralField(self.grid, row) for row in self.coeffs]

    def state(self, n: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[n])

    @property
    def initial(self) -> SpectralField:
        return self.state(0)

    @property
    def final(self) -> SpectralField:
        return self.state(-1)

    @property
    def means(self) -> np.ndarray:
        return self.coeffs[:, self.grid.zero_index].real

    @property
    def mean_zero_vectors(self) -> np.ndarray:
        return self.coeffs[:, self.grid.mean_zero_index]

    def mean_zero(self) -> "Trajectory":
        coeffs = np.array(self.coeffs)
        coeffs[:, self.grid.zero_index] = 0.0
        return Trajectory(self.grid, self.dt, coeffs)

    def norms(self, s: float) -> np.ndarray:
        return sobolev_norms(self.coeffs, self.grid.wavenumbers, s)

    def window(self, start: int, stop: int) -> "Trajectory":
        """Nodes start..stop inclusive."""
        return Trajectory(self.grid, self.dt, self.coeffs[start : stop + 1])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if other.grid != self.grid or other.coeffs.shape != self.coeffs.shape:
            raise DimensionError("trajectories differ in grid or length")
        if not math.isclose(other.dt, self.dt, rel_tol=1e-12):
            raise DimensionError("trajectories differ in dt")
        return Trajectory(self.grid, self.dt, self.coeffs - other.coeffs)


def zst_norm(traj: Trajectory, s: float, order_l: int = 2) -> float:
    """max_n ||v_n||_s + (sum_n w_n ||v_n||^2_{s+l-1/2})^(1/2)."""
    if len(traj) < 2:
        raise DomainError("Z_{s,T} norm needs at least two time nodes")
    sup_part = float(np.max(traj.norms(s)))
    smooth = traj.norms(s + order_l - 0.5)
    weights = trapezoid_weights(len(traj), traj.dt)
    return sup_part + float(np.sqrt(np.sum(weights * smooth ** 2)))


def l2_time_norm(traj: Trajectory, s: float) -> float:
    """Discrete L2(0,T; H^s) norm with trapezoid weights."""
    weights = trapezoid_weights(len(traj), traj.dt)
    return float(np.sqrt(np.sum(weights * traj.norms(s) ** 2)))


def unit_interval_norms(
    traj: Trajectory, s: float, order_l: int = 2, interval: float = 1.0
) -> np.ndarray:
    """Z-norms of the trajectory restricted to [n, n+1] for every whole interval."""
    per_interval = int(round(interval / traj.dt))
    if per_interval < 1 or abs(per_interval * traj.dt - interval) > 1e-9:
        raise DomainError(
            f"dt={traj.dt} does not divide the interval length {interval}"
        )
    count = traj.n_steps // per_interval
    return np.array(
        [
            zst_norm(traj.window(n * per_interval, (n + 1) * per_interval), s, order_l)
            for n in range(count)
        ]
    )
