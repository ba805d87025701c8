"""
Linear closed-loop evolution

    d/dt v + L v = F,   L = eps D^{2l+1} + (-1)^{l+1} dx^{2l+1} + b0 dx^3 + b1 dx + G D^{2l-1} G,

on mean-zero truncated modes, with dense propagators S(t) = exp(-tL).

Forcing enters through the endpoint trapezoid Duhamel step

    v_{n+1} = S(dt) v_n + dt/2 (S(dt) F_n + F_{n+1}),

so every duality and Gramian identity built on it holds with composite
trapezoid weights in time.
"""

import logging
from dataclasses import dataclass
from threading import Lock
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from kdv5_control.control.operators import feedback_matrix, remainder_E
from kdv5_control.control.profile import ControlProfile
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.spectral.dense import DenseOperator
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField
from kdv5_control.spectral.norms import sobolev_norm
from kdv5_control.spectral.trajectory import (
    Trajectory,
    l2_time_norm,
    step_count,
    zst_norm,
)

logger = logging.getLogger(__name__)

MEAN_TOL = 1e-12

ForcingInput = Union[None, Trajectory, np.ndarray, Sequence[SpectralField]]


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Parameters of the linear closed-loop equation of order 2l+1."""

    profile: ControlProfile
    epsilon: float = 0.0
    beta0: float = 0.0
    beta1: float = 0.0
    order_l: int = 2
    feedback_on: bool = True

    def __post_init__(self):
        if int(self.order_l) != self.order_l or self.order_l < 2:
            raise DomainError(f"order_l must be an integer >= 2, got {self.order_l}")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.profile.grid

    @property
    def feedback_order(self) -> float:
        """gamma in the feedback G D^gamma G."""
        return 2.0 * self.order_l - 1.0

    def dispersion_symbol(self, k: np.ndarray) -> np.ndarray:
        """Diagonal part of L: eps|k|^{2l+1} + (-1)^{l+1}(ik)^{2l+1} + b0 (ik)^3 + b1 ik."""
        l = self.order_l
        ik = 1j * k.astype(float)
        return (
            self.epsilon * np.abs(k).astype(float) ** (2 * l + 1)
            + (-1) ** (l + 1) * ik ** (2 * l + 1)
            + self.beta0 * ik ** 3
            + self.beta1 * ik
        )


def assemble_generator(model: LinearModel, grid: Optional[PeriodicGrid] = None) -> DenseOperator:
    """Generator L with d/dt v = -L v, restricted to mean-zero modes."""
    grid = grid or model.grid
    if grid != model.grid:
        raise DimensionError(
            "generator grid differs from the control profile grid",
            {"grid": repr(grid), "profile": repr(model.grid)},
        )
    entries = np.diag(model.dispersion_symbol(grid.mean_zero_wavenumbers))
    if model.feedback_on:
        entries = entries + feedback_matrix(model.profile, model.feedback_order)
    logger.debug(f"Assembled generator of dimension {entries.shape[0]} (l={model.order_l})")
    return DenseOperator(grid, entries)


def spectral_abscissa(generator: DenseOperator) -> float:
    """Smallest real part among the eigenvalues of L (the decay rate of exp(-tL))."""
    return float(np.min(linalg.eigvals(generator.entries).real))


def propagator(generator: DenseOperator, t: float) -> DenseOperator:
    """S(t) = exp(-t L) by scaling and squaring."""
    if t < 0:
        raise DomainError(f"propagator time must be nonnegative, got {t}", {"t": t})
    if t == 0:
        return DenseOperator.identity(generator.grid, generator.full)
    return DenseOperator(generator.grid, linalg.expm(-t * generator.entries), generator.full)


class LinearFlow:
    """A generator with a cache of its propagators.

    Safe to share between worker threads; the cache is guarded by a lock.
    """

    def __init__(self, generator: DenseOperator):
        self.generator = generator
        self.grid = generator.grid
        self._propagators: Dict[float, np.ndarray] = {}
        self._lock = Lock()

    @classmethod
    def forward(cls, model: LinearModel) -> "LinearFlow":
        return cls(assemble_generator(model))

    @classmethod
    def adjoint(cls, model: LinearModel) -> "LinearFlow":
        """Flow of L^H, run in reversed time by the adjoint solver."""
        return cls(assemble_generator(model).adjoint())

    def step(self, dt: float) -> np.ndarray:
        with self._lock:
            cached = self._propagators.get(dt)
        if cached is None:
            cached = propagator(self.generator, dt).entries
            with self._lock:
                self._propagators[dt] = cached
        return cached

    def evolve(
        self, v0: np.ndarray, n_steps: int, dt: float, forcing: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Step mean-zero vectors (or column blocks); returns shape (n_steps+1,) + v0.shape."""
        S = self.step(dt)
        states = np.empty((n_steps + 1,) + v0.shape, dtype=complex)
        states[0] = v0
        for n in range(n_steps):
            nxt = S @ states[n]
            if forcing is not None:
                nxt = nxt + 0.5 * dt * (S @ forcing[n] + forcing[n + 1])
            states[n + 1] = nxt
        return states


def check_mean_zero(u: SpectralField, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(u.coeffs))))
    value = abs(u.coeffs[u.grid.zero_index])
    if value > MEAN_TOL * scale:
        raise DomainError(
            f"{name} must have mean zero (mean={value:.3e}); project it first",
            {"mean": float(value)},
        )


def forcing_vectors(forcing: ForcingInput, grid: PeriodicGrid, n_nodes: int) -> Optional[np.ndarray]:
    """Mean-zero forcing vectors of shape (n_nodes, 2K); the mean mode is dropped."""
    if forcing is None:
        return None
    if isinstance(forcing, Trajectory):
        if forcing.grid != grid:
            raise DimensionError("forcing lives on a different grid")
        array = forcing.mean_zero_vectors
    elif isinstance(forcing, np.ndarray):
        array = forcing
        if array.ndim == 2 and array.shape[1] == grid.n_coeffs:
            array = array[:, grid.mean_zero_index]
    else:
        for item in forcing:
            if item.grid != grid:
                raise DimensionError("forcing lives on a different grid")
        array = np.stack([item.mean_zero_vector for item in forcing])
    if array.shape != (n_nodes, 2 * grid.n_modes):
        raise DimensionError(
            f"forcing must provide {n_nodes} mean-zero states, got shape {array.shape}",
            {"expected": [n_nodes, 2 * grid.n_modes], "shape": list(array.shape)},
        )
    return np.asarray(array, dtype=complex)


def evolve_linear(
    model: LinearModel,
    v0: SpectralField,
    forcing: ForcingInput = None,
    T: float = 1.0,
    dt: float = 1e-3,
    flow: Optional[LinearFlow] = None,
) -> Trajectory:
    """Forward solve of d/dt v + L v = F from mean-zero v0."""
    if v0.grid != model.grid:
        raise DimensionError("initial data and model live on different grids")
    check_mean_zero(v0, "v0")
    n_steps = step_count(T, dt)
    flow = flow or LinearFlow.forward(model)
    F = forcing_vectors(forcing, model.grid, n_steps + 1)
    states = flow.evolve(v0.mean_zero_vector, n_steps, dt, F)
    return Trajectory.from_mean_zero_vectors(model.grid, dt, states)


def adjoint_evolve(
    model: LinearModel,
    uT: SpectralField,
    T: float = 1.0,
    dt: float = 1e-3,
    flow: Optional[LinearFlow] = None,
) -> Trajectory:
    """Backward solve of -d/dt u + L^H u = 0, u(T) = uT, stored forward in time."""
    if uT.grid != model.grid:
        raise DimensionError("terminal data and model live on different grids")
    check_mean_zero(uT, "uT")
    n_steps = step_count(T, dt)
    flow = flow or LinearFlow.adjoint(model)
    states = flow.evolve(uT.mean_zero_vector, n_steps, dt)
    return Trajectory.from_mean_zero_vectors(model.grid, dt, states[::-1])


def weighted_adjoint_evolve(
    model: LinearModel, wT: SpectralField, s: float, T: float = 1.0, dt: float = 1e-3
) -> Trajectory:
    """Adjoint flow for w = D^{-s} u: -d/dt w + L^H w = E w with E = D^{-s}[D^s; G D^g G]."""
    generator = assemble_generator(model).adjoint()
    if model.feedback_on:
        correction = remainder_E(-s, model.profile, gamma=model.feedback_order)
        generator = generator + correction
    return adjoint_evolve(model, wT, T, dt, flow=LinearFlow(generator))


def decay_rate(model: LinearModel, v0: SpectralField, T: float, dt: float, s: float):
    """Fitted exponential rate of ||S(t) v0||_s and the spectral-abscissa prediction."""
    from kdv5_control.evolution.decay import fit_decay

    if not model.feedback_on:
        logger.info("Decay fit requested with feedback off; only eps-dissipation acts")
    flow = LinearFlow.forward(model)
    trajectory = evolve_linear(model, v0, None, T, dt, flow=flow)
    return fit_decay(trajectory, s, predicted_rate=spectral_abscissa(flow.generator))


def uniform_estimate_constant(
    model: LinearModel,
    v0: SpectralField,
    forcing: ForcingInput,
    T: float,
    dt: float,
    s: float,
) -> float:
    """Z_{s,T}(v) / (||v0||_s + ||F||_{L2 H^{s-l+1/2}}) for one forced solve."""
    trajectory = evolve_linear(model, v0, forcing, T, dt)
    data = sobolev_norm(v0, s)
    if forcing is not None:
        F = forcing_vectors(forcing, model.grid, len(trajectory))
        data += l2_time_norm(
            Trajectory.from_mean_zero_vectors(model.grid, dt, F), s - model.order_l + 0.5
        )
    if data == 0.0:
        return 0.0
    return zst_norm(trajectory, s, model.order_l) / data

