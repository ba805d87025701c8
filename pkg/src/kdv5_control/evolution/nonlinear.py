"""
Controlled nonlinear evolution

    d/dt u + L u + N(u) = G D^{3/2} k(t),

with N(u) = c0 u u' + c1 u^2 u' + c2 u' u'' + c3 u u''' or, for the order-l
hierarchy, N(u) = u dx^{2l-1} u.

The mean [u0] is conserved: the mean-free part u~ = u - [u0] is evolved on
mean-zero modes and N is evaluated at u~ + [u0]. Time stepping is an
exponential trapezoid predictor-corrector: an exponential Euler predictor
followed by corrector sweeps of

    u_{n+1} = S(dt) u_n + dt/2 (S(dt) f(u_n, t_n) + f(u_{n+1}, t_{n+1})),

one sweep being the explicit exponential Heun (RK2) step. Swept to
convergence the scheme reproduces the fixed point of the discrete Duhamel map
iterated by ``picard_solve`` and by the nonlinear controller.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Tuple

import numpy as np

from kdv5_control.errors import ConvergenceError, DimensionError, DivergenceError
from kdv5_control.evolution.decay import DecayFit, fit_decay
from kdv5_control.evolution.linear import ForcingInput, LinearFlow, LinearModel, forcing_vectors
from kdv5_control.spectral.grid import (
    PeriodicGrid,
    SpectralField,
    samples_to_spectrum,
    spectrum_to_samples,
)
from kdv5_control.spectral.norms import sobolev_norms
from kdv5_control.spectral.trajectory import (
    Trajectory,
    step_count,
    unit_interval_norms,
    zst_norm,
)

if TYPE_CHECKING:
    from kdv5_control.hum.signal import ControlSignal

logger = logging.getLogger(__name__)

KDV5_COEFFICIENTS: Tuple[float, float, float, float] = (0.0, -30.0, 20.0, 10.0)
GROWTH_LIMIT = 1e3
CORRECTOR_TOL = 1e-14
MAX_CORRECTIONS = 20


@dataclass(frozen=True, eq=False)
class NonlinearModel:
    """Linear closed-loop part plus one nonlinearity family."""

    linear: LinearModel
    coefficients: Tuple[float, float, float, float] = KDV5_COEFFICIENTS
    hierarchy_term: bool = False
    small_data_radius: float = 1e-2

    def __post_init__(self):
        if len(self.coefficients) != 4:
            raise DimensionError(
                f"expected four coefficients c0..c3, got {len(self.coefficients)}"
            )
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.hierarchy_term and any(self.coefficients):
            logger.info("Hierarchy nonlinearity selected; coefficients c0..c3 are ignored")

    @property
    def grid(self) -> PeriodicGrid:
        return self.linear.grid

    @property
    def is_linear(self) -> bool:
        return not self.hierarchy_term and not any(self.coefficients)


def _nonlinear_coeffs(model: NonlinearModel, coeffs: np.ndarray) -> np.ndarray:
    """N applied to (stacks of) full coefficient vectors, dealiased and truncated."""
    grid = model.grid
    n_points = grid.padded_points
    ik = 1j * grid.wavenumbers

    def samples(c: np.ndarray) -> np.ndarray:
        return spectrum_to_samples(c, n_points).real

    u = samples(coeffs)
    if model.hierarchy_term:
        out = u * samples(coeffs * ik ** (2 * model.linear.order_l - 1))
    else:
        c0, c1, c2, c3 = model.coefficients
        out = np.zeros_like(u)
        u1 = samples(coeffs * ik) if (c0 or c1 or c2) else None
        if c0:
            out += c0 * u * u1
        if c1:
            out += c1 * u * u * u1
        if c2:
            out += c2 * u1 * samples(coeffs * ik ** 2)
        if c3:
            out += c3 * u * samples(coeffs * ik ** 3)
    return samples_to_spectrum(out, grid.n_modes)


def nonlinearity(u: SpectralField, model: NonlinearModel) -> SpectralField:
    """N(u) formed on the alias-free product grid and truncated to K modes."""
    if u.grid != model.grid:
        raise DimensionError("field and model live on different grids")
    return SpectralField(u.grid, _nonlinear_coeffs(model, u.coeffs))


def nonlinear_source(model: NonlinearModel, vectors: np.ndarray, mean: float = 0.0) -> np.ndarray:
    """-N(v + mean) on mean-zero modes for (stacks of) mean-zero vectors v."""
    if model.is_linear:
        return np.zeros_like(vectors, dtype=complex)
    grid = model.grid
    coeffs = np.zeros(vectors.shape[:-1] + (grid.n_coeffs,), dtype=complex)
    coeffs[..., grid.mean_zero_index] = vectors
    coeffs[..., grid.zero_index] = mean
    return -_nonlinear_coeffs(model, coeffs)[..., grid.mean_zero_index]


class _Rhs:
    """f(u~, t_n) = -N(u~ + m) + F_n on mean-zero vectors."""

    def __init__(self, model: NonlinearModel, mean: float, forcing: Optional[np.ndarray]):
        self.model = model
        self.mean = mean
        self.forcing = forcing

    def nonlinear(self, vectors: np.ndarray) -> np.ndarray:
        return nonlinear_source(self.model, vectors, self.mean)

    def __call__(self, vector: np.ndarray, n: int) -> np.ndarray:
        out = self.nonlinear(vector)
        if self.forcing is not None:
            out = out + self.forcing[n]
        return out

    def at_nodes(self, vectors: np.ndarray) -> np.ndarray:
        out = self.nonlinear(vectors)
        if self.forcing is not None:
            out = out + self.forcing
        return out


def _control_forcing(
    model: NonlinearModel,
    control: Optional["ControlSignal"],
    forcing: ForcingInput,
    n_nodes: int,
) -> Optional[np.ndarray]:
    F = forcing_vectors(forcing, model.grid, n_nodes)
    if control is not None:
        actuation = control.forcing_vectors(model.linear)
        if actuation.shape[0] != n_nodes:
            raise DimensionError(
                f"control signal has {actuation.shape[0]} nodes, run needs {n_nodes}"
            )
        F = actuation if F is None else F + actuation
    return F


def _mean_free(u0: SpectralField) -> Tuple[np.ndarray, float]:
    return u0.mean_zero_vector, float(u0.coeffs[u0.grid.zero_index].real)


def _warn_small_data(model: NonlinearModel, vector: np.ndarray, s: float) -> float:
    size = float(sobolev_norms(vector, model.grid.mean_zero_wavenumbers, s))
    if size > model.small_data_radius:
        logger.warning(
            f"||u0 - [u0]||_{s} = {size:.3e} exceeds the small-data radius "
            f"{model.small_data_radius:.3e}; results are outside the contraction regime"
        )
    return size


def evolve_nonlinear(
    model: NonlinearModel,
    u0: SpectralField,
    control: Optional["ControlSignal"] = None,
    T: float = 1.0,
    dt: float = 1e-3,
    s: float = 2.5,
    forcing: ForcingInput = None,
    max_corrections: int = MAX_CORRECTIONS,
    flow: Optional[LinearFlow] = None,
) -> Trajectory:
    """Integrate the controlled equation; feedback is part of the linear model.

    The linear part is propagated exactly by S(dt) = exp(-dt L). Each step
    predicts with exponential Euler, u* = S (u_n + dt f_n), then sweeps the
    exponential trapezoid corrector

        u_{n+1} = S u_n + dt/2 (S f_n + f(u_{n+1}))

    until successive sweeps agree to CORRECTOR_TOL or ``max_corrections``
    sweeps are spent. Stopping after one sweep gives the explicit exponential
    Heun (RK2) step; the converged sweep is the implicit trapezoid rule on the
    Duhamel integral, second order in dt and the same discrete map that
    ``picard_solve`` iterates over the whole horizon. Models without a
    nonlinearity take a single sweep, which is exact for the forcing
    quadrature.

    Args:
        model: Linear closed-loop part and nonlinearity
        u0: Initial data; its mean is carried unchanged
        control: Control signal k, entering as G D^{3/2} k
        T: Horizon, a multiple of dt
        dt: Time step
        s: Sobolev index of the small-data warning and the growth guard
        forcing: Extra mean-zero forcing on the time nodes
        max_corrections: Cap on corrector sweeps per step
        flow: Precomputed linear flow of ``model.linear``

    Raises:
        DivergenceError: The state became non-finite, or its H^s norm grew
            past GROWTH_LIMIT times its initial value
    """
    if u0.grid != model.grid:
        raise DimensionError("initial data and model live on different grids")
    n_steps = step_count(T, dt)
    vector, mean = _mean_free(u0)
    initial_size = _warn_small_data(model, vector, s)
    flow = flow or LinearFlow.forward(model.linear)
    rhs = _Rhs(model, mean, _control_forcing(model, control, forcing, n_steps + 1))
    k = model.grid.mean_zero_wavenumbers
    S = flow.step(dt)
    corrections = 1 if model.is_linear else max_corrections

    states = np.empty((n_steps + 1, vector.size), dtype=complex)
    states[0] = vector
    for n in range(n_steps):
        current = states[n]
        f_now = rhs(current, n)
        base = S @ current
        candidate = base + dt * (S @ f_now)
        for _ in range(corrections):
            updated = base + 0.5 * dt * (S @ f_now + rhs(candidate, n + 1))
            change = np.linalg.norm(updated - candidate)
            candidate = updated
            if change <= CORRECTOR_TOL * (np.linalg.norm(updated) + 1e-300):
                break
        states[n + 1] = candidate
        if not np.all(np.isfinite(candidate)):
            raise DivergenceError(
                f"non-finite state at t={(n + 1) * dt:.6g}", {"t": (n + 1) * dt}
            )
        if initial_size > 0.0:
            size = float(sobolev_norms(candidate, k, s))
            if size > GROWTH_LIMIT * initial_size:
                raise DivergenceError(
                    f"||u(t)-[u0]||_{s} = {size:.3e} exceeded {GROWTH_LIMIT:g} x its initial value "
                    f"at t={(n + 1) * dt:.6g}",
                    {"t": (n + 1) * dt, "norm": size, "initial_norm": initial_size},
                )
    return Trajectory.from_mean_zero_vectors(model.grid, dt, states, mean)


@dataclass(frozen=True)
class PicardResult:
    trajectory: Trajectory
    iterations: int
    distances: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "distances": self.distances,
            "ratios": self.ratios,
        }


def _zst_vectors(grid: PeriodicGrid, dt: float, vectors: np.ndarray, s: float, order_l: int) -> float:
    return zst_norm(Trajectory.from_mean_zero_vectors(grid, dt, vectors), s, order_l)


def picard_solve(
    model: NonlinearModel,
    u0: SpectralField,
    T: float,
    dt: float,
    s: float = 2.5,
    tol: float = 1e-10,
    max_iterations: int = 50,
    control: Optional["ControlSignal"] = None,
    flow: Optional[LinearFlow] = None,
) -> PicardResult:
    """Fixed-point iteration u -> S(t)u0 + int S(t-t')f(u(t'))dt' from u^0 = S(t)u0.

    Stops when successive iterates differ by less than ``tol`` in discrete
    Z_{s,T}; three consecutive contraction ratios >= 1 raise ConvergenceError.
    """
    if u0.grid != model.grid:
        raise DimensionError("initial data and model live on different grids")
    n_steps = step_count(T, dt)
    vector, mean = _mean_free(u0)
    _warn_small_data(model, vector, s)
    flow = flow or LinearFlow.forward(model.linear)
    rhs = _Rhs(model, mean, _control_forcing(model, control, None, n_steps + 1))
    order_l = model.linear.order_l

    iterate = flow.evolve(vector, n_steps, dt, rhs.forcing)
    distances: List[float] = []
    ratios: List[float] = []
    strikes = 0
    for iteration in range(1, max_iterations + 1):
        updated = flow.evolve(vector, n_steps, dt, rhs.at_nodes(iterate))
        distance = _zst_vectors(model.grid, dt, updated - iterate, s, order_l)
        iterate = updated
        distances.append(distance)
        if len(distances) > 1:
            ratio = distance / distances[-2] if distances[-2] > 0 else math.inf
            ratios.append(ratio)
            strikes = strikes + 1 if ratio >= 1.0 else 0
            logger.debug(f"Picard iterate {iteration}: distance {distance:.3e}, ratio {ratio:.3f}")
        if distance < tol:
            logger.info(f"Picard iteration converged in {iteration} iterates")
            return PicardResult(
                trajectory=Trajectory.from_mean_zero_vectors(model.grid, dt, iterate, mean),
                iterations=iteration,
                distances=distances,
                ratios=ratios,
            )
        if strikes >= 3:
            raise ConvergenceError(
                "Picard iteration is not contracting (ratio >= 1 for 3 consecutive iterates)",
                {"distances": distances, "ratios": ratios},
            )
    raise ConvergenceError(
        f"Picard iteration did not reach tol={tol:g} in {max_iterations} iterates",
        {"distances": distances, "ratios": ratios},
    )


def nonlinear_forcing(model: NonlinearModel, traj: Trajectory) -> np.ndarray:
    """-N(u(t_n)) on mean-zero modes, for energy bookkeeping of nonlinear runs."""
    return nonlinear_source(model, traj.mean_zero_vectors, float(traj.means[0]))


def measure_decay(traj: Trajectory, s: float, predicted_rate: Optional[float] = None) -> DecayFit:
    """Decay fit of ||u(t) - [u0]||_s for a nonlinear trajectory."""
    return fit_decay(traj, s, predicted_rate)


def x_space_check(traj: Trajectory, s: float, rate: float, order_l: int = 2) -> np.ndarray:
    """exp(n*rate/2) times the Z-norm of u - [u0] on each unit interval [n, n+1]."""
    norms = unit_interval_norms(traj.mean_zero(), s, order_l)
    return np.exp(0.5 * rate * np.arange(norms.size)) * norms

