"""
Energy bookkeeping for linear trajectories.

All time integrals use the composite trapezoid rule on the trajectory's own
nodes, so a residual measures the time-discretization error of the identity.
"""

import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from kdv5_control.control.operators import galerkin_matrix, remainder_E
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.evolution.linear import ForcingInput, LinearModel, forcing_vectors
from kdv5_control.spectral.grid import (
    TWO_PI,
    SpectralField,
    samples_to_spectrum,
    spectrum_to_samples,
)
from kdv5_control.spectral.multipliers import dr_symbol
from kdv5_control.spectral.trajectory import Trajectory, trapezoid_weights

logger = logging.getLogger(__name__)

ENERGY_KEYS = ("kinetic", "dissipation_eps", "dissipation_G", "forcing_work")


@dataclass(frozen=True)
class LedgerReport:
    terms: Dict[str, float]
    residual: float
    scale: float

    @property
    def relative_residual(self) -> float:
        if self.scale == 0.0:
            return abs(self.residual)
        return abs(self.residual) / self.scale

    def to_dict(self) -> Dict[str, float]:
        out = dict(self.terms)
        out["residual"] = self.residual
        return out


def _energy(vectors: np.ndarray, k: np.ndarray, r: float = 0.0) -> np.ndarray:
    """||D^r v||^2 for each row of mean-zero vectors."""
    weights = dr_symbol(k, r) ** 2
    return TWO_PI * np.sum(weights * np.abs(vectors) ** 2, axis=-1)


def _pairing(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Re (a, b) row-wise for coefficient vectors."""
    return TWO_PI * np.sum(a * np.conj(b), axis=-1).real


def _check(model: LinearModel, traj: Trajectory) -> None:
    if traj.grid != model.grid:
        raise DimensionError("trajectory and model live on different grids")


def energy_ledger(
    model: LinearModel, traj: Trajectory, forcing: ForcingInput = None
) -> LedgerReport:
    """1/2||v(T)||^2 - 1/2||v0||^2 + eps int||D^{l+1/2}v||^2 + int||D^{l-1/2}Gv||^2 - int(v, F)."""
    _check(model, traj)
    k = model.grid.mean_zero_wavenumbers
    V = traj.mean_zero_vectors
    weights = trapezoid_weights(len(traj), traj.dt)
    l = model.order_l

    kinetic = 0.5 * (_energy(V[-1], k) - _energy(V[0], k))
    dissipation_eps = model.epsilon * float(np.sum(weights * _energy(V, k, l + 0.5)))
    dissipation_G = 0.0
    if model.feedback_on:
        GV = V @ galerkin_matrix(model.profile).T
        dissipation_G = float(np.sum(weights * _energy(GV, k, l - 0.5)))
    forcing_work = 0.0
    F = forcing_vectors(forcing, model.grid, len(traj))
    if F is not None:
        forcing_work = float(np.sum(weights * _pairing(V, F)))

    terms = {
        "kinetic": float(kinetic),
        "dissipation_eps": dissipation_eps,
        "dissipation_G": dissipation_G,
        "forcing_work": forcing_work,
    }
    residual = terms["kinetic"] + dissipation_eps + dissipation_G - forcing_work
    scale = 0.5 * float(_energy(V[0], k))
    if scale == 0.0:
        scale = max(abs(value) for value in terms.values())
    return LedgerReport(terms, residual, scale)


def weighted_ledger(
    model: LinearModel,
    traj: Trajectory,
    psi: SpectralField,
    s: float,
    forcing: ForcingInput = None,
) -> LedgerReport:
    """Weighted identity for w = D^s v with a smooth weight psi (fifth order only).

    LHS: 1/2 d/dt int psi w^2 + 5/2 int psi'(w'')^2 + int D^{3/2}Gw D^{3/2}G P(psi w)
         + int psi w E w + eps(int psi (D^{5/2}w)^2 + int D^{5/2}w [D^{5/2}; psi] w)
         + b0 (3/2 int psi'(w')^2 - 1/2 int psi''' w^2) - b1/2 int psi' w^2
    RHS: 5/2 int psi'''(w')^2 - 1/2 int psi^(5) w^2 + int psi w D^s F
    """
    _check(model, traj)
    if model.order_l != 2:
        raise DomainError("the weighted identity is implemented for order_l = 2 only")
    if psi.grid != model.grid:
        raise DimensionError("weight psi and model live on different grids")
    grid = model.grid
    K = grid.n_modes
    n_points = grid.padded_points
    k_full = grid.wavenumbers
    k = grid.mean_zero_wavenumbers
    ik = 1j * k_full
    weights = trapezoid_weights(len(traj), traj.dt)

    coeffs = np.array(traj.coeffs)
    coeffs[:, grid.zero_index] = 0.0
    W = coeffs * dr_symbol(k_full, s)

    def samples(rows: np.ndarray) -> np.ndarray:
        return spectrum_to_samples(rows, n_points).real

    def integral(values: np.ndarray) -> np.ndarray:
        return TWO_PI * np.mean(values, axis=-1)

    def in_time(values: np.ndarray) -> float:
        return float(np.sum(weights * values))

    psi0, psi1, psi3, psi5 = (samples(psi.coeffs * ik ** j) for j in (0, 1, 3, 5))
    w0 = samples(W)
    w1 = samples(W * ik)
    w2 = samples(W * ik ** 2)
    d52 = samples(W * dr_symbol(k_full, 2.5))
    psi_w = psi0 * w0

    mass = 0.5 * integral(psi0 * w0 ** 2)
    terms: Dict[str, float] = {"time_derivative": float(mass[-1] - mass[0])}
    terms["dispersion_dissipation"] = in_time(2.5 * integral(psi1 * w2 ** 2))
    terms["beta0"] = model.beta0 * in_time(
        1.5 * integral(psi1 * w1 ** 2) - 0.5 * integral(psi3 * w0 ** 2)
    )
    terms["beta1"] = -0.5 * model.beta1 * in_time(integral(psi1 * w0 ** 2))

    terms["eps_weighted"] = model.epsilon * in_time(integral(psi0 * d52 ** 2))
    extended = np.arange(-2 * K, 2 * K + 1)
    commutator = samples_to_spectrum(psi_w, 2 * K) * dr_symbol(extended, 2.5)
    commutator = commutator - samples_to_spectrum(psi0 * d52, 2 * K)
    d52_ext = np.zeros_like(commutator)
    d52_ext[:, K : 3 * K + 1] = W * dr_symbol(k_full, 2.5)
    terms["eps_commutator"] = model.epsilon * in_time(_pairing(d52_ext, commutator))

    projected = samples_to_spectrum(psi_w, K)[:, grid.mean_zero_index]
    W_vec = W[:, grid.mean_zero_index]
    terms["feedback"] = 0.0
    terms["remainder"] = 0.0
    if model.feedback_on:
        G = galerkin_matrix(model.profile)
        d32 = dr_symbol(k, 1.5)
        observed = (W_vec @ G.T) * d32
        observed_psi = (projected @ G.T) * d32
        terms["feedback"] = in_time(_pairing(observed, observed_psi))
        E = remainder_E(s, model.profile, gamma=model.feedback_order).entries
        terms["remainder"] = in_time(_pairing(projected, W_vec @ E.T))

    terms["dispersion_flux"] = in_time(2.5 * integral(psi3 * w1 ** 2))
    terms["dispersion_source"] = in_time(-0.5 * integral(psi5 * w0 ** 2))
    terms["forcing"] = 0.0
    F = forcing_vectors(forcing, grid, len(traj))
    if F is not None:
        terms["forcing"] = in_time(_pairing(projected, F * dr_symbol(k, s)))

    rhs_keys = ("dispersion_flux", "dispersion_source", "forcing")
    lhs = sum(value for key, value in terms.items() if key not in rhs_keys)
    rhs = sum(terms[key] for key in rhs_keys)
    scale = max(float(mass[0]), max(abs(value) for value in terms.values()))
    return LedgerReport(terms, float(lhs - rhs), scale)


def adjoint_weighted_ledger(model: LinearModel, adjoint: Trajectory) -> LedgerReport:
    """T/2 ||u(T)||^2 = 1/2 int ||u||^2 + int t (eps||D^{l+1/2}u||^2 + ||D^{l-1/2}Gu||^2)."""
    _check(model, adjoint)
    k = model.grid.mean_zero_wavenumbers
    V = adjoint.mean_zero_vectors
    weights = trapezoid_weights(len(adjoint), adjoint.dt)
    t = adjoint.times
    l = model.order_l

    terminal = 0.5 * adjoint.t_final * float(_energy(V[-1], k))
    mass = 0.5 * float(np.sum(weights * _energy(V, k)))
    dissipation_eps = model.epsilon * float(np.sum(weights * t * _energy(V, k, l + 0.5)))
    dissipation_G = 0.0
    if model.feedback_on:
        GV = V @ galerkin_matrix(model.profile).T
        dissipation_G = float(np.sum(weights * t * _energy(GV, k, l - 0.5)))
    terms = {
        "terminal": terminal,
        "mass": mass,
        "dissipation_eps": dissipation_eps,
        "dissipation_G": dissipation_G,
    }
    residual = terminal - mass - dissipation_eps - dissipation_G
    return LedgerReport(terms, residual, max(terminal, mass))
