"""
The localized volume-preserving control operator

    (G h)(x) = g(x) * (h(x) - integral(g h)),

its feedback compositions G D^gamma G, the actuation G D^{3/2} and the
remainder operator of the s-weighted adjoint flow.

On K retained modes G is the Galerkin operator P_K G P_K. Products with g are
formed on the alias-free product grid using the 2K-band-limited g, which makes
the result exact on the retained modes.
"""

import logging
from typing import Optional

import numpy as np

from kdv5_control.control.profile import ControlProfile
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.spectral.dense import DenseOperator
from kdv5_control.spectral.grid import (
    TWO_PI,
    PeriodicGrid,
    SpectralField,
    samples_to_spectrum,
    spectrum_to_samples,
)
from kdv5_control.spectral.multipliers import dr, dr_symbol

logger = logging.getLogger(__name__)


def _check_grid(u: SpectralField, profile: ControlProfile) -> None:
    if u.grid != profile.grid:
        raise DimensionError(
            "field and control profile live on different grids",
            {"field": repr(u.grid), "profile": repr(profile.grid)},
        )


def apply_g_op(h: SpectralField, profile: ControlProfile) -> SpectralField:
    """G h = g (h - integral(g h)); the output has mean zero."""
    _check_grid(h, profile)
    grid = h.grid
    g = profile.padded_samples
    h_samples = spectrum_to_samples(h.coeffs, grid.padded_points)
    weighted_mean = TWO_PI * np.mean(g * h_samples)
    out = samples_to_spectrum(g * (h_samples - weighted_mean), grid.n_modes)
    return SpectralField(grid, out)


def feedback(u: SpectralField, gamma: float, profile: ControlProfile) -> SpectralField:
    """G D^gamma G u (gamma = 3 is the stabilizing feedback)."""
    return apply_g_op(dr(apply_g_op(u, profile), gamma), profile)


def g_hat_at(profile: ControlProfile, k: np.ndarray) -> np.ndarray:
    """g_hat(k) for |k| <= 2K."""
    return profile.g_hat[np.asarray(k) + 2 * profile.grid.n_modes]


def g_op_block(profile: ControlProfile, k_out: np.ndarray, k_in: np.ndarray) -> np.ndarray:
    """Block of the unprojected G: rows k_out of G applied to the modes k_in.

    Entries need g_hat up to |k_out - k_in| and |k_out|, so both must stay
    within 2K.
    """
    k_out = np.asarray(k_out)
    k_in = np.asarray(k_in)
    limit = 2 * profile.grid.n_modes
    shifts = k_out[:, None] - k_in[None, :]
    widest = max(int(np.max(np.abs(shifts))), int(np.max(np.abs(k_out))), int(np.max(np.abs(k_in))))
    if widest > limit:
        raise DomainError(
            "G block needs g_hat beyond the stored band",
            {"needed": widest, "stored": limit},
        )
    correction = TWO_PI * np.outer(g_hat_at(profile, k_out), g_hat_at(profile, -k_in))
    return g_hat_at(profile, shifts) - correction


def galerkin_matrix(profile: ControlProfile, full: bool = False) -> np.ndarray:
    """Matrix of G: G[k, m] = g_hat(k-m) - 2*pi g_hat(k) g_hat(-m)."""
    grid = profile.grid
    k = grid.wavenumbers if full else grid.mean_zero_wavenumbers
    return g_op_block(profile, k, k)


def multiplication_matrix(profile: ControlProfile, full: bool = True) -> np.ndarray:
    """Matrix of P_K g P_K (plain multiplication by g)."""
    grid = profile.grid
    k = grid.wavenumbers if full else grid.mean_zero_wavenumbers
    return g_hat_at(profile, k[:, None] - k[None, :])


def dr_matrix(grid: PeriodicGrid, r: float, full: bool = False) -> np.ndarray:
    k = grid.wavenumbers if full else grid.mean_zero_wavenumbers
    return np.diag(dr_symbol(k, r)).astype(complex)


def feedback_matrix(profile: ControlProfile, gamma: float = 3.0) -> np.ndarray:
    """G D^gamma G on the mean-zero basis."""
    G = galerkin_matrix(profile)
    symbol = dr_symbol(profile.grid.mean_zero_wavenumbers, gamma)
    return G @ (symbol[:, None] * G)


def actuation_matrix(profile: ControlProfile, gamma: float = 1.5) -> np.ndarray:
    """B = G D^gamma, the map from the control k to the forcing."""
    G = galerkin_matrix(profile)
    symbol = dr_symbol(profile.grid.mean_zero_wavenumbers, gamma)
    return G * symbol[None, :]


def remainder_E(
    s: float,
    profile: ControlProfile,
    grid: Optional[PeriodicGrid] = None,
    gamma: float = 3.0,
) -> DenseOperator:
    """E = G D^g [D^s; G] D^{-s} + [D^s; G] D^g G D^{-s}.

    Equivalently D^s (G D^g G) D^{-s} - G D^g G, so that w = D^s v turns
    v' + G D^g G v into w' + G D^g G w + E w.
    """
    grid = grid or profile.grid
    if grid != profile.grid:
        raise DimensionError("remainder operator grid differs from the profile grid")
    k = grid.mean_zero_wavenumbers
    G = galerkin_matrix(profile)
    d_s = dr_symbol(k, s)
    d_inv = dr_symbol(k, -s)
    d_gamma = dr_symbol(k, gamma)
    commutator = d_s[:, None] * G - G * d_s[None, :]
    first = G @ (d_gamma[:, None] * commutator)
    second = commutator @ (d_gamma[:, None] * G)
    return DenseOperator(grid, (first + second) * d_inv[None, :])


def operator_norm(matrix: np.ndarray, k: np.ndarray, s_in: float = 0.0, s_out: float = 0.0) -> float:
    """Norm of a matrix as a map H^{s_in} -> H^{s_out}."""
    w_in = (1.0 + k.astype(float) ** 2) ** (s_in / 2.0)
    w_out = (1.0 + k.astype(float) ** 2) ** (s_out / 2.0)
    return float(np.linalg.norm(w_out[:, None] * matrix / w_in[None, :], 2))
