"""
Algebraic identities of the control operator and commutator diagnostics.

These are used by the verification suite and the tests; none of them feed the
solvers.
"""

import logging
from typing import Optional

import numpy as np

from kdv5_control.control.operators import (
    apply_g_op,
    g_hat_at,
    g_op_block,
    galerkin_matrix,
    multiplication_matrix,
)
from kdv5_control.control.profile import ControlProfile
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.spectral.grid import TWO_PI, SpectralField
from kdv5_control.spectral.multipliers import dr, dr_symbol
from kdv5_control.spectral.norms import inner_product, sobolev_norm

logger = logging.getLogger(__name__)


def _band(u: SpectralField) -> int:
    """Largest |k| carrying a coefficient above roundoff."""
    magnitude = np.abs(u.coeffs)
    active = magnitude > 1e-14 * max(float(magnitude.max()), 1.0)
    if not np.any(active):
        return 0
    return int(np.max(np.abs(u.wavenumbers[active])))


def ctrl1_defect(profile: ControlProfile, psi: SpectralField, h: SpectralField) -> float:
    """Relative mismatch of G(psi h) = psi G h + g (psi integral(g h) - integral(psi g h)).

    The left side goes through apply_g_op on the product psi h. The right side
    is assembled from g_hat by convolution, with G h kept on every mode psi can
    shift back into the retained band. The two routes share no code, and both
    are exact while band(psi) + band(h) <= K.
    """
    grid = profile.grid
    if psi.grid != grid or h.grid != grid:
        raise DimensionError("psi, h and the profile must share one grid")
    n_modes = grid.n_modes
    band_psi, band_h = _band(psi), _band(h)
    if band_psi + band_h > n_modes:
        raise DomainError(
            "psi h does not fit on the retained modes",
            {"psi_band": band_psi, "h_band": band_h, "n_modes": n_modes},
        )
    zero = grid.zero_index
    psi_c = psi.coeffs[zero - band_psi : zero + band_psi + 1]
    h_c = h.coeffs[zero - band_h : zero + band_h + 1]
    a = np.arange(-band_psi, band_psi + 1)
    m = np.arange(-band_h, band_h + 1)
    k = grid.wavenumbers

    width = band_psi + band_h
    product = np.zeros(grid.n_coeffs, dtype=complex)
    product[zero - width : zero + width + 1] = np.convolve(psi_c, h_c)
    lhs = apply_g_op(SpectralField(grid, product), profile).coeffs

    shifted = np.arange(-(n_modes + band_psi), n_modes + band_psi + 1)
    g_h = g_op_block(profile, shifted, m) @ h_c
    psi_g_h = np.convolve(psi_c, g_h)[2 * band_psi : 2 * band_psi + grid.n_coeffs]
    g_psi = g_hat_at(profile, k[:, None] - a[None, :]) @ psi_c
    integral_gh = TWO_PI * (g_hat_at(profile, -m) @ h_c)
    integral_psigh = TWO_PI * (psi_c @ g_hat_at(profile, -a[:, None] - m[None, :]) @ h_c)
    rhs = psi_g_h + g_psi * integral_gh - g_hat_at(profile, k) * integral_psigh

    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def ctrl2_matrices(profile: ControlProfile, s: float, r: float):
    """Both sides of [D^s; G] D^r f = [D^s; g] D^r f - D^s g * integral(f D^r g) + g * integral(f D^{r+s} g).

    Returned as (lhs, rhs) matrices over all retained modes, with g read as
    its projection onto the retained modes.
    """
    grid = profile.grid
    k = grid.wavenumbers
    G = galerkin_matrix(profile, full=True)
    M = multiplication_matrix(profile, full=True)
    d_s = dr_symbol(k, s)
    d_r = dr_symbol(k, r)
    g_k = g_hat_at(profile, k)
    g_minus = g_hat_at(profile, -k)

    lhs = (d_s[:, None] * G - G * d_s[None, :]) * d_r[None, :]
    rhs = (d_s[:, None] * M - M * d_s[None, :]) * d_r[None, :]
    rhs = rhs - np.outer(d_s * g_k, TWO_PI * d_r * g_minus)
    rhs = rhs + np.outer(g_k, TWO_PI * dr_symbol(k, r + s) * g_minus)
    return lhs, rhs


def ctrl2_defect(profile: ControlProfile, s: float, r: float) -> float:
    lhs, rhs = ctrl2_matrices(profile, s, r)
    scale = max(float(np.max(np.abs(lhs))), 1e-300)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def self_adjointness_defect(profile: ControlProfile, u: SpectralField, v: SpectralField) -> float:
    """|(Gu, v) - (u, Gv)| relative to ||u|| ||v||."""
    lhs = inner_product(apply_g_op(u, profile), v)
    rhs = inner_product(u, apply_g_op(v, profile))
    scale = max(sobolev_norm(u, 0.0) * sobolev_norm(v, 0.0), 1e-300)
    return abs(lhs - rhs) / scale


def feedback_form_defect(profile: ControlProfile, u: SpectralField, gamma: float = 3.0) -> float:
    """|(u, G D^g G u) - ||D^{g/2} G u||^2| relative to ||D^{g/2} G u||^2."""
    Gu = apply_g_op(u, profile)
    form = inner_product(u, apply_g_op(dr(Gu, gamma), profile))
    energy = sobolev_norm(dr(Gu, gamma / 2.0), 0.0) ** 2
    return abs(form - energy) / max(energy, 1e-300)


def commutator_matrix(r: float, s: float, psi: SpectralField) -> np.ndarray:
    """D^r [D^s; psi] from K retained modes into the 2K-mode space."""
    K = psi.grid.n_modes
    k_in = psi.grid.wavenumbers
    k_out = np.arange(-2 * K, 2 * K + 1)
    offset = k_out[:, None] - k_in[None, :]
    inside = np.abs(offset) <= K
    psi_hat = np.where(inside, psi.coeffs[np.clip(offset, -K, K) + K], 0.0)
    jump = dr_symbol(k_out, s)[:, None] - dr_symbol(k_in, s)[None, :]
    return dr_symbol(k_out, r)[:, None] * jump * psi_hat


def commutator_constant(
    r: float,
    s: float,
    psi: SpectralField,
    trials: int = 8,
    seed: Optional[int] = 0,
    iterations: int = 50,
) -> float:
    """Largest observed ||D^r [D^s; psi] f|| / ||f||_{r+s-1} over random f.

    Each random start is refined by power iteration on the normalized
    commutator, so the estimate approaches the operator norm from below.
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    weights = (1.0 + psi.grid.wavenumbers.astype(float) ** 2) ** ((r + s - 1.0) / 2.0)
    matrix = commutator_matrix(r, s, psi) / weights[None, :]
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        x = rng.standard_normal(matrix.shape[1]) + 1j * rng.standard_normal(matrix.shape[1])
        x /= np.linalg.norm(x)
        ratio = float(np.linalg.norm(matrix @ x))
        for _ in range(iterations):
            y = matrix.conj().T @ (matrix @ x)
            size = np.linalg.norm(y)
            if size == 0.0:
                ratio = 0.0
                break
            x = y / size
            ratio = float(np.linalg.norm(matrix @ x))
        best = max(best, ratio)
    logger.debug(f"Commutator constant r={r} s={s}: {best:.6g}")
    return best
