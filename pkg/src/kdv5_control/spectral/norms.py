"""Sobolev norms, the L2 pairing and mean-value helpers."""

import numpy as np

from kdv5_control.spectral.grid import TWO_PI, SpectralField


def sobolev_weights(k: np.ndarray, s: float) -> np.ndarray:
    """(1 + k^2)^s, the squared H^s weight of mode k."""
    return (1.0 + np.asarray(k, dtype=float) ** 2) ** s


def sobolev_norm(u: SpectralField, s: float) -> float:
    """(2*pi * sum_k (1+k^2)^s |u_hat(k)|^2)^(1/2)."""
    weights = sobolev_weights(u.wavenumbers, s)
    return float(np.sqrt(TWO_PI * np.sum(weights * np.abs(u.coeffs) ** 2)))


def sobolev_norms(coeffs: np.ndarray, k: np.ndarray, s: float) -> np.ndarray:
    """Row-wise H^s norms of a stack of coefficient vectors."""
    weights = sobolev_weights(k, s)
    return np.sqrt(TWO_PI * np.sum(weights * np.abs(coeffs) ** 2, axis=-1))


def inner_product(u: SpectralField, v: SpectralField) -> complex:
    """L2 pairing (u, v) = integral(u conj(v)) = 2*pi * sum u_hat conj(v_hat)."""
    return complex(TWO_PI * np.vdot(v.coeffs, u.coeffs))


def mean(u: SpectralField) -> float:
    return float(u.coeffs[u.grid.zero_index].real)


def project_mean_zero(u: SpectralField) -> SpectralField:
    coeffs = np.array(u.coeffs)
    coeffs[u.grid.zero_index] = 0.0
    return SpectralField(u.grid, coeffs)
