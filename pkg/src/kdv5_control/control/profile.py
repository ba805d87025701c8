"""
Control profiles g: smooth, nonnegative, unit-integral weights supported in a
subinterval of the torus.

The bump profile is c*exp(-1/(1-y^2)), y = (x - center)/radius. Its Fourier
coefficients are obtained for |k| <= 2K from an oversampled DFT of the exact
function; the grid is doubled until the aliasing estimate is negligible.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from kdv5_control.errors import DomainError, ResolutionError
from kdv5_control.spectral.grid import (
    TWO_PI,
    PeriodicGrid,
    SpectralField,
    next_power_of_two,
    samples_to_spectrum,
    spectrum_to_samples,
)

logger = logging.getLogger(__name__)

ALIASING_TOL = 1e-13
MAX_OVERSAMPLED_POINTS = 1 << 20


@lru_cache(maxsize=1)
def bump_integral() -> float:
    """integral_{-1}^{1} exp(-1/(1-y^2)) dy by adaptive quadrature."""
    value, _ = integrate.quad(
        lambda y: math.exp(-1.0 / (1.0 - y * y)), -1.0, 1.0, epsabs=1e-15, epsrel=1e-13
    )
    return value


def bump_values(x: np.ndarray, center: float, radius: float, normalization: float) -> np.ndarray:
    """Exact periodic bump samples (zero outside the support)."""
    distance = np.mod(np.asarray(x, dtype=float) - center + math.pi, TWO_PI) - math.pi
    y = distance / radius
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    out[inside] = normalization * np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out


@dataclass(frozen=True, eq=False)
class ControlProfile:
    """The weight g of the control operator and its spectral data.

    ``g_hat`` holds the coefficients for k = -2K..2K, which is all the Galerkin
    control operator on K retained modes ever needs.
    """

    grid: PeriodicGrid
    kind: str
    center: Optional[float]
    radius: Optional[float]
    normalization: float
    g_hat: np.ndarray
    samples: np.ndarray
    oversampled_points: int = 0
    retained_tail: float = 0.0

    @property
    def g_field(self) -> SpectralField:
        """g on the extended grid (2K modes)."""
        return SpectralField(self.grid.extended(2), self.g_hat)

    @property
    def g_retained(self) -> SpectralField:
        """P_K g on the model grid."""
        K = self.grid.n_modes
        return SpectralField(self.grid, self.g_hat[K : 3 * K + 1])

    @cached_property
    def padded_samples(self) -> np.ndarray:
        """2K-band-limited g on the alias-free product grid."""
        return spectrum_to_samples(self.g_hat, self.grid.padded_points).real

    @property
    def integral(self) -> float:
        return float(TWO_PI * self.g_hat[2 * self.grid.n_modes].real)

    @property
    def support(self) -> Tuple[float, float]:
        if self.kind == "uniform":
            return (0.0, TWO_PI)
        return (self.center - self.radius, self.center + self.radius)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(np.shape(x), 1.0 / TWO_PI)
        return bump_values(x, self.center, self.radius, self.normalization)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "center": self.center,
            "radius": self.radius,
            "normalization": self.normalization,
            "integral": self.integral,
            "oversampled_points": self.oversampled_points,
            "retained_tail": self.retained_tail,
        }


def _bump_coefficients(
    center: float, radius: float, normalization: float, n_modes: int
) -> Tuple[np.ndarray, int]:
    n_points = next_power_of_two(max(8 * (2 * n_modes + 1), 512))
    coarse = samples_to_spectrum(
        bump_values(TWO_PI * np.arange(n_points) / n_points, center, radius, normalization),
        n_modes,
    )
    while n_points < MAX_OVERSAMPLED_POINTS:
        n_points *= 2
        fine = samples_to_spectrum(
            bump_values(TWO_PI * np.arange(n_points) / n_points, center, radius, normalization),
            n_modes,
        )
        if np.max(np.abs(fine - coarse)) < ALIASING_TOL:
            return fine, n_points
        coarse = fine
    raise ResolutionError(
        f"bump of radius {radius} not resolved with {MAX_OVERSAMPLED_POINTS} samples",
        {"radius": radius, "max_points": MAX_OVERSAMPLED_POINTS},
    )


def make_profile(grid: PeriodicGrid, center: float, radius: float) -> ControlProfile:
    """Unit-integral bump centered at ``center`` with half-width ``radius``."""
    if not 0.0 < radius < math.pi:
        raise DomainError(
            f"radius must lie in (0, pi), got {radius}", {"radius": radius}
        )
    center = float(center) % TWO_PI
    normalization = 1.0 / (radius * bump_integral())
    g_hat, oversampled = _bump_coefficients(center, radius, normalization, 2 * grid.n_modes)
    K = grid.n_modes
    outer = np.concatenate([g_hat[:K], g_hat[3 * K + 1 :]])
    retained_tail = float(TWO_PI * np.max(np.abs(outer)))
    profile = ControlProfile(
        grid=grid,
        kind="bump",
        center=center,
        radius=float(radius),
        normalization=normalization,
        g_hat=g_hat,
        samples=bump_values(grid.points, center, radius, normalization),
        oversampled_points=oversampled,
        retained_tail=retained_tail,
    )
    logger.info(
        f"Built bump profile center={center:.6g} radius={radius:.6g} "
        f"(K={K}, oversampled to {oversampled} points, tail beyond K {retained_tail:.3e})"
    )
    return profile


def make_uniform_profile(grid: PeriodicGrid) -> ControlProfile:
    """g = 1/(2*pi) on the whole torus."""
    g_hat = np.zeros(4 * grid.n_modes + 1, dtype=complex)
    g_hat[2 * grid.n_modes] = 1.0 / TWO_PI
    return ControlProfile(
        grid=grid,
        kind="uniform",
        center=None,
        radius=None,
        normalization=1.0 / TWO_PI,
        g_hat=g_hat,
        samples=np.full(grid.n_points, 1.0 / TWO_PI),
    )
