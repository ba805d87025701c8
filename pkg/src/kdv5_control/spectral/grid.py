"""
Truncated Fourier discretization of the torus [0, 2*pi).

Coefficients follow the convention u(x) = sum_k u_hat(k) exp(ikx) with
u_hat(k) = (1/2pi) * integral(u exp(-ikx)), stored as a dense array over
k = -K..K (index k + K).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from kdv5_control.errors import DimensionError, DomainError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
REALNESS_TOL = 1e-12


def next_power_of_two(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def default_points(n_modes: int) -> int:
    """Collocation count 2(2K+1) rounded up to a power of two (always > 4K)."""
    return next_power_of_two(2 * (2 * n_modes + 1))


def spectrum_to_samples(coeffs: np.ndarray, n_points: int) -> np.ndarray:
    """Evaluate a trigonometric polynomial over k = -M..M on an n_points grid."""
    coeffs = np.asarray(coeffs)
    n_modes = (coeffs.shape[-1] - 1) // 2
    if n_points < 2 * n_modes + 1:
        raise DimensionError(
            f"{n_points} points cannot carry {2 * n_modes + 1} modes",
            {"n_points": n_points, "n_modes": n_modes},
        )
    buffer = np.zeros(coeffs.shape[:-1] + (n_points,), dtype=complex)
    buffer[..., np.arange(-n_modes, n_modes + 1) % n_points] = coeffs
    return np.fft.ifft(buffer, axis=-1) * n_points


def samples_to_spectrum(samples: np.ndarray, n_modes: int) -> np.ndarray:
    """Discrete Fourier coefficients k = -M..M of samples on a uniform grid."""
    samples = np.asarray(samples)
    n_points = samples.shape[-1]
    spectrum = np.fft.fft(samples, axis=-1) / n_points
    return spectrum[..., np.arange(-n_modes, n_modes + 1) % n_points]


@dataclass(frozen=True)
class PeriodicGrid:
    """Modes k in {-K..K} and collocation points x_j = 2*pi*j/N."""

    n_modes: int
    n_points: Optional[int] = None
    length: float = field(default=TWO_PI, init=False)

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise DomainError(
                f"n_modes must be a positive integer, got {self.n_modes}",
                {"n_modes": self.n_modes},
            )
        object.__setattr__(self, "n_modes", int(self.n_modes))
        if self.n_points is None:
            object.__setattr__(self, "n_points", default_points(self.n_modes))
        if self.n_points < 2 * self.n_modes + 1:
            raise DimensionError(
                f"n_points={self.n_points} must be at least 2*n_modes+1={2 * self.n_modes + 1}",
                {"n_points": self.n_points, "n_modes": self.n_modes},
            )
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def n_coeffs(self) -> int:
        return 2 * self.n_modes + 1

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    @property
    def points(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_points) / self.n_points

    @property
    def zero_index(self) -> int:
        return self.n_modes

    @property
    def mean_zero_index(self) -> np.ndarray:
        """Positions of k != 0 inside a coefficient array."""
        return np.concatenate(
            [np.arange(self.n_modes), np.arange(self.n_modes + 1, self.n_coeffs)]
        )

    @property
    def mean_zero_wavenumbers(self) -> np.ndarray:
        return self.wavenumbers[self.mean_zero_index]

    @property
    def padded_points(self) -> int:
        """Grid size on which quadratic and cubic products of retained modes are alias-free."""
        if self.n_points > 4 * self.n_modes:
            return self.n_points
        return default_points(self.n_modes)

    def index(self, k: int) -> int:
        if abs(k) > self.n_modes:
            raise DimensionError(f"mode {k} is not retained (K={self.n_modes})")
        return k + self.n_modes

    def extended(self, factor: int = 2) -> "PeriodicGrid":
        """Grid retaining factor*K modes (used for profiles and commutators)."""
        n_modes = factor * self.n_modes
        return PeriodicGrid(n_modes, max(self.n_points, default_points(n_modes)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """One periodic function stored as Fourier coefficients over k = -K..K."""

    grid: PeriodicGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != (self.grid.n_coeffs,):
            raise DimensionError(
                f"expected {self.grid.n_coeffs} coefficients, got shape {coeffs.shape}",
                {"expected": self.grid.n_coeffs, "shape": list(coeffs.shape)},
            )
        if not np.all(np.isfinite(coeffs)):
            raise DomainError("spectral field has non-finite coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.n_coeffs, dtype=complex))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "SpectralField":
        coeffs = np.zeros(grid.n_coeffs, dtype=complex)
        coeffs[grid.zero_index] = value
        return cls(grid, coeffs)

    @classmethod
    def from_modes(cls, grid: PeriodicGrid, modes: dict) -> "SpectralField":
        """Build from {k: u_hat(k)}; missing modes are zero."""
        coeffs = np.zeros(grid.n_coeffs, dtype=complex)
        for k, value in modes.items():
            coeffs[grid.index(int(k))] = value
        return cls(grid, coeffs)

    @classmethod
    def from_function(
        cls, grid: PeriodicGrid, func: Callable[[np.ndarray], np.ndarray]
    ) -> "SpectralField":
        return to_spectral(np.asarray(func(grid.points), dtype=float), grid)

    @classmethod
    def from_mean_zero_vector(
        cls, grid: PeriodicGrid, vector: np.ndarray, mean: complex = 0.0
    ) -> "SpectralField":
        coeffs = np.zeros(grid.n_coeffs, dtype=complex)
        coeffs[grid.mean_zero_index] = vector
        coeffs[grid.zero_index] = mean
        return cls(grid, coeffs)

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.wavenumbers

    @property
    def mean_zero_vector(self) -> np.ndarray:
        return self.coeffs[self.grid.mean_zero_index]

    def coefficient(self, k: int) -> complex:
        return complex(self.coeffs[self.grid.index(k)])

    @property
    def conjugate_symmetry_defect(self) -> float:
        """max |u_hat(-k) - conj(u_hat(k))| relative to the largest coefficient."""
        scale = float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs[::-1] - np.conj(self.coeffs)))) / scale

    @property
    def is_real(self) -> bool:
        return self.conjugate_symmetry_defect <= REALNESS_TOL

    def _check_grid(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise DimensionError(
                "fields live on different grids",
                {"left": repr(self.grid), "right": repr(other.grid)},
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_grid(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def restrict(self, grid: PeriodicGrid) -> "SpectralField":
        """Truncate (or zero-extend) to another mode count."""
        coeffs = np.zeros(grid.n_coeffs, dtype=complex)
        common = min(grid.n_modes, self.grid.n_modes)
        coeffs[grid.n_modes - common : grid.n_modes + common + 1] = self.coeffs[
            self.grid.n_modes - common : self.grid.n_modes + common + 1
        ]
        return SpectralField(grid, coeffs)


def to_spectral(samples: np.ndarray, grid: PeriodicGrid) -> SpectralField:
    """Fourier coefficients of collocation samples."""
    samples = np.asarray(samples)
    if samples.shape != (grid.n_points,):
        raise DimensionError(
            f"expected {grid.n_points} samples, got shape {samples.shape}",
            {"expected": grid.n_points, "shape": list(samples.shape)},
        )
    return SpectralField(grid, samples_to_spectrum(samples, grid.n_modes))


def to_physical(u: SpectralField) -> np.ndarray:
    """Collocation samples of a real-valued field."""
    if u.conjugate_symmetry_defect > REALNESS_TOL:
        raise DomainError(
            "field is not real-valued (conjugate symmetry violated)",
            {"defect": u.conjugate_symmetry_defect},
        )
    return spectrum_to_samples(u.coeffs, u.grid.n_points).real


def padded_samples(u: SpectralField) -> np.ndarray:
    """Real samples on the alias-free product grid."""
    return spectrum_to_samples(u.coeffs, u.grid.padded_points).real


def from_padded_samples(samples: np.ndarray, grid: PeriodicGrid) -> SpectralField:
    """Truncate product-grid samples back to the retained modes."""
    return SpectralField(grid, samples_to_spectrum(samples, grid.n_modes))
