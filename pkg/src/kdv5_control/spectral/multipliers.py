"""
Fourier multiplier calculus: D^r, derivatives, the Hilbert transform and the
smoothing mollifier, all defined through their symbols.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.spectral.grid import SpectralField

logger = logging.getLogger(__name__)


class MultiplierKind(str, Enum):
    DR = "dr"
    DERIVATIVE = "derivative"
    HILBERT = "hilbert"
    MOLLIFIER = "mollifier"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """Symbol m(k) of a Fourier multiplier u_hat(k) -> m(k) u_hat(k)."""

    kind: MultiplierKind
    order: float = 0.0
    epsilon: Optional[float] = None
    table: Optional[Tuple[complex, ...]] = None

    @classmethod
    def dr(cls, r: float) -> "MultiplierSymbol":
        """|k|^r on k != 0, identity on the mean."""
        return cls(MultiplierKind.DR, order=float(r))

    @classmethod
    def derivative(cls, j: int) -> "MultiplierSymbol":
        if int(j) != j or j < 0:
            raise DomainError(f"derivative order must be a nonnegative integer, got {j}")
        return cls(MultiplierKind.DERIVATIVE, order=int(j))

    @classmethod
    def hilbert(cls) -> "MultiplierSymbol":
        return cls(MultiplierKind.HILBERT)

    @classmethod
    def mollifier(cls, epsilon: float) -> "MultiplierSymbol":
        if not epsilon > 0:
            raise DomainError(f"mollifier parameter must be positive, got {epsilon}")
        return cls(MultiplierKind.MOLLIFIER, epsilon=float(epsilon))

    @classmethod
    def custom(cls, table) -> "MultiplierSymbol":
        return cls(MultiplierKind.CUSTOM, table=tuple(complex(v) for v in table))

    def values(self, k: np.ndarray) -> np.ndarray:
        """Evaluate the symbol on an array of wavenumbers."""
        k = np.asarray(k)
        if self.kind is MultiplierKind.DR:
            out = np.ones(k.shape, dtype=float)
            nonzero = k != 0
            out[nonzero] = np.abs(k[nonzero]).astype(float) ** self.order
            return out
        if self.kind is MultiplierKind.DERIVATIVE:
            return (1j * k) ** int(self.order)
        if self.kind is MultiplierKind.HILBERT:
            return -1j * np.sign(k)
        if self.kind is MultiplierKind.MOLLIFIER:
            return np.exp(-(self.epsilon ** 0.1) * k.astype(float) ** 2)
        if len(self.table) != k.size:
            raise DimensionError(
                f"custom symbol has {len(self.table)} entries for {k.size} modes",
                {"table": len(self.table), "modes": int(k.size)},
            )
        return np.asarray(self.table, dtype=complex).reshape(k.shape)


def dr_symbol(k: np.ndarray, r: float) -> np.ndarray:
    return MultiplierSymbol.dr(r).values(k)


def apply_multiplier(u: SpectralField, m: MultiplierSymbol) -> SpectralField:
    return SpectralField(u.grid, u.coeffs * m.values(u.wavenumbers))


def dr(u: SpectralField, r: float) -> SpectralField:
    return apply_multiplier(u, MultiplierSymbol.dr(r))


def dx(u: SpectralField, j: int = 1) -> SpectralField:
    return apply_multiplier(u, MultiplierSymbol.derivative(j))


def hilbert(u: SpectralField) -> SpectralField:
    return apply_multiplier(u, MultiplierSymbol.hilbert())


def mollify(u: SpectralField, epsilon: float) -> SpectralField:
    """Bona-Smith regularization exp(-eps^(1/10) k^2)."""
    return apply_multiplier(u, MultiplierSymbol.mollifier(epsilon))
