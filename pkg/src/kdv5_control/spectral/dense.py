"""
Dense matrices over truncated Fourier modes.

The default basis is {exp(ikx) : 0 < |k| <= K} ordered k = -K..-1, 1..K, so an
operator is a (2K)x(2K) complex matrix whose L2 adjoint is its conjugate
transpose. ``full=True`` operators also carry the k = 0 mode.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from kdv5_control.errors import DimensionError
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DenseOperator:
    grid: PeriodicGrid
    entries: np.ndarray
    full: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        dim = self.grid.n_coeffs if self.full else 2 * self.grid.n_modes
        if entries.shape != (dim, dim):
            raise DimensionError(
                f"operator must be {dim}x{dim}, got {entries.shape}",
                {"dim": dim, "shape": list(entries.shape)},
            )
        if not np.all(np.isfinite(entries)):
            raise DimensionError("operator has non-finite entries")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.wavenumbers if self.full else self.grid.mean_zero_wavenumbers

    @classmethod
    def identity(cls, grid: PeriodicGrid, full: bool = False) -> "DenseOperator":
        dim = grid.n_coeffs if full else 2 * grid.n_modes
        return cls(grid, np.eye(dim, dtype=complex), full)

    @classmethod
    def diagonal(
        cls, grid: PeriodicGrid, symbol: Callable[[np.ndarray], np.ndarray], full: bool = False
    ) -> "DenseOperator":
        k = grid.wavenumbers if full else grid.mean_zero_wavenumbers
        return cls(grid, np.diag(np.asarray(symbol(k), dtype=complex)), full)

    def _vector(self, u: SpectralField) -> np.ndarray:
        if u.grid != self.grid:
            raise DimensionError("field and operator live on different grids")
        return u.coeffs if self.full else u.mean_zero_vector

    def apply(self, u: SpectralField) -> SpectralField:
        out = self.entries @ self._vector(u)
        if self.full:
            return SpectralField(self.grid, out)
        return SpectralField.from_mean_zero_vector(self.grid, out)

    def __matmul__(self, other: Union["DenseOperator", np.ndarray]):
        if isinstance(other, DenseOperator):
            if other.grid != self.grid or other.full != self.full:
                raise DimensionError("operators act on different bases")
            return DenseOperator(self.grid, self.entries @ other.entries, self.full)
        return self.entries @ other

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        if other.grid != self.grid or other.full != self.full:
            raise DimensionError("operators act on different bases")
        return DenseOperator(self.grid, self.entries + other.entries, self.full)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "DenseOperator":
        return DenseOperator(self.grid, self.entries * scalar, self.full)

    __rmul__ = __mul__

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.grid, self.entries.conj().T, self.full)

    @property
    def hermitian_defect(self) -> float:
        """||A - A^H|| / ||A|| in the Frobenius norm (0 for the zero operator)."""
        scale = np.linalg.norm(self.entries)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.entries - self.entries.conj().T) / scale)

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.entries + self.entries.conj().T)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.entries)


def assemble_matrix(
    op: Callable[[SpectralField], SpectralField],
    grid: PeriodicGrid,
    full: bool = False,
    threads: int = 1,
) -> DenseOperator:
    """Matrix of a linear map whose columns are the images of basis modes."""
    index = np.arange(grid.n_coeffs) if full else grid.mean_zero_index

    def column(position: int) -> np.ndarray:
        coeffs = np.zeros(grid.n_coeffs, dtype=complex)
        coeffs[position] = 1.0
        image = op(SpectralField(grid, coeffs))
        if image.grid != grid:
            raise DimensionError("operator image lives on a different grid")
        return image.coeffs[index]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(column, index))
    else:
        columns = [column(position) for position in index]
    logger.debug(f"Assembled {len(columns)}x{len(columns)} operator matrix")
    return DenseOperator(grid, np.stack(columns, axis=1), full)
