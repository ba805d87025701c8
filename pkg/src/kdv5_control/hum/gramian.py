"""
Observation map and observability Gramian of the controlled linear equation

    d/dt v + L v = B k,   B = G D^{3/2}.

With the endpoint-trapezoid Duhamel scheme the state reached from v(0) = 0 is
v_N = sum_n w_n S^{N-n} B k_n, and the adjoint solved backward from phi is
u_n = (S^H)^{N-n} phi. Choosing k_n = J B^H u_n gives v_N = Lambda phi with

    Lambda = sum_m w_m S^m B J B^H (S^H)^m,

so Lambda is exactly the discrete control-to-state Gramian. J is the identity
for L2 controls and (1 - dx^2)^{-s} for the H^s-weighted variant.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from kdv5_control.control.operators import actuation_matrix
from kdv5_control.control.profile import make_profile
from kdv5_control.errors import DimensionError, DomainError
from kdv5_control.evolution.linear import LinearFlow, LinearModel, adjoint_evolve
from kdv5_control.hum.signal import ControlSignal
from kdv5_control.spectral.dense import DenseOperator
from kdv5_control.spectral.grid import TWO_PI, SpectralField
from kdv5_control.spectral.norms import sobolev_weights
from kdv5_control.spectral.trajectory import step_count, trapezoid_weights

logger = logging.getLogger(__name__)

MAX_BLOCK_COLUMNS = 16


def control_weights(model: LinearModel, weighted_s: Optional[float]) -> Optional[np.ndarray]:
    """Diagonal of J on mean-zero modes, or None for J = I."""
    if weighted_s is None:
        return None
    return sobolev_weights(model.grid.mean_zero_wavenumbers, -weighted_s)


def control_from_adjoint(
    phi: SpectralField,
    model: LinearModel,
    T: float,
    dt: float,
    weighted_s: Optional[float] = None,
    flow: Optional[LinearFlow] = None,
) -> ControlSignal:
    """k(t_n) = J D^{3/2} G u(t_n) along the adjoint solution with u(T) = phi."""
    adjoint = adjoint_evolve(model, phi, T, dt, flow=flow)
    B = actuation_matrix(model.profile)
    values = adjoint.mean_zero_vectors @ B.conj()
    weights = control_weights(model, weighted_s)
    if weights is not None:
        values = values * weights
    return ControlSignal.from_mean_zero_vectors(model.grid, dt, values)


class GramianOperator:
    """Matrix-free action of Lambda on vectors or column blocks."""

    def __init__(
        self,
        model: LinearModel,
        T: float,
        dt: float,
        weighted_s: Optional[float] = None,
        flow: Optional[LinearFlow] = None,
    ):
        if not T > 0:
            raise DomainError(f"the control horizon must be positive, got T={T}", {"T": T})
        self.model = model
        self.T = T
        self.dt = dt
        self.weighted_s = weighted_s
        self.n_steps = step_count(T, dt)
        self.flow = flow or LinearFlow.forward(model)
        self.S = self.flow.step(dt)
        self.S_adjoint = self.S.conj().T
        self.B = actuation_matrix(model.profile)
        self.B_adjoint = self.B.conj().T
        self.J = control_weights(model, weighted_s)
        self.weights = trapezoid_weights(self.n_steps + 1, dt)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def apply(self, block: np.ndarray) -> np.ndarray:
        """Lambda @ block for a (dim, c) block: adjoint sweep, then a Horner forward sweep."""
        if block.shape[0] != self.dim:
            raise DimensionError(f"expected {self.dim} rows, got {block.shape[0]}")
        observed = np.empty((self.n_steps + 1,) + block.shape, dtype=complex)
        current = np.asarray(block, dtype=complex)
        for m in range(self.n_steps + 1):
            z = self.B_adjoint @ current
            if self.J is not None:
                z = self.J[:, None] * z
            observed[m] = z
            current = self.S_adjoint @ current
        result = np.zeros_like(observed[0])
        for m in range(self.n_steps, -1, -1):
            result = self.S @ result + self.weights[m] * (self.B @ observed[m])
        return result

    def matvec(self, vector: np.ndarray) -> np.ndarray:
        return self.apply(np.asarray(vector).reshape(-1, 1))[:, 0]

    def diagonal_estimate(self, n_vectors: int = 8, seed: int = 0) -> np.ndarray:
        """Hutchinson estimate of diag(Lambda) from random +-1 vectors."""
        rng = np.random.default_rng(seed)
        Z = rng.choice([-1.0, 1.0], size=(self.dim, n_vectors))
        estimate = np.mean(Z * self.apply(Z).real, axis=1)
        floor = 1e-3 * float(np.max(np.abs(estimate)))
        if floor == 0.0:
            return np.ones(self.dim)
        return np.maximum(estimate, floor)

    def assemble(self, threads: int = 1) -> "GramianMatrix":
        identity = np.eye(self.dim, dtype=complex)
        blocks = [
            identity[:, start : start + MAX_BLOCK_COLUMNS]
            for start in range(0, self.dim, MAX_BLOCK_COLUMNS)
        ]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                columns = list(pool.map(self.apply, blocks))
        else:
            columns = [self.apply(block) for block in blocks]
        gramian = GramianMatrix(
            operator=DenseOperator(self.model.grid, np.hstack(columns)),
            T=self.T,
            dt=self.dt,
            model=self.model,
            weighted_s=self.weighted_s,
        )
        logger.info(
            f"Gramian assembled: dim={self.dim}, T={self.T:g}, "
            f"lambda_min={gramian.lambda_min:.6e}, cond={gramian.condition_number:.3e}"
        )
        return gramian


@dataclass(frozen=True, eq=False)
class GramianMatrix:
    operator: DenseOperator
    T: float
    dt: float
    model: LinearModel
    weighted_s: Optional[float] = None

    @property
    def entries(self) -> np.ndarray:
        return self.operator.entries

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def symmetry_defect(self) -> float:
        """||Lambda - Lambda^H|| / ||Lambda|| in the Frobenius norm."""
        scale = float(np.linalg.norm(self.entries))
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.entries - self.entries.conj().T)) / scale

    @cached_property
    def hermitian(self) -> np.ndarray:
        return 0.5 * (self.entries + self.entries.conj().T)

    @cached_property
    def spectrum(self):
        """Ascending eigenvalues and eigenvectors of the Hermitian part."""
        return linalg.eigh(self.hermitian)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum[0]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def condition_number(self) -> float:
        if self.lambda_min <= 0.0:
            return math.inf
        return self.lambda_max / self.lambda_min

    @property
    def observability_constant(self) -> float:
        """C = 1/lambda_min in ||phi||^2 <= C sum_n w_n ||k_n||^2."""
        if self.lambda_min <= 0.0:
            return math.inf
        return 1.0 / self.lambda_min

    @property
    def worst_mode(self) -> int:
        """Wavenumber carrying the largest share of the least observed eigenvector."""
        vector = self.spectrum[1][:, 0]
        return int(self.model.grid.mean_zero_wavenumbers[int(np.argmax(np.abs(vector)))])

    def quadratic_form(self, phi: SpectralField) -> float:
        """(Lambda phi, phi) in the L2 pairing."""
        vector = phi.mean_zero_vector
        return float(TWO_PI * np.vdot(vector, self.entries @ vector).real)


def gramian(
    model: LinearModel,
    T: float,
    dt: float,
    threads: int = 1,
    weighted_s: Optional[float] = None,
) -> GramianMatrix:
    """Dense Gramian, column blocks assembled in parallel when threads > 1."""
    return GramianOperator(model, T, dt, weighted_s).assemble(threads)


@dataclass(frozen=True)
class ObservabilityReport:
    T: float
    dt: float
    n_modes: int
    lambda_min: float
    lambda_max: float
    condition_number: float
    observability_constant: float
    worst_mode: int
    symmetry_defect: float
    eigenvalues: List[float]
    radius: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def observability_report(
    model: LinearModel,
    T: float,
    dt: float,
    threads: int = 1,
    matrix: Optional[GramianMatrix] = None,
) -> ObservabilityReport:
    matrix = matrix or gramian(model, T, dt, threads)
    if matrix.lambda_min <= 0.0:
        logger.warning(f"Gramian is not positive definite (lambda_min={matrix.lambda_min:.3e})")
    return ObservabilityReport(
        T=T,
        dt=dt,
        n_modes=model.grid.n_modes,
        lambda_min=matrix.lambda_min,
        lambda_max=matrix.lambda_max,
        condition_number=matrix.condition_number,
        observability_constant=matrix.observability_constant,
        worst_mode=matrix.worst_mode,
        symmetry_defect=matrix.symmetry_defect,
        eigenvalues=[float(value) for value in matrix.eigenvalues],
        radius=model.profile.radius if model.profile.kind == "bump" else None,
    )


def observability_sweep(
    model: LinearModel,
    horizons: Sequence[float],
    radii: Sequence[float],
    dt: float,
    threads: int = 1,
) -> List[ObservabilityReport]:
    """Reports over control radii (bump centered where the model's profile is) and horizons."""
    center = model.profile.center if model.profile.center is not None else math.pi
    reports = []
    for radius in radii:
        profile = make_profile(model.grid, center, radius)
        swept = replace(model, profile=profile)
        for T in horizons:
            report = observability_report(swept, T, dt, threads)
            logger.info(
                f"Observability radius={radius:.4g} T={T:g}: C={report.observability_constant:.4e}"
            )
            reports.append(report)
    return reports
