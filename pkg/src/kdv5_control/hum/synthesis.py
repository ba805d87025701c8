"""
Exact-control synthesis by the Hilbert Uniqueness Method.

Linear steering solves Lambda phi = vT - S(T) v0 and drives the equation with
the adjoint observation k = J B^H u(phi). Nonlinear steering wraps the linear
solve in the fixed-point map

    Gamma(v) = S(t) u0 + int S(t-t') (-N(v))(t') dt' + W(k(v)),
    Lambda phi(v) = uT - S(T) u0 + omega(v)(T),

where W(k) is the state driven from zero by B k and omega(v) the Duhamel
integral of N(v). Every Gamma(v) reaches uT exactly at t = T.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, cg, eigsh

from kdv5_control.errors import DomainError, IllConditionedObservabilityError, SmallDataViolationError
from kdv5_control.evolution.linear import LinearFlow, LinearModel, check_mean_zero, evolve_linear
from kdv5_control.evolution.nonlinear import NonlinearModel, evolve_nonlinear, nonlinear_source
from kdv5_control.hum.gramian import GramianMatrix, GramianOperator, control_from_adjoint
from kdv5_control.hum.signal import ControlSignal
from kdv5_control.spectral.grid import SpectralField
from kdv5_control.spectral.norms import sobolev_norm, sobolev_norms
from kdv5_control.spectral.trajectory import Trajectory, step_count, zst_norm

logger = logging.getLogger(__name__)

CHOLESKY_LIMIT = 128
HUTCHINSON_VECTORS = 8
SOLVE_METHODS = ("auto", "cholesky", "cg")


@dataclass(frozen=True)
class GramianSolve:
    phi: np.ndarray
    method: str
    iterations: Optional[int]
    residual: float


class HumSolver:
    """Gramian solves and adjoint observations for one model, horizon and step.

    The Gramian is assembled on first use of the direct path; the matrix-free
    path never forms it.
    """

    def __init__(
        self,
        model: LinearModel,
        T: float,
        dt: float,
        weighted_s: Optional[float] = None,
        method: str = "auto",
        tol: float = 1e-12,
        max_iterations: Optional[int] = None,
        threads: int = 1,
        seed: int = 0,
        matrix: Optional[GramianMatrix] = None,
    ):
        if method not in SOLVE_METHODS:
            raise DomainError(f"unknown Gramian solve method {method!r}", {"choices": list(SOLVE_METHODS)})
        self.model = model
        self.T = T
        self.dt = dt
        self.n_steps = step_count(T, dt)
        self.weighted_s = weighted_s
        self.forward = LinearFlow.forward(model)
        self.adjoint = LinearFlow.adjoint(model)
        self.operator = GramianOperator(model, T, dt, weighted_s, flow=self.forward)
        if method == "auto":
            method = "cholesky" if self.operator.dim <= CHOLESKY_LIMIT else "cg"
        self.method = method
        self.tol = tol
        self.max_iterations = max_iterations
        self.threads = threads
        self.seed = seed
        self._matrix = matrix

    @property
    def matrix(self) -> GramianMatrix:
        if self._matrix is None:
            self._matrix = self.operator.assemble(self.threads)
        return self._matrix

    def free_endpoint(self, v0: np.ndarray) -> np.ndarray:
        return self.forward.evolve(v0, self.n_steps, self.dt)[-1]

    def solve(self, b: np.ndarray) -> GramianSolve:
        if self.method == "cholesky":
            return self._solve_direct(b)
        return self._solve_cg(b)

    def _solve_direct(self, b: np.ndarray) -> GramianSolve:
        H = self.matrix.hermitian
        try:
            factor = linalg.cho_factor(H)
        except linalg.LinAlgError as exc:
            raise IllConditionedObservabilityError(
                f"Gramian Cholesky factorization failed: {exc}",
                lambda_min=self.matrix.lambda_min,
                details={"T": self.T, "dim": self.operator.dim},
            )
        phi = linalg.cho_solve(factor, b)
        return GramianSolve(phi, "cholesky", None, _relative_residual(H @ phi, b))

    def _solve_cg(self, b: np.ndarray) -> GramianSolve:
        dim = self.operator.dim
        if self._matrix is not None:
            H = self._matrix.hermitian

            def matvec(x):
                return H @ x

            diagonal = np.real(np.diag(H)).copy()
            diagonal[diagonal <= 0.0] = 1.0
        else:
            matvec = self.operator.matvec
            diagonal = self.operator.diagonal_estimate(HUTCHINSON_VECTORS, self.seed)
        A = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
        M = LinearOperator((dim, dim), matvec=lambda x: x / diagonal, dtype=complex)
        count = [0]

        def callback(_):
            count[0] += 1

        maxiter = self.max_iterations or 10 * dim
        phi, info = cg(A, b, rtol=self.tol, atol=0.0, maxiter=maxiter, M=M, callback=callback)
        if info != 0:
            raise IllConditionedObservabilityError(
                f"conjugate gradient did not converge in {maxiter} iterations (info={info})",
                lambda_min=self._lambda_min_estimate(A),
                details={"T": self.T, "dim": dim, "iterations": count[0]},
            )
        logger.debug(f"Gramian CG converged in {count[0]} iterations")
        return GramianSolve(phi, "cg", count[0], _relative_residual(matvec(phi), b))

    def _lambda_min_estimate(self, A: LinearOperator) -> Optional[float]:
        if self._matrix is not None:
            return self._matrix.lambda_min
        try:
            return float(eigsh(A, k=1, which="SA", return_eigenvectors=False)[0])
        except (ArpackNoConvergence, ValueError):
            return None

    def observe(self, phi: np.ndarray) -> ControlSignal:
        return control_from_adjoint(
            SpectralField.from_mean_zero_vector(self.model.grid, phi),
            self.model,
            self.T,
            self.dt,
            self.weighted_s,
            flow=self.adjoint,
        )


def _relative_residual(value: np.ndarray, target: np.ndarray) -> float:
    scale = float(np.linalg.norm(target))
    error = float(np.linalg.norm(value - target))
    return error / scale if scale > 0.0 else error


def _endpoint_errors(reached: SpectralField, target: SpectralField, s: float):
    error = sobolev_norm(reached - target, s)
    return error / max(sobolev_norm(target, s), 1e-14), error


def solve_linear_control(
    model: LinearModel,
    v0: SpectralField,
    vT: SpectralField,
    T: float,
    dt: float,
    s: float = 2.5,
    weighted: bool = False,
    method: str = "auto",
    tol: float = 1e-12,
    max_iterations: Optional[int] = None,
    threads: int = 1,
    seed: int = 0,
    matrix: Optional[GramianMatrix] = None,
) -> ControlSignal:
    """Minimum-energy control steering v0 to vT in time T.

    With ``weighted=True`` the control minimizes the discrete L2(0,T; H^s) norm
    instead of the L2(0,T; L2) norm. The resimulated endpoint error is attached.
    """
    check_mean_zero(v0, "v0")
    check_mean_zero(vT, "vT")
    solver = HumSolver(
        model, T, dt, s if weighted else None, method, tol, max_iterations, threads, seed, matrix
    )
    target = vT.mean_zero_vector - solver.free_endpoint(v0.mean_zero_vector)
    solution = solver.solve(target)
    signal = solver.observe(solution.phi)
    controlled = evolve_linear(model, v0, signal.forcing_vectors(model), T, dt, flow=solver.forward)
    relative, absolute = _endpoint_errors(controlled.final, vT, s)
    logger.info(
        f"Linear control ({solution.method}): endpoint error {relative:.3e} relative, "
        f"energy {signal.energy():.6e}"
    )
    diagnostics = {
        "method": solution.method,
        "iterations": solution.iterations,
        "gramian_residual": solution.residual,
        "energy": signal.energy(),
        "endpoint_error_abs": absolute,
        "weighted_s": solver.weighted_s,
    }
    if weighted:
        diagnostics["l2_hs_norm"] = signal.l2_norm(s)
    return signal.with_results(endpoint_error=relative, diagnostics=diagnostics, trajectory=controlled)


def solve_nonlinear_control(
    model: NonlinearModel,
    u0: SpectralField,
    uT: SpectralField,
    T: float,
    dt: float,
    s: float = 2.5,
    tol: float = 1e-10,
    delta: float = 1e-2,
    relaxation: float = 1.0,
    max_iterations: int = 30,
    weighted: bool = False,
    method: str = "auto",
    threads: int = 1,
    seed: int = 0,
) -> ControlSignal:
    """Small-data exact control of the nonlinear equation by iterating Gamma.

    Iterates v <- (1 - relaxation) v + relaxation Gamma(v) from v = 0 until
    successive iterates differ by less than ``tol`` in discrete Z_{s,T}, then
    resimulates the nonlinear equation under the final control.
    """
    if not 0.0 < relaxation <= 1.0:
        raise DomainError(f"relaxation must lie in (0, 1], got {relaxation}")
    mean = float(u0.coeffs[u0.grid.zero_index].real)
    target_mean = float(uT.coeffs[uT.grid.zero_index].real)
    if not math.isclose(mean, target_mean, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError(
            f"the control conserves the mean: [u0]={mean:.6g} cannot be steered to [uT]={target_mean:.6g}",
            {"mean_u0": mean, "mean_uT": target_mean},
        )
    linear = model.linear
    grid = model.grid
    k = grid.mean_zero_wavenumbers
    start = u0.mean_zero_vector
    end = uT.mean_zero_vector
    size = float(sobolev_norms(start, k, s) + sobolev_norms(end, k, s))
    if size > delta:
        logger.warning(
            f"||u0||_{s} + ||uT||_{s} = {size:.3e} exceeds the small-data bound delta={delta:.3e}"
        )

    solver = HumSolver(linear, T, dt, s if weighted else None, method, threads=threads, seed=seed)
    n_steps = solver.n_steps
    free = solver.forward.evolve(start, n_steps, dt)
    zeros = np.zeros_like(start)

    iterate = np.zeros_like(free)
    distances: List[float] = []
    ratios: List[float] = []
    strikes = 0
    signal: Optional[ControlSignal] = None
    converged = False
    for iteration in range(1, max_iterations + 1):
        duhamel = solver.forward.evolve(zeros, n_steps, dt, nonlinear_source(model, iterate, mean))
        solution = solver.solve(end - free[-1] - duhamel[-1])
        signal = solver.observe(solution.phi)
        steered = solver.forward.evolve(zeros, n_steps, dt, signal.forcing_vectors(linear))
        image = free + duhamel + steered
        updated = (1.0 - relaxation) * iterate + relaxation * image
        if not np.all(np.isfinite(updated)):
            raise SmallDataViolationError(
                f"nonlinear control iterate {iteration} is not finite", {"distances": distances}
            )
        distance = zst_norm(Trajectory.from_mean_zero_vectors(grid, dt, updated - iterate), s, linear.order_l)
        iterate = updated
        distances.append(distance)
        if len(distances) > 1:
            ratio = distance / distances[-2] if distances[-2] > 0 else math.inf
            ratios.append(ratio)
            strikes = strikes + 1 if ratio >= 1.0 else 0
            logger.debug(f"Gamma iterate {iteration}: distance {distance:.3e}, ratio {ratio:.3f}")
        if distance < tol:
            converged = True
            break
        if strikes >= 3:
            raise SmallDataViolationError(
                "the control fixed-point map is not contracting; data exceed the small-data regime",
                {"distances": distances, "ratios": ratios, "data_size": size, "delta": delta},
            )
    if not converged:
        raise SmallDataViolationError(
            f"the control fixed-point map did not reach tol={tol:g} in {max_iterations} iterates",
            {"distances": distances, "ratios": ratios, "data_size": size, "delta": delta},
        )
    logger.info(f"Nonlinear control fixed point reached in {len(distances)} iterates")

    controlled = evolve_nonlinear(model, u0, control=signal, T=T, dt=dt, s=s)
    relative, absolute = _endpoint_errors(controlled.final, uT, s)
    volume_drift = float(np.max(np.abs(controlled.means - mean)))
    logger.info(f"Nonlinear control endpoint error {absolute:.3e} in H^{s}")
    diagnostics = {
        "method": solver.method,
        "iterations": len(distances),
        "distances": distances,
        "ratios": ratios,
        "data_size": size,
        "delta": delta,
        "relaxation": relaxation,
        "energy": signal.energy(),
        "endpoint_error_abs": absolute,
        "volume_drift": volume_drift,
        "weighted_s": solver.weighted_s,
    }
    return signal.with_results(endpoint_error=relative, diagnostics=diagnostics, trajectory=controlled)
