"""
Tests for observability Gramians and minimum-energy control synthesis.
"""

import math

import numpy as np
import pytest

from kdv5_control.control.profile import make_profile
from kdv5_control.errors import DomainError
from kdv5_control.evolution.linear import LinearModel
from kdv5_control.evolution.nonlinear import NonlinearModel
from kdv5_control.hum.gramian import (
    GramianOperator,
    control_from_adjoint,
    gramian,
    observability_report,
    observability_sweep,
)
from kdv5_control.hum.signal import ControlSignal, physical_control
from kdv5_control.hum.synthesis import HumSolver, solve_linear_control, solve_nonlinear_control
from kdv5_control.services.verification import random_field
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField
from kdv5_control.spectral.multipliers import dr_symbol

from conftest import trig_field


def test_gramian_is_hermitian_and_positive(closed_loop8):
    matrix = gramian(closed_loop8, T=0.5, dt=1e-3)
    assert matrix.symmetry_defect < 1e-10
    assert matrix.lambda_min > 0.0
    assert matrix.condition_number == pytest.approx(matrix.lambda_max / matrix.lambda_min)


def test_uniform_gramian_closed_form(uniform8):
    model = LinearModel(uniform8, feedback_on=False)
    T = 0.5
    matrix = gramian(model, T=T, dt=1e-2)
    k = uniform8.grid.mean_zero_wavenumbers
    expected = np.diag(T * np.abs(k).astype(float) ** 3 / (4 * math.pi ** 2))
    np.testing.assert_allclose(matrix.entries, expected, atol=1e-10 * expected.max())


def test_threaded_assembly_matches_serial(closed_loop8):
    serial = gramian(closed_loop8, T=0.1, dt=1e-2, threads=1)
    threaded = gramian(closed_loop8, T=0.1, dt=1e-2, threads=3)
    np.testing.assert_allclose(threaded.entries, serial.entries, rtol=0, atol=1e-15 * np.abs(serial.entries).max())


def test_quadratic_form_is_control_energy(closed_loop8, rng):
    phi = random_field(closed_loop8.grid, rng)
    matrix = gramian(closed_loop8, T=0.2, dt=1e-2)
    signal = control_from_adjoint(phi, closed_loop8, T=0.2, dt=1e-2)
    assert signal.energy() == pytest.approx(matrix.quadratic_form(phi), rel=1e-10)


def test_linear_control_reaches_target(closed_loop8, rng):
    target = random_field(closed_loop8.grid, rng, amplitude=1e-3, max_mode=4)
    signal = solve_linear_control(closed_loop8, SpectralField.zeros(closed_loop8.grid), target, T=1.0, dt=1e-3)
    assert signal.endpoint_error < 1e-8
    assert signal.diagnostics["method"] == "cholesky"
    assert len(signal) == 1001
    np.testing.assert_allclose(signal.values[:, closed_loop8.grid.zero_index], 0.0)


def test_cg_agrees_with_cholesky():
    profile = make_profile(PeriodicGrid(4), math.pi, math.pi / 2)
    model = LinearModel(profile)
    target = trig_field(profile.grid, cos={1: 1e-3}, sin={3: 5e-4})
    zero = SpectralField.zeros(profile.grid)
    direct = solve_linear_control(model, zero, target, T=0.5, dt=1e-3, method="cholesky")
    iterative = solve_linear_control(model, zero, target, T=0.5, dt=1e-3, method="cg", tol=1e-10)
    assert iterative.diagnostics["method"] == "cg"
    assert iterative.diagnostics["iterations"] > 0
    assert iterative.endpoint_error < 1e-6
    assert iterative.energy() == pytest.approx(direct.energy(), rel=1e-6)


def test_weighted_control(closed_loop8):
    target = trig_field(closed_loop8.grid, sin={2: 1e-3})
    zero = SpectralField.zeros(closed_loop8.grid)
    plain = solve_linear_control(closed_loop8, zero, target, T=0.5, dt=1e-3)
    weighted = solve_linear_control(closed_loop8, zero, target, T=0.5, dt=1e-3, s=1.0, weighted=True)
    assert weighted.endpoint_error < 1e-8
    assert weighted.diagnostics["weighted_s"] == 1.0
    # each control minimizes its own norm
    assert weighted.l2_norm(1.0) <= plain.l2_norm(1.0) * (1 + 1e-8)
    assert plain.energy() <= weighted.energy() * (1 + 1e-8)


def test_zero_data_gives_zero_control(closed_loop8):
    zero = SpectralField.zeros(closed_loop8.grid)
    signal = solve_linear_control(closed_loop8, zero, zero, T=0.1, dt=1e-2)
    assert signal.energy() == 0.0


def test_control_preconditions(closed_loop8):
    grid = closed_loop8.grid
    with pytest.raises(DomainError):
        GramianOperator(closed_loop8, T=0.0, dt=1e-2)
    with pytest.raises(DomainError):
        HumSolver(closed_loop8, T=0.1, dt=1e-2, method="lu")
    with pytest.raises(DomainError):
        solve_linear_control(closed_loop8, SpectralField.constant(grid, 1.0), SpectralField.zeros(grid), T=0.1, dt=1e-2)


def test_nonlinear_control_reaches_target(closed_loop8):
    model = NonlinearModel(closed_loop8)
    u0 = trig_field(closed_loop8.grid, sin={1: 1e-3})
    uT = trig_field(closed_loop8.grid, sin={2: 1e-3})
    signal = solve_nonlinear_control(model, u0, uT, T=1.0, dt=1e-3)
    assert signal.diagnostics["endpoint_error_abs"] < 1e-6
    assert signal.diagnostics["iterations"] <= 8
    assert signal.diagnostics["volume_drift"] <= 1e-10
    assert signal.trajectory is not None


def test_nonlinear_control_conserves_the_mean(closed_loop8):
    model = NonlinearModel(closed_loop8)
    u0 = trig_field(closed_loop8.grid, sin={1: 1e-3}, mean=0.2)
    uT = trig_field(closed_loop8.grid, sin={2: 1e-3})
    with pytest.raises(DomainError):
        solve_nonlinear_control(model, u0, uT, T=0.1, dt=1e-2)


def test_physical_control_without_feedback(bump8, rng):
    model = LinearModel(bump8, feedback_on=False)
    grid = bump8.grid
    values = np.stack([random_field(grid, rng).coeffs for _ in range(3)])
    signal = ControlSignal(grid, 0.1, values)
    h = physical_control(signal, signal.as_trajectory(), model)
    expected = signal.mean_zero_vectors * dr_symbol(grid.mean_zero_wavenumbers, 1.5)
    np.testing.assert_allclose(h.mean_zero_vectors, expected)


def test_signal_rejects_nonzero_mean(grid8):
    values = np.zeros((2, grid8.n_coeffs))
    values[:, grid8.zero_index] = 1.0
    with pytest.raises(DomainError):
        ControlSignal(grid8, 0.1, values)


def test_observability_report_and_sweep(closed_loop8):
    report = observability_report(closed_loop8, T=0.2, dt=1e-2)
    assert report.n_modes == 8
    assert report.observability_constant == pytest.approx(1.0 / report.lambda_min)
    assert report.radius == pytest.approx(math.pi / 2)
    assert abs(report.worst_mode) >= 1
    reports = observability_sweep(closed_loop8, [0.1, 0.2], [math.pi / 2, math.pi / 4], dt=1e-2)
    assert [r.radius for r in reports] == pytest.approx([math.pi / 2] * 2 + [math.pi / 4] * 2)
    assert [r.T for r in reports] == [0.1, 0.2, 0.1, 0.2]
