"""
Tests for the nonlinear solvers: the stepped integrator and the Picard iteration.
"""

import math

import numpy as np
import pytest

from kdv5_control.errors import ConvergenceError, DimensionError, DivergenceError
from kdv5_control.evolution.ledger import energy_ledger
from kdv5_control.evolution.linear import LinearModel, decay_rate, evolve_linear
from kdv5_control.evolution.nonlinear import (
    GROWTH_LIMIT,
    KDV5_COEFFICIENTS,
    NonlinearModel,
    evolve_nonlinear,
    measure_decay,
    nonlinear_forcing,
    nonlinearity,
    picard_solve,
    x_space_check,
)
from kdv5_control.spectral.grid import SpectralField, to_physical
from kdv5_control.spectral.norms import sobolev_norm

from conftest import trig_field


@pytest.fixture
def kdv5(closed_loop8):
    return NonlinearModel(closed_loop8)


@pytest.fixture
def open_loop(bump8):
    return NonlinearModel(LinearModel(bump8, feedback_on=False))


def test_kdv5_nonlinearity_of_sine(kdv5):
    grid = kdv5.grid
    u = trig_field(grid, sin={1: 1.0})
    x = grid.points
    # c1 u^2 u' + c2 u' u'' + c3 u u''' with (c1, c2, c3) = (-30, 20, 10)
    expected = -30 * np.sin(x) ** 2 * np.cos(x) - 30 * np.sin(x) * np.cos(x)
    np.testing.assert_allclose(to_physical(nonlinearity(u, kdv5)), expected, atol=1e-12)


def test_hierarchy_nonlinearity(closed_loop8):
    model = NonlinearModel(closed_loop8, coefficients=(0, 0, 0, 0), hierarchy_term=True)
    u = trig_field(closed_loop8.grid, sin={1: 1.0})
    x = closed_loop8.grid.points
    # u d^3u/dx^3 for l = 2
    np.testing.assert_allclose(to_physical(nonlinearity(u, model)), -np.sin(x) * np.cos(x), atol=1e-12)


def test_default_coefficients():
    assert KDV5_COEFFICIENTS == (0.0, -30.0, 20.0, 10.0)


def test_zero_coefficients_reduce_to_linear_flow(closed_loop8):
    model = NonlinearModel(closed_loop8, coefficients=(0, 0, 0, 0))
    v0 = trig_field(closed_loop8.grid, cos={1: 1.0}, sin={3: 0.5})
    nonlinear = evolve_nonlinear(model, v0, T=0.2, dt=1e-2)
    linear = evolve_linear(closed_loop8, v0, None, T=0.2, dt=1e-2)
    np.testing.assert_allclose(nonlinear.coeffs, linear.coeffs, atol=1e-13)


def test_mean_is_conserved(kdv5):
    u0 = trig_field(kdv5.grid, sin={1: 1e-3}, mean=0.1)
    traj = evolve_nonlinear(kdv5, u0, T=0.5, dt=1e-3)
    assert np.max(np.abs(traj.means - 0.1)) <= 1e-10


def test_open_loop_conserves_l2(open_loop):
    u0 = trig_field(open_loop.grid, sin={1: 1e-3}, cos={2: 5e-4})
    traj = evolve_nonlinear(open_loop, u0, T=1.0, dt=1e-3)
    norms = traj.norms(0.0)
    assert abs(norms[-1] - norms[0]) / norms[0] < 1e-6


def test_picard_agrees_with_stepper(kdv5):
    u0 = trig_field(kdv5.grid, sin={1: 1e-3})
    picard = picard_solve(kdv5, u0, T=0.25, dt=1e-3, tol=1e-12)
    direct = evolve_nonlinear(kdv5, u0, T=0.25, dt=1e-3)
    assert sobolev_norm(picard.trajectory.final - direct.final, 2.5) <= 1e-6
    assert picard.iterations == len(picard.distances)


def test_picard_contracts_faster_for_smaller_data(kdv5):
    full = picard_solve(kdv5, trig_field(kdv5.grid, sin={1: 1e-3}), T=0.25, dt=1e-3, tol=1e-14)
    half = picard_solve(kdv5, trig_field(kdv5.grid, sin={1: 5e-4}), T=0.25, dt=1e-3, tol=1e-14)
    assert full.ratios and half.ratios
    assert half.ratios[0] < full.ratios[0]


def test_picard_reports_non_convergence(kdv5):
    u0 = trig_field(kdv5.grid, sin={1: 1e-3})
    with pytest.raises(ConvergenceError):
        picard_solve(kdv5, u0, T=0.1, dt=1e-2, tol=1e-30, max_iterations=1)


def test_nonlinear_energy_ledger(kdv5):
    u0 = trig_field(kdv5.grid, cos={1: 1e-3})
    traj = evolve_nonlinear(kdv5, u0, T=0.5, dt=1e-3)
    ledger = energy_ledger(kdv5.linear, traj, nonlinear_forcing(kdv5, traj))
    assert ledger.relative_residual < 1e-5


def test_small_data_feedback_run_decays(kdv5):
    u0 = trig_field(kdv5.grid, sin={1: 1e-3}, cos={2: 1e-3})
    traj = evolve_nonlinear(kdv5, u0, T=10.0, dt=1e-2)
    fit = measure_decay(traj, 2.5)
    assert fit.rate > 0.0
    weighted = x_space_check(traj, 2.5, fit.rate, kdv5.linear.order_l)
    assert weighted.shape == (10,)
    assert np.all(np.isfinite(weighted))
    assert weighted.max() <= 10.0 * weighted[0]


def test_validation(kdv5, grid16):
    with pytest.raises(DimensionError):
        NonlinearModel(kdv5.linear, coefficients=(1.0, 2.0, 3.0))
    with pytest.raises(DimensionError):
        evolve_nonlinear(kdv5, SpectralField.zeros(grid16), T=0.1, dt=1e-2)


def test_zero_data_stays_zero(kdv5):
    traj = evolve_nonlinear(kdv5, SpectralField.zeros(kdv5.grid), T=0.1, dt=1e-2)
    assert np.all(traj.coeffs == 0.0)


def _centered(coeffs, n_modes):
    middle = coeffs.size // 2
    return coeffs[middle - n_modes : middle + n_modes + 1]


def test_nonlinearity_matches_direct_convolution(bump16):
    model = NonlinearModel(LinearModel(bump16))
    grid = bump16.grid
    u = trig_field(grid, sin={1: 1.0}, cos={2: 1.0})
    ik = 1j * grid.wavenumbers
    c, c1, c2, c3 = u.coeffs, u.coeffs * ik, u.coeffs * ik ** 2, u.coeffs * ik ** 3
    _, a1, a2, a3 = KDV5_COEFFICIENTS
    expected = (
        a1 * _centered(np.convolve(np.convolve(c, c), c1), grid.n_modes)
        + a2 * _centered(np.convolve(c1, c2), grid.n_modes)
        + a3 * _centered(np.convolve(c, c3), grid.n_modes)
    )
    np.testing.assert_allclose(nonlinearity(u, model).coeffs, expected, atol=1e-11)


def test_quadratic_coefficient_alone(closed_loop8):
    model = NonlinearModel(closed_loop8, coefficients=(1.0, 0.0, 0.0, 0.0))
    u = trig_field(closed_loop8.grid, sin={1: 1.0})
    # u u' = sin x cos x
    expected = trig_field(closed_loop8.grid, sin={2: 0.5})
    np.testing.assert_allclose(nonlinearity(u, model).coeffs, expected.coeffs, atol=1e-13)


def test_stepper_is_second_order(open_loop):
    u0 = trig_field(open_loop.grid, sin={1: 1e-3}, cos={2: 5e-4})
    finals = [evolve_nonlinear(open_loop, u0, T=0.5, dt=dt).final for dt in (4e-3, 2e-3, 1e-3)]
    coarse = sobolev_norm(finals[0] - finals[1], 0.0)
    fine = sobolev_norm(finals[1] - finals[2], 0.0)
    assert math.log2(coarse / fine) >= 1.9


def test_small_data_decay_follows_the_linear_rate(kdv5):
    u0 = trig_field(kdv5.grid, sin={1: 1e-3}, cos={2: 1e-3})
    nonlinear = measure_decay(evolve_nonlinear(kdv5, u0, T=10.0, dt=1e-2), 2.5)
    linear = decay_rate(kdv5.linear, u0, T=10.0, dt=1e-2, s=2.5)
    assert nonlinear.rate > 0.0
    assert abs(nonlinear.rate - linear.rate) <= 0.25 * linear.rate


def test_open_loop_shows_no_decay(open_loop):
    u0 = trig_field(open_loop.grid, sin={1: 1e-3}, cos={2: 5e-4})
    fit = measure_decay(evolve_nonlinear(open_loop, u0, T=2.0, dt=1e-2), 0.0)
    assert abs(fit.rate) < 1e-2


def test_growth_guard_stops_runaway_solutions(bump8):
    model = NonlinearModel(LinearModel(bump8, feedback_on=False), coefficients=(0, 0, 0, 0))
    grid = bump8.grid
    u0 = trig_field(grid, sin={1: 1e-3})
    F = np.tile(trig_field(grid, cos={1: 1.0}).mean_zero_vector, (201, 1))
    with pytest.raises(DivergenceError) as info:
        evolve_nonlinear(model, u0, T=2.0, dt=1e-2, forcing=F)
    assert info.value.details["norm"] > GROWTH_LIMIT * info.value.details["initial_norm"]
