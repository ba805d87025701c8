"""
Tests for the linear closed-loop flow, its adjoint and the decay estimates.
"""

import math

import numpy as np
import pytest

from kdv5_control.control.operators import apply_g_op, feedback_matrix
from kdv5_control.control.profile import make_profile
from kdv5_control.errors import DomainError
from kdv5_control.evolution.decay import fit_decay
from kdv5_control.evolution.linear import (
    LinearFlow,
    LinearModel,
    adjoint_evolve,
    assemble_generator,
    decay_rate,
    evolve_linear,
    propagator,
    spectral_abscissa,
    uniform_estimate_constant,
    weighted_adjoint_evolve,
)
from kdv5_control.services.verification import random_field
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField
from kdv5_control.spectral.multipliers import dr
from kdv5_control.spectral.norms import inner_product, sobolev_norm

from conftest import trig_field


@pytest.mark.parametrize("n_modes", [4, 8, 16, 32])
def test_feedback_generator_is_stable(n_modes):
    profile = make_profile(PeriodicGrid(n_modes), math.pi, math.pi / 2)
    assert spectral_abscissa(assemble_generator(LinearModel(profile))) > 0.0


def test_open_loop_flow_is_unitary(bump8, rng):
    model = LinearModel(bump8, feedback_on=False)
    v0 = random_field(bump8.grid, rng)
    traj = evolve_linear(model, v0, None, T=0.5, dt=1e-2)
    norms = traj.norms(0.0)
    np.testing.assert_allclose(norms, norms[0], rtol=1e-12)


def test_dispersion_symbol_sign(bump8):
    model = LinearModel(bump8, feedback_on=False)
    # L = -d^5/dx^5 for l = 2: exp(-tL) multiplies mode k by exp(i k^5 t)
    u = trig_field(bump8.grid, cos={1: 1.0})
    t = 0.3
    evolved = propagator(assemble_generator(model), t).apply(u)
    assert evolved.coefficient(1) == pytest.approx(0.5 * np.exp(1j * t), abs=1e-13)


def test_uniform_feedback_decays_mode_by_mode(uniform8):
    model = LinearModel(uniform8)
    np.testing.assert_allclose(
        feedback_matrix(uniform8),
        np.diag(np.abs(uniform8.grid.mean_zero_wavenumbers) ** 3 / (4 * math.pi ** 2)),
        atol=1e-14,
    )
    v0 = trig_field(uniform8.grid, cos={2: 1.0})
    traj = evolve_linear(model, v0, None, T=1.0, dt=1e-2)
    ratio = sobolev_norm(traj.final, 0.0) / sobolev_norm(v0, 0.0)
    assert ratio == pytest.approx(math.exp(-8.0 / (4 * math.pi ** 2)), rel=1e-10)


def test_closed_loop_norm_is_nonincreasing(closed_loop8, rng):
    traj = evolve_linear(closed_loop8, random_field(closed_loop8.grid, rng), None, T=1.0, dt=1e-2)
    norms = traj.norms(0.0)
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])
    assert norms[-1] < norms[0]


def test_adjoint_duality(closed_loop8, rng):
    v0 = random_field(closed_loop8.grid, rng)
    phi = random_field(closed_loop8.grid, rng)
    forward = evolve_linear(closed_loop8, v0, None, T=0.5, dt=1e-2)
    backward = adjoint_evolve(closed_loop8, phi, T=0.5, dt=1e-2)
    lhs = inner_product(forward.final, phi)
    rhs = inner_product(v0, backward.initial)
    assert abs(lhs - rhs) < 1e-12 * sobolev_norm(v0, 0.0) * sobolev_norm(phi, 0.0)


def test_forcing_enters_with_trapezoid_weights(uniform8):
    model = LinearModel(uniform8, feedback_on=False)
    grid = uniform8.grid
    F = np.tile(trig_field(grid, cos={1: 1.0}).mean_zero_vector, (3, 1))
    traj = evolve_linear(model, SpectralField.zeros(grid), F, T=0.2, dt=0.1)
    S = LinearFlow.forward(model).step(0.1)
    expected = 0.05 * (S @ S @ F[0] + S @ F[1]) + 0.05 * (S @ F[1] + F[2])
    np.testing.assert_allclose(traj.final.mean_zero_vector, expected, atol=1e-14)


def test_weighted_adjoint_matches_scaled_adjoint(closed_loop8, rng):
    s = 1.5
    phi = random_field(closed_loop8.grid, rng)
    plain = adjoint_evolve(closed_loop8, phi, T=0.2, dt=1e-2)
    weighted = weighted_adjoint_evolve(closed_loop8, dr(phi, -s), s, T=0.2, dt=1e-2)
    expected = dr(plain.initial, -s)
    np.testing.assert_allclose(weighted.initial.coeffs, expected.coeffs, atol=1e-9 * np.abs(expected.coeffs).max())


def test_decay_rate_matches_uniform_prediction(uniform8):
    model = LinearModel(uniform8)
    v0 = trig_field(uniform8.grid, cos={1: 1.0})
    fit = decay_rate(model, v0, T=2.0, dt=1e-2, s=0.0)
    assert fit.predicted_rate == pytest.approx(1.0 / (4 * math.pi ** 2), rel=1e-10)
    assert fit.rate == pytest.approx(fit.predicted_rate, rel=1e-6)
    assert not fit.degenerate


def test_decay_fit_of_zero_data_is_degenerate(closed_loop8):
    traj = evolve_linear(closed_loop8, SpectralField.zeros(closed_loop8.grid), None, T=0.1, dt=1e-2)
    fit = fit_decay(traj, 0.0)
    assert fit.degenerate
    assert not fit.conclusive


def test_uniform_estimate_constant(closed_loop8, rng):
    v0 = random_field(closed_loop8.grid, rng)
    constant = uniform_estimate_constant(closed_loop8, v0, None, T=0.5, dt=1e-2, s=1.0)
    assert 1.0 <= constant < np.inf


def test_preconditions(closed_loop8):
    grid = closed_loop8.grid
    with pytest.raises(DomainError):
        evolve_linear(closed_loop8, SpectralField.constant(grid, 1.0), None, T=0.1, dt=1e-2)
    with pytest.raises(DomainError):
        propagator(assemble_generator(closed_loop8), -1.0)
    with pytest.raises(DomainError):
        evolve_linear(closed_loop8, SpectralField.zeros(grid), None, T=0.1, dt=0.03)
    with pytest.raises(DomainError):
        LinearModel(closed_loop8.profile, order_l=1)
    with pytest.raises(DomainError):
        LinearModel(closed_loop8.profile, epsilon=-1.0)


def test_g_of_state_drives_the_dissipation(closed_loop8, rng):
    v = random_field(closed_loop8.grid, rng)
    image = feedback_matrix(closed_loop8.profile) @ v.mean_zero_vector
    form = inner_product(v, SpectralField.from_mean_zero_vector(v.grid, image))
    assert form.real == pytest.approx(sobolev_norm(dr(apply_g_op(v, closed_loop8.profile), 1.5), 0.0) ** 2, rel=1e-10)


def test_propagators_compose(closed_loop8, rng):
    generator = assemble_generator(closed_loop8)
    t1, t2 = rng.uniform(0.05, 1.0, size=2)
    product = propagator(generator, t1).entries @ propagator(generator, t2).entries
    expected = propagator(generator, t1 + t2).entries
    np.testing.assert_allclose(product, expected, atol=1e-10 * np.abs(expected).max())


def _decay_horizon(model, dt):
    """A multiple of dt long enough for the slowest mode to lose a factor e^4."""
    abscissa = spectral_abscissa(assemble_generator(model))
    return dt * math.ceil(4.0 / (abscissa * dt))


@pytest.mark.slow
def test_bump_decay_rate_matches_spectral_abscissa():
    model = LinearModel(make_profile(PeriodicGrid(32), math.pi, math.pi / 2))
    v0 = trig_field(model.grid, cos={1: 1.0}, sin={2: 0.1})
    dt = 0.05
    fit = decay_rate(model, v0, T=_decay_horizon(model, dt), dt=dt, s=0.0)
    assert fit.conclusive
    assert fit.rate == pytest.approx(fit.predicted_rate, rel=0.1)


def test_epsilon_adds_dissipation(bump16):
    v0 = trig_field(bump16.grid, cos={1: 1.0}, sin={2: 0.1})
    dt = 0.05
    T = _decay_horizon(LinearModel(bump16), dt)
    rates = [decay_rate(LinearModel(bump16, epsilon=eps), v0, T, dt, 0.0).rate for eps in (0.0, 0.05, 0.1)]
    assert rates[0] > 0.0
    assert min(rates[1:]) >= 0.95 * rates[0]


@pytest.mark.slow
def test_uniform_estimate_constant_is_resolution_independent():
    constants = []
    for n_modes in (16, 32, 64):
        model = LinearModel(make_profile(PeriodicGrid(n_modes), math.pi, math.pi / 2))
        v0 = trig_field(model.grid, cos={1: 1.0}, sin={2: 0.3})
        constants.append(uniform_estimate_constant(model, v0, None, T=0.5, dt=1e-2, s=1.0))
    assert min(constants) >= 1.0
    assert max(constants) <= 1.25 * min(constants)
