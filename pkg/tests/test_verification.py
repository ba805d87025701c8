"""
Tests for the invariant suite behind ``kdv5 verify``.
"""

import math

import pytest

from kdv5_control.control.profile import make_profile, make_uniform_profile
from kdv5_control.evolution.linear import LinearModel
from kdv5_control.evolution.nonlinear import NonlinearModel
from kdv5_control.services.verification import CheckResult, VerificationReport, VerificationSuite
from kdv5_control.spectral.grid import PeriodicGrid


@pytest.fixture
def suite():
    profile = make_profile(PeriodicGrid(4), math.pi, math.pi / 2)
    return VerificationSuite(NonlinearModel(LinearModel(profile)), T=0.1, dt=1e-2, s=2.5, seed=0)


def assert_all_passed(results):
    failed = [(r.name, r.value, r.threshold) for r in results if not r.passed]
    assert not failed


def test_spectral_checks(suite):
    results = suite.spectral_checks()
    assert [r.name for r in results] == [
        "parseval",
        "hilbert_squared",
        "multiplier_composition",
        "dr_is_hilbert_derivative",
    ]
    assert_all_passed(results)


def test_control_operator_checks(suite):
    assert_all_passed(suite.control_operator_checks())


def test_observability_checks(suite):
    results = {r.name: r for r in suite.observability_checks()}
    assert set(results) == {"gramian_symmetry", "gramian_positive", "duality_residual"}
    assert results["duality_residual"].passed
    assert results["gramian_positive"].passed


def test_decay_check_skipped_without_dissipation():
    profile = make_profile(PeriodicGrid(4), math.pi, math.pi / 2)
    suite = VerificationSuite(NonlinearModel(LinearModel(profile, feedback_on=False)), T=0.1, dt=1e-2)
    results = suite.decay_checks()
    assert [r.name for r in results] == ["generator_stable", "decay_rate_matches"]
    assert all(r.skipped and r.passed for r in results)


def test_nonlinear_checks(suite):
    results = {r.name: r for r in suite.nonlinear_checks()}
    assert results["mean_conservation"].value == 0.0
    assert results["picard_vs_evolve"].passed
    assert results["l2_conservation"].passed


def test_report_passes_only_when_every_check_passes():
    report = VerificationReport([CheckResult("a", 0.0, 1.0, True), CheckResult("b", 2.0, 1.0, False)])
    assert not report.passed
    assert report.failures == ["b"]
    payload = report.to_dict()
    assert payload["passed"] is False
    assert payload["checks"][1] == {
        "name": "b",
        "value": 2.0,
        "threshold": 1.0,
        "passed": False,
        "skipped": False,
        "note": "",
    }


def test_control_operator_checks_cover_every_commutator_pair(suite):
    results = {r.name: r for r in suite.control_operator_checks()}
    for s, r in [(1.0, 0.0), (1.5, 3.0), (-0.5, 3.0)]:
        assert (s, r) in suite.commutator_pairs()
        assert f"({s:g}, {r:g})" in results["ctrl2_identity"].note


def test_energy_residual_order_is_measured():
    model = NonlinearModel(LinearModel(make_uniform_profile(PeriodicGrid(8)), epsilon=0.1))
    suite = VerificationSuite(model, T=1.0, dt=4e-3)
    result = suite.energy_residual_order()
    assert result.passed and not result.skipped
    assert result.value >= 1.9


def test_decay_fit_is_compared_with_the_spectrum():
    model = NonlinearModel(LinearModel(make_uniform_profile(PeriodicGrid(4))))
    suite = VerificationSuite(model, T=40.0, dt=0.05)
    results = {r.name: r for r in suite.decay_checks()}
    assert not results["decay_rate_matches"].skipped
    assert results["decay_rate_matches"].value < 1e-6


def test_nonlinear_control_reaches_its_target():
    profile = make_profile(PeriodicGrid(8), math.pi, math.pi / 2)
    suite = VerificationSuite(NonlinearModel(LinearModel(profile)), T=1.0, dt=1e-2)
    result = suite.nonlinear_control_check()
    assert result.passed, result.note


def test_x_space_bound_needs_whole_unit_intervals(suite):
    results = {r.name: r for r in suite.nonlinear_checks()}
    assert results["x_space_bound"].skipped


def test_x_space_bound_on_a_long_run():
    profile = make_profile(PeriodicGrid(4), math.pi, math.pi / 2)
    suite = VerificationSuite(NonlinearModel(LinearModel(profile)), T=3.0, dt=1e-2)
    result = suite.x_space_bound_check(suite.smooth_data * 1e-3)
    assert not result.skipped
    assert result.passed


def test_regularization_checks_sweep_gamma(suite):
    results = [r for r in suite.regularization_checks() if r.name.startswith("mollifier_bound")]
    assert [r.name for r in results] == [
        "mollifier_bound[gamma=1]",
        "mollifier_bound[gamma=2]",
        "mollifier_bound[gamma=3.5]",
    ]
    assert_all_passed(results)
