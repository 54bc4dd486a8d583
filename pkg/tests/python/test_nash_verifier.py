import math

import numpy as np
import pytest

from nfg.equilibrium_solver import construct_admissible, quadratic_counterexample
from nfg.errors import DomainError, WindowTooSmall
from nfg.nash_verifier import (
    DeviationProblem,
    check_nash,
    default_sample_ys,
    deviation_problem,
    dp_value,
    greedy_rollout,
)

FAST = dict(grid_n=201, control_n=41, richardson=False)


def test_deviation_problem_freezes_the_other_feedback(coop_spec, coop_solution):
    prob = deviation_problem(coop_spec, coop_solution, 1)
    xs = np.linspace(-5, 5, 7)
    assert np.allclose(prob.opponent_drift(xs), -2.0)
    assert np.allclose(prob.claimed_control(xs), -1.0)
    # clamped outside the solution window
    assert prob.opponent_drift(40.0) == pytest.approx(-2.0)
    assert prob.a_max == pytest.approx(2 * 2.0 * (1 + 2.0))
    assert prob.window == pytest.approx((-7.5, 7.5))
    assert prob.running_cost(1.0, -1.0) == pytest.approx(1.5)


def test_deviation_problem_rejects_bad_player(coop_spec, coop_solution):
    with pytest.raises(DomainError):
        deviation_problem(coop_spec, coop_solution, 3)
    with pytest.raises(DomainError):
        deviation_problem(coop_spec, coop_solution, 0)


def test_dp_value_argument_checks(coop_spec, coop_solution):
    prob = deviation_problem(coop_spec, coop_solution, 1)
    with pytest.raises(DomainError):
        dp_value(prob, grid_n=100)
    with pytest.raises(DomainError):
        dp_value(prob, control_n=10)
    with pytest.raises(DomainError):
        dp_value(prob, dt=0.5)


def test_window_too_small_is_reported(zero_spec):
    grid = np.linspace(-1.0, 1.0, 3)
    prob = DeviationProblem(
        player=1,
        spec=zero_spec,
        grid=grid,
        opponent_samples=np.full(3, 1000.0),
        claimed_samples=np.zeros(3),
        window=(-1.0, 1.0),
        a_max=1.0,
    )
    with pytest.raises(WindowTooSmall):
        dp_value(prob, grid_n=201, control_n=41)


def test_zero_game_has_zero_gaps(zero_spec):
    sol = construct_admissible(zero_spec)
    report = check_nash(zero_spec, sol)
    assert report.passed
    assert report.worst_gap == 0.0
    assert report.V.shape == (10, 2)
    assert np.allclose(report.ys, default_sample_ys(zero_spec.L))


def test_zero_game_value_iteration_stops_after_one_sweep(zero_spec):
    sol = construct_admissible(zero_spec)
    res = dp_value(deviation_problem(zero_spec, sol, 2), grid_n=201, control_n=41)
    assert res.iterations == 1
    assert np.all(res.V == 0.0)
    assert np.allclose(res.policy, 0.0, atol=1e-12)


def test_constant_game_is_certified(coop_spec, coop_solution):
    report = check_nash(coop_spec, coop_solution, **FAST)
    assert report.passed
    assert report.worst_gap < 1e-5
    assert np.isnan(report.error_estimate).all()
    assert not report.below_resolution


def test_dp_value_matches_closed_form(coop_spec, coop_solution):
    # V_1(x) = x - 5/2, V_2(x) = 2x - 4
    ys = np.array([-3.0, 0.0, 2.5])
    for player, offset, slope in ((1, -2.5, 1.0), (2, -4.0, 2.0)):
        res = dp_value(deviation_problem(coop_spec, coop_solution, player), grid_n=201, control_n=41)
        assert np.allclose(res.value_at(ys), slope * ys + offset, atol=1e-6)


def test_richardson_estimate_on_a_linear_value(coop_spec, coop_solution):
    report = check_nash(coop_spec, coop_solution, sample_ys=[0.0, 1.0], grid_n=401, control_n=41)
    assert np.all(np.isfinite(report.error_estimate))
    assert np.all(report.error_estimate < 1e-6)
    assert report.passed


def test_greedy_rollout_attains_the_value(coop_spec, coop_solution):
    prob = deviation_problem(coop_spec, coop_solution, 1)
    res = dp_value(prob, grid_n=201, control_n=41)
    cost = greedy_rollout(prob, res, 1.0, control_n=41)
    assert cost == pytest.approx(-1.5, abs=1e-6)
    assert abs(cost - float(res.value_at(1.0))) <= 2 * 1e-2


def test_perturbed_conflicting_game_is_certified(perturbed_conflict_spec):
    sol = construct_admissible(perturbed_conflict_spec, nu_max=1024)
    ys = np.linspace(-2.0, 2.0, 5)
    report = check_nash(perturbed_conflict_spec, sol, sample_ys=ys, grid_n=801, control_n=41, richardson=False)
    assert report.passed, f"gaps {report.gap.tolist()}"
    assert report.worst_gap < 1e-3, f"worst gap {report.worst_gap:.3e}"


def test_quadratic_counterexample_is_not_nash():
    spec, sol = quadratic_counterexample(L=5.0)
    ys = np.array([1.0, 2.0])
    report = check_nash(spec, sol, sample_ys=ys, **FAST)
    assert not report.passed
    # staying put costs nothing, while u_1 claims -y^2/2
    assert np.allclose(report.V[:, 0], 0.0)
    assert np.allclose(report.gap[:, 0], ys**2 / 2, atol=1e-8)
    assert report.point_pass[:, 1].all()
    assert report.worst_gap == pytest.approx(2.0, abs=1e-8)


def test_workers_do_not_change_the_report():
    spec, sol = quadratic_counterexample(L=5.0)
    one = check_nash(spec, sol, sample_ys=[1.0, -1.5], **FAST)
    two = check_nash(spec, sol, sample_ys=[1.0, -1.5], workers=2, **FAST)
    assert np.array_equal(one.V, two.V)
    assert np.array_equal(one.point_pass, two.point_pass)


def test_default_sample_points():
    ys = default_sample_ys(10.0)
    assert ys.size == 10
    assert ys[0] == pytest.approx(-4.0) and ys[-1] == pytest.approx(4.0)
    assert not math.isclose(ys[4], 0.0) and not math.isclose(ys[5], 0.0)
