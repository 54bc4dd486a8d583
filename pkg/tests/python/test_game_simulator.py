import dataclasses
import logging
import math

import numpy as np
import pytest

from nfg.equilibrium_solver import constant_solution, construct_admissible, solution_grid
from nfg.errors import DomainError, WindowExceeded
from nfg.game_model import constant_slope_spec, zero_game_spec
from nfg.game_simulator import (
    HIT_JUMP,
    REACHED_EQUILIBRIUM,
    TRUNCATED,
    drift,
    evaluate_cost,
    g_zeros,
    growth_bound_holds,
    simulate,
)
from nfg.hj_system import JumpRecord
from nfg.solution import PiecewiseSolution


def _jump_solution(left: float, right: float, L: float = 5.0) -> PiecewiseSolution:
    """Zero game, p = (left, left) on x < 0 and (right, right) on x >= 0; u = -1.5 on both sides."""
    grid = solution_grid(L, points_per_unit=8)
    p = np.where(grid[:, None] < 0, left, right) * np.ones((grid.size, 2))
    u = np.full_like(p, -1.5)
    jump = JumpRecord(0.0, (left, left), (right, right))
    return PiecewiseSolution(grid=grid, p=p, u=u, jumps=(jump,))


def _linear_drift_solution(L: float = 5.0) -> PiecewiseSolution:
    """p = (x/2, x/2), so g(x) = -x."""
    grid = solution_grid(L, points_per_unit=8)
    p = np.c_[grid / 2, grid / 2]
    return PiecewiseSolution(grid=grid, p=p, u=np.zeros_like(p))


def test_constant_game_costs_match_values():
    sol = constant_solution(1.0, 2.0, L=60.0, C=2.0)
    spec = constant_slope_spec(1.0, 2.0, C=2.0, L=60.0)
    rng = np.random.default_rng(0)
    for y in rng.uniform(-24.0, 24.0, size=20):
        traj = simulate(sol, spec, y, T=40.0)
        assert traj.truncated, f"y={y}: expected truncation at the left edge"
        assert traj.t_end == pytest.approx((y + 60.0) / 3.0, abs=1e-8)
        costs = evaluate_cost(spec, traj, sol)
        u = sol.value_at(y)
        for c in costs:
            err = abs(c.total - u[c.player - 1])
            assert err <= 1e-4 + c.tail, f"y={y} player {c.player}: |J - u| = {err:.3e}, tail {c.tail:.3e}"


def test_constant_game_trajectory_shape():
    sol = constant_solution(1.0, 2.0, L=10.0, C=2.0)
    spec = constant_slope_spec(1.0, 2.0, C=2.0, L=10.0)
    traj = simulate(sol, spec, 1.0, T=2.0)
    assert traj.direction == -1 and traj.is_monotone()
    assert np.allclose(traj.x_at(np.array([0.5, 2.0])), [-0.5, -5.0], atol=1e-9)
    assert np.allclose(traj.controls, [-1.0, -2.0])
    assert growth_bound_holds(traj, C0=2.0)
    assert not traj.events


def test_window_exit_can_raise():
    sol = constant_solution(1.0, 2.0, L=5.0, C=2.0)
    spec = constant_slope_spec(1.0, 2.0, C=2.0, L=5.0)
    with pytest.raises(WindowExceeded) as exc:
        simulate(sol, spec, 1.0, T=40.0, on_exit="raise")
    assert exc.value.t == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(WindowExceeded):
        simulate(sol, spec, 6.0)


def test_argument_checks(coop_solution, coop_spec):
    with pytest.raises(DomainError):
        simulate(coop_solution, coop_spec, 0.0, T=0.0)
    with pytest.raises(DomainError):
        simulate(coop_solution, coop_spec, 0.0, on_exit="wrap")


def test_zero_game_stays_put(zero_spec):
    sol = construct_admissible(zero_spec)
    traj = simulate(sol, zero_spec, 1.3, T=5.0)
    assert traj.direction == 0
    assert [e.kind for e in traj.events] == [REACHED_EQUILIBRIUM]
    assert np.all(traj.x == 1.3)
    assert all(c.total == 0.0 for c in evaluate_cost(zero_spec, traj, sol))


def test_linear_drift_reaches_equilibrium():
    spec = zero_game_spec(L=5.0)
    sol = _linear_drift_solution()
    zeros = g_zeros(sol, spec)
    assert np.allclose(zeros.zeros, [0.0])
    traj = simulate(sol, spec, 1.0, T=40.0)
    (event,) = traj.events
    assert event.kind == REACHED_EQUILIBRIUM
    assert event.t == pytest.approx(math.log(1e10), abs=1e-2)
    assert traj.x_at(5.0)[0] == pytest.approx(math.exp(-5.0), rel=1e-7)
    assert traj.x[-1] == pytest.approx(1e-10, rel=1e-3)


def test_attracting_jump_holds_the_state():
    spec = zero_game_spec(L=5.0)
    sol = _jump_solution(-1.0, 1.0)  # g = +2 left of 0, -2 right of 0
    assert drift(sol, spec, -0.5) == pytest.approx(2.0)
    for y in (-1.0, 1.0):
        traj = simulate(sol, spec, y, T=10.0)
        (event,) = traj.events
        assert event.kind == HIT_JUMP and event.t == pytest.approx(0.5, abs=1e-8)
        assert traj.x[-1] == 0.0
        assert traj.t_end == 10.0


def test_repelling_jump_start_is_flagged(caplog):
    spec = zero_game_spec(L=5.0)
    sol = _jump_solution(1.0, -1.0)  # g = -2 left of 0, +2 right of 0
    with caplog.at_level(logging.WARNING, logger="nfg.game_simulator"):
        traj = simulate(sol, spec, 0.0, T=10.0)
    assert "jump point" in caplog.text
    assert traj.direction == 1
    assert [e.kind for e in traj.events] == [TRUNCATED]
    assert traj.t_end == pytest.approx(2.5, abs=1e-8)

    left = simulate(sol, spec, -1.0, T=10.0)
    assert left.direction == -1 and left.t_end == pytest.approx(2.0, abs=1e-8)


def test_conflicting_solution_costs_match_values(perturbed_conflict_spec):
    # wide window: the state drifts left at speed ~1 and must not reach -L before T
    spec = dataclasses.replace(perturbed_conflict_spec, L=60.0)
    sol = construct_admissible(spec, nu_max=1024)
    rng = np.random.default_rng(3)
    for y in rng.uniform(-2.0, 2.0, size=20):
        traj = simulate(sol, spec, y, T=40.0)
        assert not traj.truncated, f"y={y}: left the window at t={traj.t_end:.3f}"
        for c in evaluate_cost(spec, traj, sol):
            assert c.tail < 1e-6, f"y={y} player {c.player}: tail {c.tail:.3e}"
            err = abs(c.total - sol.value_at(y)[c.player - 1])
            assert err <= 1e-4 + c.tail, f"y={y} player {c.player}: {err:.3e} vs tail {c.tail:.3e}"
