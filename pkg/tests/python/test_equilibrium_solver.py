import dataclasses

import numpy as np
import pytest

from nfg.equilibrium_solver import (
    audit,
    box_slope_sampler,
    constant_solution,
    construct_admissible,
    contraction_probe,
    default_nu_schedule,
    invariant_region,
    kink_counterexample,
    periodic_solution,
    quadratic_counterexample,
    realized_slope_sampler,
    region_invariance_probe,
    solution_grid,
)
from nfg.errors import DomainError, NoConvergence, Unsupported
from nfg.game_model import UNIT_WEIGHT, GameSpec, Linear, RegimeTag, constant_slope_spec, linear_example_spec


def test_solution_grid_is_odd_and_contains_origin():
    grid = solution_grid(5.0, points_per_unit=8)
    assert grid.size % 2 == 1 and grid.size == 81
    assert grid[40] == 0.0
    assert grid[0] == -5.0 and grid[-1] == 5.0


def test_default_schedule_doubles():
    assert default_nu_schedule(64) == [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]


def test_constant_solution_is_exact_and_admissible(coop_solution):
    assert np.allclose(coop_solution.u[:, 0], coop_solution.grid - 2.5)
    assert coop_solution.audit.passed, coop_solution.audit
    assert coop_solution.audit.max_residual < 1e-12


@pytest.mark.parametrize("kappa", [(1.0, 2.0), (2.0, 1.0), (-1.0, 2.0), (-1.0, -2.0)])
def test_nu_limit_reproduces_constant_slopes(kappa):
    spec = constant_slope_spec(*kappa, C=2.0, L=5.0)
    sol = construct_admissible(spec, nu_max=1024)
    err = float(np.max(np.abs(sol.p - np.asarray(kappa))))
    assert err < 1e-8, f"max |p - kappa| = {err:.3e} (nu={sol.meta['nu']})"
    assert sol.meta["method"] == "nu-limit"
    assert sol.audit.passed, sol.audit.reasons


def test_nu_limit_on_perturbed_conflict(perturbed_conflict_spec):
    sol = construct_admissible(perturbed_conflict_spec, nu_max=1024)
    assert sol.audit.passed, sol.audit.reasons
    assert sol.meta["regime"] == RegimeTag.CONFLICTING.value
    assert np.max(np.abs(sol.p - [-1.0, 2.0])) < 0.1


def test_nu_limit_reports_no_convergence(coop_spec):
    with pytest.raises(NoConvergence) as exc:
        construct_admissible(coop_spec, nu_schedule=[8.0, 16.0])
    assert exc.value.nu == 16.0
    assert exc.value.sup_diff > 1e-8


def test_zero_game_returns_zero_solution(zero_spec):
    sol = construct_admissible(zero_spec)
    assert sol.meta["method"] == "zero-game"
    assert np.all(sol.p == 0.0) and np.all(sol.u == 0.0)


def test_unsupported_games():
    three = GameSpec(costs=(Linear(1.0),) * 3, weights=(UNIT_WEIGHT,) * 3, C=2.0, L=1.0)
    with pytest.raises(Unsupported):
        construct_admissible(three)
    with pytest.raises(Unsupported):
        construct_admissible(linear_example_spec(1.0, C=2.0))
    weighted = GameSpec(costs=(Linear(1.0), Linear(2.0)), weights=(Linear(0.0, 2.0), UNIT_WEIGHT), C=2.0, L=1.0)
    with pytest.raises(Unsupported):
        construct_admissible(weighted)


def test_invariant_regions():
    coop = invariant_region(constant_slope_spec(1.0, 2.0, C=2.0))
    assert coop.shape == "polygon" and not coop.reflect
    assert coop.contains((1.0, 2.0)) and not coop.contains((0.05, 0.05))

    dec = invariant_region(constant_slope_spec(-1.0, -2.0, C=2.0))
    assert dec.reflect and np.allclose(dec.to_working((-1.0, -2.0)), (1.0, 2.0))

    ball = invariant_region(constant_slope_spec(-1.0, 2.0, C=2.0))
    assert ball.shape == "ball" and ball.center == (-1.0, 2.0)
    assert ball.radius == pytest.approx(0.9 * np.sqrt(2) / 2, rel=1e-12)
    assert ball.certificate < 0

    mirrored = invariant_region(constant_slope_spec(-2.0, 1.0, C=2.0))
    assert mirrored.reflect and mirrored.swap
    assert mirrored.center == (-1.0, 2.0)
    assert np.allclose(mirrored.from_working(mirrored.to_working((0.3, -0.7))), (0.3, -0.7))


def test_cooperative_polygon_is_invariant():
    region = invariant_region(constant_slope_spec(1.0, 2.0, C=2.0))
    report = region_invariance_probe(region, box_slope_sampler(2.0), n_starts=100, s_max=50.0, seed=0)
    assert report.passed, f"{report.n_escaped} escaped, worst {report.worst_excursion:.3e} from {report.witness}"


def test_conflicting_ball_is_invariant():
    spec = GameSpec(
        costs=(Linear(-1.0), Linear(2.0)), weights=(UNIT_WEIGHT, UNIT_WEIGHT), C=3.0, L=5.0
    )
    region = invariant_region(spec)
    report = region_invariance_probe(region, realized_slope_sampler(spec, region), n_starts=100, seed=1)
    assert report.passed, f"worst excursion {report.worst_excursion:.3e}"


def test_perturbed_ball_is_invariant(perturbed_conflict_spec):
    region = invariant_region(perturbed_conflict_spec)
    sampler = realized_slope_sampler(perturbed_conflict_spec, region)
    report = region_invariance_probe(region, sampler, n_starts=100, s_max=50.0, seed=2)
    assert report.passed, f"worst excursion {report.worst_excursion:.3e}"


def test_contraction_in_the_ball(perturbed_conflict_spec):
    report = contraction_probe(perturbed_conflict_spec, s_max=20.0)
    assert report.contracts, f"K={report.rate}"
    assert report.final_gap < 1e-6, f"final gap {report.final_gap:.3e}"


def test_kink_counterexample_fails_jump_condition_only():
    spec, sol = kink_counterexample(5.0)
    assert sol.audit.reasons == ("A3",), sol.audit
    assert sol.audit.max_residual < 1e-12
    assert sol.jumps[0].y == 0.0


def test_quadratic_counterexample_fails_growth_only():
    _, sol = quadratic_counterexample(5.0)
    assert sol.audit.reasons == ("A2",), sol.audit
    assert sol.audit.growth_slope > sol.audit.growth_bound


def test_audit_rejects_values_that_are_not_antiderivatives(coop_spec, coop_solution):
    bumped = dataclasses.replace(coop_solution, u=coop_solution.u + 0.1 * np.sin(coop_solution.grid)[:, None])
    report = audit(bumped, coop_spec)
    assert not report.a1 and "A1" in report.reasons
    assert report.a2 and report.a3


def test_periodic_solutions_are_distinct_and_admissible():
    sols = {a: periodic_solution(1.0, a, L=20.0, C=2.0) for a in (0.25, 0.5, 0.75)}
    for a, sol in sols.items():
        assert sol.meta["closure_error"] < 1e-6, f"alpha={a}: closure {sol.meta['closure_error']:.3e}"
        assert sol.audit.max_residual < 1e-6
        assert sol.audit.passed, f"alpha={a}: {sol.audit.reasons}"
        i0 = sol.grid.size // 2
        assert np.allclose(sol.p[i0], [-a, a], atol=1e-8)
    alphas = sorted(sols)
    for a, b in zip(alphas, alphas[1:]):
        gap = float(np.max(np.abs(sols[a].p - sols[b].p)))
        assert gap > 0.1, f"alpha {a} vs {b}: sup-distance {gap:.3e}"


def test_periodic_solution_repeats_with_its_period():
    sol = periodic_solution(1.0, 0.5, L=20.0, C=2.0)
    period = sol.meta["period_x"]
    assert 0.0 < period < 20.0
    xs = np.random.default_rng(5).uniform(-20.0, 20.0 - period, size=50)
    diff = np.abs(sol.gradient_at(xs + period) - sol.gradient_at(xs))
    assert diff.max() < 1e-6, f"max |p(x + l) - p(x)| = {diff.max():.3e} at l = {period:.6f}"


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_periodic_solution_is_symmetric_about_the_antidiagonal(alpha):
    # (p1, p2) -> (-p2, -p1) reverses the flow and fixes p(0), so p(-x) = (-p2(x), -p1(x))
    sol = periodic_solution(1.0, alpha, L=20.0, C=2.0)
    mirrored = -sol.p[:, ::-1]
    err = float(np.max(np.abs(sol.p[::-1] - mirrored)))
    assert err < 1e-6, f"alpha={alpha}: reflection mismatch {err:.3e}"


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.2])
def test_periodic_solution_needs_alpha_inside(alpha):
    with pytest.raises(DomainError):
        periodic_solution(1.0, alpha)
