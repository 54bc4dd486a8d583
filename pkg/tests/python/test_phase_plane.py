import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfg.errors import DomainError, OrbitNotClosed, OriginError
from nfg.game_model import RegimeTag
from nfg.phase_plane import (
    SADDLE,
    STABLE_FOCUS,
    STABLE_NODE,
    BlowUp,
    ClosedOrbit,
    Converged,
    OrbitOptions,
    RegionTag,
    classify_point,
    eigen_bounds,
    find_equilibria,
    integrate_orbit,
    linearize,
    portrait_starts,
    saddle_manifold,
    sample_portrait,
    stability_label,
    x_window,
)


def test_stability_labels():
    assert stability_label([[1.0, 0.0], [0.0, -1.0]]) == SADDLE
    assert stability_label([[-3.0, 1.0], [2.0, -3.0]]) == STABLE_NODE
    assert stability_label([[-1.0, -1.0], [2.0, -1.0]]) == STABLE_FOCUS


@pytest.mark.parametrize("kappa", [(1.0, 2.0), (-1.0, 2.0), (2.0, 0.5)])
def test_constant_slopes_and_origin_are_equilibria(kappa):
    eqs = {e.point: e for e in find_equilibria(*kappa)}
    assert (0.0, 0.0) in eqs, list(eqs)
    assert eqs[(0.0, 0.0)].stability == SADDLE
    match = [p for p in eqs if np.allclose(p, kappa, atol=1e-10)]
    assert match, f"kappa={kappa} missing from {list(eqs)}"


def test_zero_slopes_give_double_origin():
    (eq,) = find_equilibria(0.0, 0.0)
    assert eq.point == (0.0, 0.0) and eq.multiplicity == 2


def test_constant_slope_point_is_stable():
    assert linearize(1.0, 2.0, (1.0, 2.0)).stability == STABLE_NODE
    assert linearize(-1.0, 2.0, (-1.0, 2.0)).stability == STABLE_FOCUS


def test_origin_eigenvalues():
    lin = linearize(1.0, 2.0)
    assert np.allclose(lin.eigenvalues, [math.sqrt(3.0), -math.sqrt(3.0)])
    for j in range(2):
        v = lin.eigenvectors[:, j]
        assert np.allclose(lin.jacobian @ v, lin.eigenvalues[j] * v)
        assert v[0] >= 0 and np.linalg.norm(v) == pytest.approx(1.0)


def test_linearize_rejects_non_equilibrium():
    with pytest.raises(DomainError):
        linearize(1.0, 2.0, (1.0, 1.0))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_cooperative_eigen_bounds(k1, k2):
    assert eigen_bounds("cooperative", C=2.0).holds(linearize(k1, k2))


@settings(max_examples=100, deadline=None)
@given(st.floats(-3.0, -0.05), st.floats(0.05, 3.0))
def test_conflicting_eigen_bounds(k1, k2):
    assert eigen_bounds("conflicting", kappa=(k1, k2)).holds(linearize(k1, k2))


def test_eigen_bounds_domains():
    with pytest.raises(DomainError):
        eigen_bounds("cooperative", C=0.5)
    with pytest.raises(DomainError):
        eigen_bounds("conflicting", kappa=(1.0, 2.0))


@pytest.mark.parametrize(
    ("p", "tag"),
    [
        ((-1.0, -1.0), RegionTag.A),
        ((1.0, -1.0), RegionTag.B),
        ((-0.5, 3.0), RegionTag.C1),
        ((-0.5, 0.5), RegionTag.C2),
        ((0.5, 0.5), RegionTag.E),
        ((3.0, 3.0), RegionTag.D),
        ((1.0, 2.0), RegionTag.F),
    ],
)
def test_cooperative_regions(p, tag):
    label = classify_point("cooperative", (1.0, 2.0), p)
    assert label.tag is tag, label


def test_cooperative_swap_and_reflection():
    label = classify_point(RegimeTag.COOPERATIVE_INCREASING, (2.0, 1.0), (2.0, 1.0))
    assert label.swapped and label.tag is RegionTag.F
    label = classify_point("cooperative", (-1.0, -2.0), (1.0, 1.0))
    assert label.reflected and label.tag is RegionTag.A


@pytest.mark.parametrize(
    ("p", "tag"),
    [
        ((-1.0, 2.0), RegionTag.QUADRANT_MP),
        ((1.0, -2.0), RegionTag.XI1),
        ((2.0, -1.0), RegionTag.XI2),
        ((-1.0, -1.0), RegionTag.QUADRANT_MM),
        ((1.0, 1.0), RegionTag.QUADRANT_PP),
    ],
)
def test_conflicting_regions(p, tag):
    label = classify_point("conflicting", (-1.0, 2.0), p, delta=0.01)
    assert label.tag is tag, label
    assert label.approximate


def test_conflicting_saddle_sectors():
    lin = linearize(-1.0, 2.0)
    v_u, v_s = lin.eigenvectors[:, 0], lin.eigenvectors[:, 1]
    assert classify_point("conflicting", (-1.0, 2.0), 0.01 * v_s).tag is RegionTag.S1
    assert classify_point("conflicting", (-1.0, 2.0), 0.01 * v_u).tag is RegionTag.S2
    assert classify_point("conflicting", (-1.0, 2.0), -0.01 * v_s).tag is RegionTag.S3
    assert classify_point("conflicting", (-1.0, 2.0), -0.01 * v_u).tag is RegionTag.S4


def test_conflicting_mirror():
    label = classify_point("conflicting", (-2.0, 1.0), (-2.0, 1.0))
    assert label.reflected and label.swapped
    assert label.tag is RegionTag.QUADRANT_MP


def test_origin_has_no_region():
    with pytest.raises(OriginError):
        classify_point("cooperative", (1.0, 2.0), (0.0, 0.0))
    with pytest.raises(DomainError):
        classify_point(RegimeTag.GENERAL, (1.0, 2.0), (1.0, 1.0))


def test_orbit_at_equilibrium_returns_at_once():
    orbit = integrate_orbit((1.0, 2.0), (1.0, 2.0))
    assert isinstance(orbit.termination, Converged)
    assert orbit.s.size == 1


def test_orbit_converges_to_stable_node():
    orbit = integrate_orbit((1.0, 2.0), (1.0, 1.5), direction="forward")
    term = orbit.forward
    assert isinstance(term, Converged), term
    assert np.allclose(term.limit, (1.0, 2.0), atol=1e-8)
    assert np.all(np.diff(orbit.x) > 0), "x must increase with s"
    assert x_window(orbit).upper == "infinite"


def test_region_a_blows_up_forward():
    rng = np.random.default_rng(0)
    for p0 in rng.uniform(-3.0, -0.1, size=(20, 2)):
        orbit = integrate_orbit((1.0, 2.0), p0, direction="forward")
        term = orbit.forward
        assert isinstance(term, BlowUp), f"p0={p0}: {term}"
        assert -1.2 <= term.exponent <= -0.8, f"p0={p0}: exponent {term.exponent:.3f}"
        assert x_window(orbit).upper == "infinite"


def test_xi1_blows_up_forward():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p1 = rng.uniform(0.3, 2.0)
        p2 = rng.uniform(-3.0, -p1 - 0.1)
        orbit = integrate_orbit((-1.0, 2.0), (p1, p2), direction="forward")
        assert classify_point("conflicting", (-1.0, 2.0), (p1, p2)).tag is RegionTag.XI1
        term = orbit.forward
        assert isinstance(term, BlowUp), f"p0=({p1}, {p2}): {term}"
        assert -1.2 <= term.exponent <= -0.8, f"exponent {term.exponent:.3f}"


@pytest.mark.parametrize(
    ("kappa", "p0"),
    [
        ((1.0, 2.0), (1.0, -1.0)),
        ((1.0, 2.0), (-0.5, 3.0)),
        ((1.0, 2.0), (-0.5, 0.5)),
        ((-1.0, 2.0), (1.0, 1.0)),
        ((-1.0, 2.0), (0.5, 2.0)),
    ],
)
def test_unstable_regions_blow_up_backward(kappa, p0):
    orbit = integrate_orbit(kappa, p0, direction="backward")
    term = orbit.backward
    assert isinstance(term, BlowUp), f"kappa={kappa} p0={p0}: {term}"
    assert -1.2 <= term.exponent <= -0.8, f"kappa={kappa} p0={p0}: exponent {term.exponent:.3f}"
    window = x_window(orbit)
    assert window.lower == "infinite", f"kappa={kappa} p0={p0}: lower end {window.lower}"
    assert window.lower_limit == -math.inf


def _region_starts(region: str, rng, n: int = 50) -> np.ndarray:
    lo, hi = 0.05, 3.0
    a, b = rng.uniform(lo, hi, size=n), rng.uniform(lo, hi, size=n)
    if region == "A":
        return np.c_[-a, -b]
    if region == "positive quadrant":
        return np.c_[a, b]
    if region == "B":
        return np.c_[a, -b]
    if region == "C":
        return np.c_[-a, b]
    if region == "Xi1":
        return np.c_[b - a - lo, -b]
    return np.c_[b + a, -b]      # Xi2


# region -> (slopes, invariant direction, membership test up to tol)
INVARIANT_REGIONS = {
    "A": ((1.0, 2.0), "forward", lambda p, tol: (p[:, 0] <= tol) & (p[:, 1] <= tol)),
    "positive quadrant": ((1.0, 2.0), "forward", lambda p, tol: (p[:, 0] >= -tol) & (p[:, 1] >= -tol)),
    "B": ((1.0, 2.0), "backward", lambda p, tol: (p[:, 0] >= -tol) & (p[:, 1] <= tol)),
    "C": ((1.0, 2.0), "backward", lambda p, tol: (p[:, 0] <= tol) & (p[:, 1] >= -tol)),
    "Xi1": ((-1.0, 2.0), "forward", lambda p, tol: (p[:, 1] <= tol) & (p.sum(axis=1) <= tol)),
    "Xi2": ((-1.0, 2.0), "backward", lambda p, tol: (p[:, 1] <= tol) & (p.sum(axis=1) >= -tol)),
}


@pytest.mark.parametrize("region", list(INVARIANT_REGIONS))
def test_region_invariance(region):
    kappa, direction, inside = INVARIANT_REGIONS[region]
    options = OrbitOptions(s_max=20.0, closed_orbit=False)
    rng = np.random.default_rng(7)
    starts = _region_starts(region, rng)
    assert inside(starts, 0.0).all(), f"{region}: a start fell outside the region"
    for p0 in starts:
        orbit = integrate_orbit(kappa, p0, direction=direction, options=options)
        tol = 1e-9 * np.maximum(1.0, np.linalg.norm(orbit.p, axis=1))
        ok = inside(orbit.p, tol)
        bad = int(np.argmin(ok))
        assert ok.all(), f"{region} from p0={p0}: left at p={orbit.p[bad]}, s={orbit.s[bad]:.4g}"


def test_linear_example_closed_orbit():
    orbit = integrate_orbit((-1.0, 1.0), (-0.5, 0.5), options=OrbitOptions(closed_orbit=True))
    term = orbit.forward
    assert isinstance(term, ClosedOrbit), term
    assert term.closure_error < 1e-6
    assert term.period_x > 0 and term.period_s > 0
    window = x_window(orbit)
    assert window.globally_defined and window.period_x == term.period_x


def test_closed_orbit_found_without_asking():
    orbit = integrate_orbit((-1.0, 1.0), (-0.5, 0.5))
    term = orbit.forward
    assert isinstance(term, ClosedOrbit), term
    assert term.closure_error < 1e-6
    requested = integrate_orbit((-1.0, 1.0), (-0.5, 0.5), options=OrbitOptions(closed_orbit=True)).forward
    assert term.period_x == pytest.approx(requested.period_x, rel=1e-9)


def test_closed_orbit_search_can_be_disabled():
    orbit = integrate_orbit((-1.0, 1.0), (-0.5, 0.5), options=OrbitOptions(closed_orbit=False))
    assert orbit.forward.tag == "LeftWindow", orbit.forward


def test_requested_closed_orbit_fails_off_the_loop():
    with pytest.raises(OrbitNotClosed):
        integrate_orbit((1.0, 2.0), (1.0, 1.5), options=OrbitOptions(closed_orbit=True, s_max=20.0))


def test_unstable_saddle_branch_has_finite_origin_end():
    orbit = saddle_manifold(1.0, 2.0, branch="unstable", side=1, x0=0.0)
    assert isinstance(orbit.backward, Converged) and orbit.backward.limit == (0.0, 0.0)
    assert orbit.backward.x_limit < 0.0
    window = x_window(orbit)
    assert window.lower_finite and window.lower_limit == orbit.backward.x_limit


def test_orbit_argument_checks():
    with pytest.raises(DomainError):
        integrate_orbit((1.0, 2.0), (1.0, 1.0), direction="sideways")
    with pytest.raises(DomainError):
        integrate_orbit((1.0, 2.0), (1.0, np.nan))
    with pytest.raises(DomainError):
        saddle_manifold(1.0, 2.0, branch="middle")


def test_portrait_is_ordered_and_deterministic():
    starts = portrait_starts(3.0, 5, seed=0)
    assert starts.shape == (25, 2)
    a = sample_portrait((1.0, 2.0), box=3.0, n=5, seed=0, workers=1)
    b = sample_portrait((1.0, 2.0), box=3.0, n=5, seed=0, workers=2)
    assert [pt.index for pt in a] == list(range(len(a)))
    assert [(pt.tag, pt.p0) for pt in a] == [(pt.tag, pt.p0) for pt in b]
    assert {pt.tag for pt in a} <= {"Converged", "BlowUp", "LeftWindow", "ClosedOrbit"}
    assert any(pt.tag == "BlowUp" for pt in a)
