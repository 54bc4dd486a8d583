"""
Construction and auditing of admissible solutions of the two-player HJ system.

- constant_solution: p = (kappa1, kappa2) for constant slopes
- invariant_region: polygon (cooperative) or certified ball (conflicting)
- construct_admissible: limit of Cauchy problems started at x = -nu inside the region
- periodic_solution: periodic p(x) from a closed orbit of the linear example
- kink/quadratic counterexamples for h = 0, and the admissibility audit
- contraction_probe / region_invariance_probe: empirical uniqueness and invariance checks
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from nfg.errors import (
    DomainError,
    InvariantViolation,
    NoConvergence,
    NumericalBreakdown,
    Unsupported,
)
from nfg.game_model import (
    POINTS_PER_UNIT,
    GameSpec,
    Regime,
    RegimeTag,
    classify_regime,
    constant_slope_spec,
    linear_example_spec,
    sample_grid,
    zero_game_spec,
)
from nfg.hj_system import (
    JumpRecord,
    SlopeField,
    delta,
    gradient_field,
    hj_residual,
    jump_admissible,
    reconstruct_values,
    rescaled_field,
)
from nfg.phase_plane import ClosedOrbit, OrbitOptions, integrate_orbit
from nfg.solution import AdmissibilityReport, PiecewiseSolution
from nfg.utils.fitting import exp_rate, ols_fit

log = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12
NU_MAX = 1024
NU_TOL = 1e-8
REGION_MARGIN = 1e-6
BALL_SAFETY = 0.9
BALL_SHRINK_TRIES = 40
BALL_ANGLES = 720
MAX_SLOPE_PAIRS = 2048
DELTA_FLOOR = 1e-6

RESIDUAL_TOL = 1e-6
CONSISTENCY_TOL = 1e-3
GROWTH_TOL = 1.0
OUTER_FRACTION = 0.2


def solution_grid(L: float, points_per_unit: int = POINTS_PER_UNIT) -> np.ndarray:
    """Odd-sized uniform grid on [-L, L]; contains x = 0."""
    half = max(1, int(round(L * points_per_unit)))
    return np.linspace(-L, L, 2 * half + 1)


# ---------- audit ----------


def audit(
    solution: PiecewiseSolution,
    spec: GameSpec,
    residual_tol: float = RESIDUAL_TOL,
    consistency_tol: float = CONSISTENCY_TOL,
    growth_tol: float = GROWTH_TOL,
    outer_fraction: float = OUTER_FRACTION,
) -> AdmissibilityReport:
    """
    A1: HJ residual at both one-sided limits, and u' = p in the trapezoid sense per cell.
    A2: slope of |u| against |x| over the outer part of the grid at most C + growth_tol.
    A3: every recorded jump passes jump_admissible.
    """
    x, u, p, p_left = solution.grid, solution.u, solution.p, solution.p_left
    residual = max(
        float(np.max(np.abs(hj_residual(spec, x, u, p)))),
        float(np.max(np.abs(hj_residual(spec, x, u, p_left)))),
    )

    dx = np.diff(x)[:, None]
    trapezoid = 0.5 * (p[:-1] + p_left[1:]) * dx
    consistency = float(np.max(np.abs(np.diff(u, axis=0) - trapezoid) / dx))

    ax = np.abs(x)
    growth_constant = float(np.max(np.abs(u) / (1.0 + ax[:, None])))
    outer = ax >= (1.0 - outer_fraction) * ax.max()
    slopes = [ols_fit(ax[outer], np.abs(u[outer, i])).slope for i in range(solution.m)]
    growth_slope = float(max(slopes))
    growth_bound = spec.C + growth_tol

    checked = tuple(jump_admissible(spec, j) for j in solution.jumps)
    jumps_ok = tuple(bool(j.admissible) for j in checked)

    report = AdmissibilityReport(
        max_residual=residual,
        consistency_residual=consistency,
        growth_constant=growth_constant,
        growth_slope=growth_slope,
        growth_bound=growth_bound,
        jumps_admissible=jumps_ok,
        a1=residual <= residual_tol and consistency <= consistency_tol,
        a2=growth_slope <= growth_bound,
        a3=all(jumps_ok),
    )
    level = logging.INFO if report.passed else logging.WARNING
    log.log(
        level,
        "[audit] residual=%.3e consistency=%.3e growth_slope=%.4g (bound %.4g) jumps=%s -> %s",
        residual, consistency, growth_slope, growth_bound, jumps_ok,
        "pass" if report.passed else f"FAIL {','.join(report.reasons)}",
    )
    for j in checked:
        if not j.admissible:
            log.warning("[audit] jump at y=%g violates %s", j.y, ", ".join(j.violated))
    return report


def _finish(spec: GameSpec, grid: np.ndarray, p: np.ndarray, meta: dict, jumps=()) -> PiecewiseSolution:
    u = reconstruct_values(spec, grid, p)
    sol = PiecewiseSolution(grid=grid, p=p, u=u, jumps=tuple(jumps), meta=meta)
    return sol.with_audit(audit(sol, spec))


# ---------- exact solutions ----------


def constant_solution(
    kappa1: float,
    kappa2: float,
    L: float = 5.0,
    C: float | None = None,
    points_per_unit: int = POINTS_PER_UNIT,
) -> PiecewiseSolution:
    """p = (kappa1, kappa2), u_i = kappa_i x - kappa1 kappa2 - kappa_i^2/2, for h_i = kappa_i x."""
    spec = constant_slope_spec(kappa1, kappa2, C=C, L=L)
    grid = solution_grid(L, points_per_unit)
    p = np.tile([float(kappa1), float(kappa2)], (grid.size, 1))
    return _finish(spec, grid, p, {"method": "constant", "kappa": [kappa1, kappa2]})


def _zero_solution(spec: GameSpec, points_per_unit: int) -> PiecewiseSolution:
    grid = solution_grid(spec.L, points_per_unit)
    return _finish(spec, grid, np.zeros((grid.size, spec.m)), {"method": "zero-game"})


# ---------- invariant regions ----------


@dataclass(frozen=True)
class InvariantRegion:
    """
    A positively invariant set in the working frame. The working frame is the original one
    after x -> -x (p -> -p, `reflect`) and/or the player swap (`swap`).
    """

    shape: str                                          # polygon | ball
    regime: RegimeTag
    vertices: tuple[tuple[float, float], ...] = ()
    center: tuple[float, float] | None = None
    radius: float | None = None
    reflect: bool = False
    swap: bool = False
    certificate: float | None = None                     # max q.f on the ball boundary (< 0)

    def to_working(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        p = -p if self.reflect else p
        return p[..., ::-1] if self.swap else p

    def from_working(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        p = p[..., ::-1] if self.swap else p
        return -p if self.reflect else p

    def excursion(self, p) -> np.ndarray:
        """Signed distance outside the region (<= 0 inside), working frame."""
        p = np.asarray(p, dtype=float)
        if self.shape == "ball":
            return np.linalg.norm(p - np.asarray(self.center), axis=-1) - self.radius
        top = self.vertices[1][0]
        cut = self.vertices[0][0]
        p1, p2 = p[..., 0], p[..., 1]
        return np.max(
            np.stack(
                [-p1, -p2, p1 - top, p2 - top, (cut - p1 - p2) / math.sqrt(2.0)], axis=-1
            ),
            axis=-1,
        )

    def contains(self, p, margin: float = 0.0) -> np.ndarray:
        return self.excursion(p) <= margin

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n uniform points strictly inside the region (working frame)."""
        if self.shape == "ball":
            r = self.radius * np.sqrt(rng.uniform(0, 1, n)) * (1 - 1e-9)
            th = rng.uniform(0, 2 * np.pi, n)
            return np.asarray(self.center) + np.c_[r * np.cos(th), r * np.sin(th)]
        top = self.vertices[1][0]
        out = np.empty((0, 2))
        while out.shape[0] < n:
            cand = rng.uniform(0, top, size=(2 * n, 2))
            out = np.vstack([out, cand[self.excursion(cand) < 0]])
        return out[:n]

    def describe(self) -> str:
        frame = "".join(f for f, on in ((" reflected", self.reflect), (" swapped", self.swap)) if on)
        if self.shape == "ball":
            c1, c2 = self.center
            return f"ball(center=({c1:.6g}, {c2:.6g}), R={self.radius:.6g}){frame}"
        return f"polygon({', '.join(f'({a:.4g}, {b:.4g})' for a, b in self.vertices)}){frame}"


def cooperative_polygon(C: float) -> tuple[tuple[float, float], ...]:
    lo, hi = 1.0 / (2.0 * C), 2.0 * C
    return ((lo, 0.0), (hi, 0.0), (hi, hi), (0.0, hi), (0.0, lo))


def realized_slope_pairs(slopes: SlopeField, L: float, limit: int = MAX_SLOPE_PAIRS) -> np.ndarray:
    pairs = np.unique(np.round(slopes(sample_grid(L)), 12), axis=0)
    if pairs.shape[0] > limit:
        pairs = pairs[np.linspace(0, pairs.shape[0] - 1, limit).astype(int)]
    return pairs


def ball_certificate(center, radius: float, pairs: np.ndarray, n_angles: int = BALL_ANGLES) -> float:
    """max over boundary points and slope pairs of q . f(center + q); negative means inward."""
    th = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    q = radius * np.c_[np.cos(th), np.sin(th)]
    f = rescaled_field((np.asarray(center) + q)[:, None, :], np.asarray(pairs)[None, :, :])
    return float(np.max(np.einsum("ak,apk->ap", q, f)))


def _normalization(regime: Regime) -> tuple[bool, bool]:
    if regime.tag is RegimeTag.COOPERATIVE_DECREASING:
        return True, False
    if regime.tag is RegimeTag.CONFLICTING and regime.kappa[0] + regime.kappa[1] < 0:
        return True, True
    return False, False


def invariant_region(
    spec: GameSpec,
    regime: Regime | None = None,
    safety: float = BALL_SAFETY,
    max_shrink: int = BALL_SHRINK_TRIES,
) -> InvariantRegion:
    regime = regime or classify_regime(spec)
    reflect, swap = _normalization(regime)

    if regime.tag in (RegimeTag.COOPERATIVE_INCREASING, RegimeTag.COOPERATIVE_DECREASING):
        return InvariantRegion(
            shape="polygon", regime=regime.tag, vertices=cooperative_polygon(spec.C), reflect=reflect
        )
    if regime.tag is not RegimeTag.CONFLICTING:
        raise Unsupported(f"no invariant region known for {regime.describe()}")

    k1, k2 = regime.kappa
    if swap:
        k1, k2 = -k2, -k1
    total = k1 + k2
    if total <= 0:
        raise Unsupported(f"conflicting ball needs kappa_1 + kappa_2 != 0, got {regime.kappa}")

    pairs = realized_slope_pairs(SlopeField.from_spec(spec).normalized(reflect, swap), spec.L)
    radius = safety * math.sqrt(2.0) / 2.0 * total
    for attempt in range(max_shrink):
        cert = ball_certificate((k1, k2), radius, pairs)
        log.debug("[solve] ball R=%.6g certificate=%.3e (try %d)", radius, cert, attempt + 1)
        if cert < 0:
            return InvariantRegion(
                shape="ball",
                regime=regime.tag,
                center=(k1, k2),
                radius=radius,
                reflect=reflect,
                swap=swap,
                certificate=cert,
            )
        radius *= safety
    raise Unsupported(f"no certified invariant ball around {(k1, k2)} after {max_shrink} shrinks")


# ---------- integration in x ----------


def _dpdx(slopes: SlopeField):
    def rhs(x, p):
        return gradient_field(p, slopes(x), eps_sing=0.0)

    return rhs


def _s_time_leg(slopes, p, x, x_end, targets, rtol, atol, s_max=1e3):
    """Cross a low-Delta stretch in s-time; returns (x, p, values at the targets reached)."""

    def rhs(_s, y):
        return np.append(rescaled_field(y[:2], slopes(y[2])), delta(y[:2]))

    def reached(_s, y):
        return y[2] - x_end

    def recovered(_s, y):
        return float(delta(y[:2])) - 10.0 * DELTA_FLOOR

    reached.terminal, reached.direction = True, 1
    recovered.terminal, recovered.direction = True, 1
    sol = solve_ivp(
        rhs, (0.0, s_max), np.append(p, x), method="DOP853", rtol=rtol, atol=atol,
        dense_output=True, events=[reached, recovered],
    )
    if sol.status == -1 or (sol.status == 0 and sol.y[2, -1] < x_end):
        raise NumericalBreakdown("s-time leg stalled near p = 0", sol.y[:, -1])

    x_stop = float(sol.y[2, -1])
    values = []
    for xt in targets:
        if xt > x_stop:
            break
        k = int(np.searchsorted(sol.y[2], xt))
        lo, hi = sol.t[max(k - 1, 0)], sol.t[min(k, sol.t.size - 1)]
        s_star = lo if lo == hi else brentq(lambda s: sol.sol(s)[2] - xt, lo, hi, xtol=1e-14)
        values.append(sol.sol(s_star)[:2])
    return x_stop, sol.y[:2, -1], values


def integrate_in_x(
    slopes: SlopeField,
    p0,
    x0: float,
    x_eval: np.ndarray,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> np.ndarray:
    """p at the increasing points x_eval >= x0 for dp/dx = N/Delta, switching to s-time when Delta is small."""
    rhs = _dpdx(slopes)

    def low_delta(_x, p):
        return float(delta(p)) - DELTA_FLOOR

    low_delta.terminal, low_delta.direction = True, -1

    x_end = float(x_eval[-1])
    out = np.empty((x_eval.size, 2))
    filled = 0
    x, p = float(x0), np.asarray(p0, dtype=float)
    while filled < x_eval.size:
        sol = solve_ivp(
            rhs, (x, x_end), p, method="DOP853", rtol=rtol, atol=atol,
            t_eval=x_eval[filled:], events=[low_delta],
        )
        if sol.status == -1:
            raise NumericalBreakdown(f"x-integration failed: {sol.message}", sol.y[:, -1] if sol.y.size else p)
        k = sol.t.size
        out[filled : filled + k] = sol.y.T
        filled += k
        if not sol.t_events[0].size or filled >= x_eval.size:
            break
        x, p = float(sol.t_events[0][0]), sol.y_events[0][0]
        log.debug("[solve] Delta below %.0e at x=%.6g; switching to s-time", DELTA_FLOOR, x)
        x, p, values = _s_time_leg(slopes, p, x, x_end, x_eval[filled:], rtol, atol)
        for v in values:
            out[filled] = v
            filled += 1
    return out


# ---------- nu-limit construction ----------


def default_nu_schedule(nu_max: float = NU_MAX) -> list[float]:
    out, nu = [], 2.0
    while nu <= nu_max:
        out.append(nu)
        nu *= 2.0
    return out


def _is_zero_game(spec: GameSpec) -> bool:
    return bool(np.all(spec.slopes(sample_grid(spec.L)) == 0.0))


def construct_admissible(
    spec: GameSpec,
    nu_schedule: Sequence[float] | None = None,
    tol: float = NU_TOL,
    *,
    nu_max: float = NU_MAX,
    points_per_unit: int = POINTS_PER_UNIT,
    rtol: float = RTOL,
    atol: float = ATOL,
    region_margin: float = REGION_MARGIN,
) -> PiecewiseSolution:
    """
    For each nu, solve dp/dx = N/Delta on [-nu, L] from the region anchor (the anchor is also
    used left of -nu), restrict to [-L, L], and stop once two consecutive nu >= L agree to tol.
    """
    if spec.m == 2 and _is_zero_game(spec):
        log.info("[solve] zero game: p = 0")
        return _zero_solution(spec, points_per_unit)
    if spec.m != 2 or not spec.has_unit_weights():
        raise Unsupported("the nu-limit construction needs two players with unit weights")

    regime = classify_regime(spec)
    region = invariant_region(spec, regime)
    slopes = SlopeField.from_spec(spec).normalized(region.reflect, region.swap)
    anchor = np.array(region.center if region.shape == "ball" else (1.0, 1.0))
    grid = solution_grid(spec.L, points_per_unit)
    schedule = list(nu_schedule) if nu_schedule is not None else default_nu_schedule(nu_max)
    log.info("[solve] %s, region %s, schedule up to nu=%g", regime.describe(), region.describe(), schedule[-1])

    previous = None
    sup_diff = math.inf
    for nu in schedule:
        p = np.tile(anchor, (grid.size, 1))
        inside = grid >= -nu
        if np.any(inside):
            p[inside] = integrate_in_x(slopes, anchor, -nu, grid[inside], rtol, atol)

        exc = region.excursion(p)
        worst = int(np.argmax(exc))
        if exc[worst] > region_margin:
            raise InvariantViolation(float(grid[worst]), region.from_working(p[worst]), region.describe())

        if nu >= spec.L and previous is not None:
            sup_diff = float(np.max(np.abs(p - previous)))
            log.debug("[solve] nu=%g sup-difference %.3e", nu, sup_diff)
            if sup_diff < tol:
                break
        previous = p if nu >= spec.L else None
    else:
        raise NoConvergence(sup_diff, schedule[-1])

    if region.reflect:
        p = -p[::-1]
    if region.swap:
        p = p[:, ::-1]
    log.info("[solve] converged at nu=%g (sup-difference %.3e)", nu, sup_diff)
    meta = {
        "method": "nu-limit",
        "nu": nu,
        "sup_diff": sup_diff,
        "regime": regime.tag.value,
        "region": region.describe(),
    }
    return _finish(spec, grid, np.ascontiguousarray(p), meta)


# ---------- periodic solutions of the linear example ----------


def periodic_solution(
    kappa: float,
    alpha: float,
    L: float = 20.0,
    C: float | None = None,
    points_per_unit: int = POINTS_PER_UNIT,
    closure_tol: float = 1e-6,
) -> PiecewiseSolution:
    """Periodic p(x) from the closed orbit through (-alpha, alpha) for h1 = -kappa x, h2 = kappa x."""
    if not 0 < alpha < kappa:
        raise DomainError(f"need 0 < alpha < kappa, got alpha={alpha}, kappa={kappa}")
    spec = linear_example_spec(kappa, C=C, L=L)
    p0 = np.array([-alpha, alpha])

    orbit = integrate_orbit((-kappa, kappa), p0, options=OrbitOptions(closed_orbit=True, closure_tol=closure_tol))
    loop = orbit.forward
    if not isinstance(loop, ClosedOrbit):
        raise NumericalBreakdown(f"orbit through {tuple(p0)} ended as {loop and loop.tag}", p0)
    period = loop.period_x

    slopes = SlopeField.frozen(-kappa, kappa)
    sol = solve_ivp(
        _dpdx(slopes), (0.0, period), p0, method="DOP853", rtol=RTOL, atol=ATOL, dense_output=True
    )
    if sol.status != 0:
        raise NumericalBreakdown(f"periodic profile failed: {sol.message}", sol.y[:, -1])

    grid = solution_grid(L, points_per_unit)
    p = sol.sol(np.mod(grid, period)).T
    log.info("[solve] periodic solution kappa=%g alpha=%g period=%.6g", kappa, alpha, period)
    meta = {
        "method": "periodic",
        "kappa": kappa,
        "alpha": alpha,
        "period_x": period,
        "period_s": loop.period_s,
        "closure_error": loop.closure_error,
    }
    return _finish(spec, grid, p, meta)


# ---------- inadmissible candidates for h = 0 ----------


def kink_counterexample(L: float = 5.0, points_per_unit: int = POINTS_PER_UNIT) -> tuple[GameSpec, PiecewiseSolution]:
    """u1 = -(1 - |x|)^2/2 on |x| < 1, else 0; u2 = 0. The jump at 0 has the drifts pointing inward."""
    spec = zero_game_spec(C=1.0, L=L)
    grid = solution_grid(L, points_per_unit)
    inner = np.abs(grid) < 1.0
    p = np.zeros((grid.size, 2))
    p[inner, 0] = np.sign(grid[inner]) * (1.0 - np.abs(grid[inner]))
    p[grid == 0.0, 0] = 1.0
    jump = JumpRecord(y=0.0, p_minus=(-1.0, 0.0), p_plus=(1.0, 0.0))
    return spec, _finish(spec, grid, p, {"method": "kink-counterexample"}, jumps=(jump,))


def quadratic_counterexample(L: float = 5.0, points_per_unit: int = POINTS_PER_UNIT) -> tuple[GameSpec, PiecewiseSolution]:
    """u1 = -x^2/2, u2 = 0: solves the system but grows quadratically."""
    spec = zero_game_spec(C=1.0, L=L)
    grid = solution_grid(L, points_per_unit)
    p = np.c_[-grid, np.zeros_like(grid)]
    return spec, _finish(spec, grid, p, {"method": "quadratic-counterexample"})


# ---------- probes ----------


@dataclass(frozen=True, eq=False)
class ContractionReport:
    s: np.ndarray
    gap: np.ndarray
    rate: float              # fitted K in |w(s)| ~ |w(0)| exp(-K s)
    initial_gap: float
    final_gap: float

    @property
    def contracts(self) -> bool:
        return self.rate > 0 and self.final_gap < self.initial_gap


def contraction_probe(
    spec: GameSpec,
    anchors: tuple[Sequence[float], Sequence[float]] | None = None,
    s_max: float = 20.0,
    n_samples: int = 401,
    floor: float = 1e-9,
) -> ContractionReport:
    """
    Two solutions on a common x: p follows the rescaled field, q is slaved to the same x(s),
    dq/ds = N(q) Delta(p)/Delta(q). Anchors default to two points inside the invariant region
    (working frame).
    """
    region = invariant_region(spec)
    slopes = SlopeField.from_spec(spec).normalized(region.reflect, region.swap)
    if anchors is None:
        if region.shape == "ball":
            c, r = np.asarray(region.center), 0.5 * region.radius
            anchors = (c + (r, 0.0), c - (0.0, r))
        else:
            anchors = ((1.0, 1.0), (1.5 * spec.C, 0.5))
    a, b = (np.asarray(v, dtype=float) for v in anchors)

    def rhs(_s, y):
        p, q, x = y[:2], y[2:4], y[4]
        s = slopes(x)
        dp = delta(p)
        return np.concatenate([rescaled_field(p, s), rescaled_field(q, s) * dp / delta(q), [dp]])

    t = np.linspace(0.0, s_max, n_samples)
    sol = solve_ivp(
        rhs, (0.0, s_max), np.concatenate([a, b, [-spec.L]]), method="DOP853",
        rtol=1e-12, atol=1e-14, t_eval=t,
    )
    if sol.status != 0:
        raise NumericalBreakdown(f"contraction probe failed: {sol.message}", sol.y[:, -1])
    gap = np.linalg.norm(sol.y[:2] - sol.y[2:4], axis=0)
    keep = gap > floor
    rate = -exp_rate(sol.t[keep], gap[keep]).slope if keep.sum() >= 3 else math.inf
    report = ContractionReport(s=sol.t, gap=gap, rate=float(rate), initial_gap=float(gap[0]), final_gap=float(gap[-1]))
    log.info("[probe] contraction K=%.4g gap %.3e -> %.3e", report.rate, report.initial_gap, report.final_gap)
    return report


@dataclass(frozen=True)
class InvarianceReport:
    n_starts: int
    n_escaped: int
    worst_excursion: float
    witness: tuple[float, float] | None

    @property
    def passed(self) -> bool:
        return self.n_escaped == 0


def box_slope_sampler(C: float) -> Callable[[np.random.Generator], np.ndarray]:
    """Frozen slopes uniform in [1/C, C]^2."""
    return lambda rng: rng.uniform(1.0 / C, C, size=2)


def realized_slope_sampler(spec: GameSpec, region: InvariantRegion) -> Callable[[np.random.Generator], np.ndarray]:
    """Frozen slopes h'(x*) at a random point of the check grid, in the working frame."""
    pairs = realized_slope_pairs(SlopeField.from_spec(spec).normalized(region.reflect, region.swap), spec.L)
    return lambda rng: pairs[rng.integers(pairs.shape[0])]


def region_invariance_probe(
    region: InvariantRegion,
    slope_sampler: Callable[[np.random.Generator], np.ndarray],
    n_starts: int = 100,
    s_max: float = 50.0,
    seed: int = 0,
    margin: float = REGION_MARGIN,
) -> InvarianceReport:
    """Random starts inside the region, each under its own frozen slopes, integrated forward in s."""
    rng = np.random.default_rng(seed)
    starts = region.sample(rng, n_starts)
    worst, witness, escaped = -math.inf, None, 0
    for p0 in starts:
        s = np.asarray(slope_sampler(rng), dtype=float)
        sol = solve_ivp(
            lambda _t, p, s=s: rescaled_field(p, s), (0.0, s_max), p0, method="DOP853",
            rtol=RTOL, atol=ATOL, dense_output=True,
        )
        ys = sol.sol(np.linspace(0.0, sol.t[-1], 1001)).T
        exc = region.excursion(np.vstack([sol.y.T, ys]))
        k = int(np.argmax(exc))
        if exc[k] > worst:
            worst = float(exc[k])
            witness = tuple(float(v) for v in p0)
        if exc[k] > margin:
            escaped += 1
    log.info("[probe] invariance of %s: %d/%d escaped, worst %.3e", region.describe(), escaped, n_starts, worst)
    return InvarianceReport(n_starts=n_starts, n_escaped=escaped, worst_excursion=worst, witness=witness)
