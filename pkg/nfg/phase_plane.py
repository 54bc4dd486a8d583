"""
Phase-plane analysis of the rescaled two-player system

    dp/ds = N(p; h'(x)),      dx/ds = Delta(p),

for constant slopes (frozen kappa) or slopes evaluated along the orbit through x(s).
Equilibria, linearization, region labels, orbit integration with blow-up/decay
diagnostics, the x-window an orbit sweeps and batch portraits.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import ClassVar, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

from nfg.errors import DomainError, NumericalBreakdown, OrbitNotClosed, OriginError
from nfg.game_model import GameSpec, Regime, RegimeTag
from nfg.hj_system import SlopeField, delta, jacobian, rescaled_field
from nfg.utils.fitting import exp_rate, loglog_slope, ols_fit

log = logging.getLogger(__name__)

EQUILIBRIUM_TOL = 1e-8
ROOT_IMAG_TOL = 1e-6
CLUSTER_TOL = 1e-6
SECTOR_RADIUS_FACTOR = 0.1


# ---------- stability labels ----------

SADDLE = "saddle"
CENTER = "center"
STABLE_NODE = "stable node"
STABLE_FOCUS = "stable focus"
STABLE_DEGENERATE = "stable degenerate"
UNSTABLE_NODE = "unstable node"
UNSTABLE_FOCUS = "unstable focus"
UNSTABLE_DEGENERATE = "unstable degenerate"
DEGENERATE = "degenerate"


def stability_label(jac: np.ndarray) -> str:
    """Fixed-point type from trace and determinant of a 2x2 Jacobian."""
    (a, b), (c, d) = np.asarray(jac, dtype=float)
    tr = a + d
    det = a * d - b * c
    if det < 0:
        return SADDLE
    if det == 0:
        return DEGENERATE
    disc = tr * tr - 4 * det
    if tr == 0:
        return CENTER
    if tr > 0:
        return UNSTABLE_FOCUS if disc < 0 else UNSTABLE_NODE if disc > 0 else UNSTABLE_DEGENERATE
    return STABLE_FOCUS if disc < 0 else STABLE_NODE if disc > 0 else STABLE_DEGENERATE


# ---------- equilibria ----------


@dataclass(frozen=True)
class Equilibrium:
    point: tuple[float, float]
    multiplicity: int
    stability: str


def _field_at(p: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    return rescaled_field(p, kappa)


def _newton_polish(p: np.ndarray, kappa: np.ndarray, iters: int = 50) -> np.ndarray:
    p = np.asarray(p, dtype=float).copy()
    for _ in range(iters):
        step, *_ = np.linalg.lstsq(jacobian(p, kappa), _field_at(p, kappa), rcond=None)
        p -= step
        if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(p)):
            break
    return p


def _resultant_candidates(k1: float, k2: float) -> list[tuple[float, float]]:
    """Real roots of the eliminant in p1 (k1 != 0), each with p2 = b(p1)/k1."""
    b = Polynomial([0.0, -(k1 - k2), 1.0])
    eliminant = -b * b + (k2 - k1) * k1 * b + Polynomial([0.0, k2 * k1 * k1])
    out = []
    for r in eliminant.roots():
        if abs(r.imag) <= ROOT_IMAG_TOL * max(1.0, abs(r.real)):
            p1 = float(r.real)
            out.append((p1, float(b(p1)) / k1))
    return out


def find_equilibria(kappa1: float, kappa2: float) -> list[Equilibrium]:
    """All real equilibria of the frozen-slope rescaled field, sorted by (p1, p2)."""
    k = np.array([kappa1, kappa2], dtype=float)
    if kappa1 == 0 and kappa2 == 0:
        return [Equilibrium((0.0, 0.0), 2, stability_label(jacobian((0, 0), k)))]

    if abs(kappa1) >= abs(kappa2):
        candidates = _resultant_candidates(kappa1, kappa2)
    else:
        candidates = [(b, a) for a, b in _resultant_candidates(kappa2, kappa1)]

    polished = [_newton_polish(np.array(c), k) for c in candidates]
    clusters: list[list[np.ndarray]] = []
    for q in polished:
        for group in clusters:
            if np.linalg.norm(group[0] - q) <= CLUSTER_TOL * max(1.0, np.linalg.norm(q)):
                group.append(q)
                break
        else:
            clusters.append([q])

    out = []
    for group in clusters:
        q = np.mean(group, axis=0)
        q[np.abs(q) < 1e-14] = 0.0
        out.append(Equilibrium((float(q[0]), float(q[1])), len(group), stability_label(jacobian(q, k))))
    out.sort(key=lambda e: e.point)
    log.debug("[phase] equilibria for kappa=(%g, %g): %s", kappa1, kappa2, [e.point for e in out])
    return out


# ---------- linearization ----------


@dataclass(frozen=True, eq=False)
class Linearization:
    point: tuple[float, float]
    jacobian: np.ndarray
    eigenvalues: np.ndarray       # sorted by decreasing real part
    eigenvectors: np.ndarray      # unit columns, first component >= 0
    tan_angles: tuple[float, float]
    stability: str


def linearize(kappa1: float, kappa2: float, point=(0.0, 0.0)) -> Linearization:
    k = np.array([kappa1, kappa2], dtype=float)
    p = np.asarray(point, dtype=float)
    residual = float(np.linalg.norm(_field_at(p, k)))
    if residual > EQUILIBRIUM_TOL * max(1.0, float(p @ p)):
        raise DomainError(f"p={tuple(p)} is not an equilibrium (|N(p)|={residual:.3e})")

    jac = jacobian(p, k)
    w, v = np.linalg.eig(jac)
    order = np.argsort(-w.real, kind="stable")
    w, v = w[order], v[:, order]
    if np.all(np.abs(w.imag) == 0):
        w, v = w.real, v.real
    for j in range(2):
        col = v[:, j]
        lead = col[0] if abs(col[0]) > 1e-15 else col[1]
        v[:, j] = col * (np.sign(lead.real) or 1.0) / np.linalg.norm(col)
    tans = tuple(
        float(v[1, j].real / v[0, j].real) if abs(v[0, j]) > 1e-15 else math.inf for j in range(2)
    )
    return Linearization(
        point=(float(p[0]), float(p[1])),
        jacobian=jac,
        eigenvalues=w,
        eigenvectors=v,
        tan_angles=tans,
        stability=stability_label(jac),
    )


@dataclass(frozen=True)
class EigenBounds:
    modulus_lo: float
    modulus_hi: float
    tan_lo: float | None = None      # bounds on |tan alpha| of the eigen-directions
    tan_hi: float | None = None

    def holds(self, lin: Linearization, slack: float = 1e-12) -> bool:
        mods = np.abs(lin.eigenvalues)
        ok = bool(np.all(mods >= self.modulus_lo - slack) and np.all(mods <= self.modulus_hi + slack))
        if self.tan_lo is not None:
            tans = np.abs(np.asarray(lin.tan_angles))
            ok = ok and bool(np.all(tans >= self.tan_lo - slack) and np.all(tans <= self.tan_hi + slack))
        return ok


def eigen_bounds(kind: str, C: float | None = None, kappa: tuple[float, float] | None = None) -> EigenBounds:
    """
    Bounds on the origin eigenvalues of the frozen-slope field.

    cooperative (1/C <= kappa_i <= C): modulus in [sqrt(3/(4C^2)), sqrt(2C^2 - 1/C^2)] and
    |tan alpha| in [(1/C)(sqrt(d^2 + 1/C^2) - d), C(sqrt(d^2 + C^2) + d)], d = C - 1/C.
    conflicting (kappa_1 < 0 < kappa_2): modulus in [(sqrt2/2)(k2 - k1), k2 - k1].
    """
    if kind == "cooperative":
        if C is None or C < 1:
            raise DomainError(f"cooperative bounds need C >= 1, got {C}")
        d = C - 1.0 / C
        return EigenBounds(
            modulus_lo=math.sqrt(3.0 / (4.0 * C * C)),
            modulus_hi=math.sqrt(2.0 * C * C - 1.0 / (C * C)),
            tan_lo=(1.0 / C) * (math.sqrt(d * d + 1.0 / (C * C)) - d),
            tan_hi=C * (math.sqrt(d * d + C * C) + d),
        )
    if kind == "conflicting":
        if kappa is None or not kappa[0] < 0 < kappa[1]:
            raise DomainError(f"conflicting bounds need kappa_1 < 0 < kappa_2, got {kappa}")
        spread = kappa[1] - kappa[0]
        return EigenBounds(modulus_lo=math.sqrt(2.0) / 2.0 * spread, modulus_hi=spread)
    raise DomainError(f"unknown bound family {kind!r}")


# ---------- region labels ----------


class RegionTag(str, Enum):
    A = "A"
    B = "B"
    C1 = "C1"
    C2 = "C2"
    D = "D"
    E = "E"
    F = "F"
    XI1 = "Xi1"
    XI2 = "Xi2"
    QUADRANT_PP = "Quadrant++"
    QUADRANT_MM = "Quadrant--"
    QUADRANT_MP = "Quadrant-+"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


@dataclass(frozen=True)
class RegionLabel:
    tag: RegionTag
    regime: str                    # cooperative | conflicting
    swapped: bool = False          # players exchanged to get kappa_1 <= kappa_2
    reflected: bool = False        # p -> -p (cooperative) or p -> (-p2, -p1) (conflicting)
    approximate: bool = False      # slopes only approximately constant
    delta: float = 0.0


def _regime_kind(regime) -> str:
    if isinstance(regime, Regime):
        regime = regime.tag
    if isinstance(regime, RegimeTag):
        if regime in (RegimeTag.COOPERATIVE_INCREASING, RegimeTag.COOPERATIVE_DECREASING):
            return "cooperative"
        if regime in (RegimeTag.CONFLICTING, RegimeTag.LINEAR_EXAMPLE):
            return "conflicting"
        raise DomainError(f"no region taxonomy for regime {regime.value}")
    if regime in ("cooperative", "conflicting"):
        return regime
    raise DomainError(f"unknown regime {regime!r}")


def _cooperative_tag(p1: float, p2: float, k1: float, k2: float) -> RegionTag:
    if p1 <= 0 and p2 <= 0:
        return RegionTag.A
    if p1 > 0 and p2 < 0:
        return RegionTag.B
    if p1 < 0:
        return RegionTag.C1 if p2 > k2 - k1 else RegionTag.C2
    total = p1 + p2
    if total <= 2 * k1:
        return RegionTag.E
    if total >= 2 * k2:
        return RegionTag.D
    return RegionTag.F


def _sector_tag(p: np.ndarray, k1: float, k2: float) -> RegionTag | None:
    radius = SECTOR_RADIUS_FACTOR * math.hypot(k1, k2)
    if np.linalg.norm(p) > radius:
        return None
    lin = linearize(k1, k2)
    v_u, v_s = lin.eigenvectors[:, 0].real, lin.eigenvectors[:, 1].real
    between = math.acos(min(1.0, abs(float(v_u @ v_s))))
    half_width = between / 4.0
    u = p / np.linalg.norm(p)
    for tag, direction in (
        (RegionTag.S1, v_s),
        (RegionTag.S2, v_u),
        (RegionTag.S3, -v_s),
        (RegionTag.S4, -v_u),
    ):
        if math.acos(max(-1.0, min(1.0, float(u @ direction)))) <= half_width:
            return tag
    return None


def _conflicting_tag(p: np.ndarray, k1: float, k2: float) -> RegionTag:
    sector = _sector_tag(p, k1, k2)
    if sector is not None:
        return sector
    p1, p2 = p
    if p2 < 0:
        if p1 < 0:
            return RegionTag.QUADRANT_MM
        return RegionTag.XI1 if p1 + p2 <= 0 else RegionTag.XI2
    if p1 >= 0:
        return RegionTag.QUADRANT_PP
    return RegionTag.QUADRANT_MP


def classify_point(regime, kappa: tuple[float, float], p, delta: float = 0.0) -> RegionLabel:
    """
    Region of p for the frozen slopes kappa. Cooperative games with kappa_1 > kappa_2 are
    labelled in swapped coordinates, decreasing ones after p -> -p; conflicting games with
    kappa_1 + kappa_2 < 0 after p -> (-p2, -p1), which also reverses the direction of s.
    """
    kind = _regime_kind(regime)
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise OriginError()
    k1, k2 = float(kappa[0]), float(kappa[1])
    swapped = reflected = False

    if kind == "cooperative":
        if k1 < 0 and k2 < 0:
            k1, k2, p = -k1, -k2, -p
            reflected = True
        if k1 > k2:
            k1, k2, p = k2, k1, p[::-1]
            swapped = True
        if not 0 < k1 <= k2:
            raise DomainError(f"cooperative labels need slopes of one sign, got {tuple(kappa)}")
        tag = _cooperative_tag(float(p[0]), float(p[1]), k1, k2)
    else:
        if k1 + k2 < 0:
            k1, k2, p = -k2, -k1, -p[::-1]
            reflected = swapped = True
        if not k1 < 0 < k2:
            raise DomainError(f"conflicting labels need kappa_1 < 0 < kappa_2, got ({k1}, {k2})")
        tag = _conflicting_tag(p, k1, k2)

    return RegionLabel(
        tag=tag, regime=kind, swapped=swapped, reflected=reflected, approximate=delta > 0, delta=delta
    )


# ---------- orbits ----------


@dataclass(frozen=True)
class Converged:
    limit: tuple[float, float]
    x_limit: float | None = None       # known x limit when the approach is to the origin
    tag: ClassVar[str] = "Converged"


@dataclass(frozen=True)
class BlowUp:
    s0: float
    eta: float
    exponent: float
    tag: ClassVar[str] = "BlowUp"


@dataclass(frozen=True)
class LeftWindow:
    s_end: float
    tag: ClassVar[str] = "LeftWindow"


@dataclass(frozen=True)
class ClosedOrbit:
    period_s: float
    period_x: float
    closure_error: float
    tag: ClassVar[str] = "ClosedOrbit"


Termination = Union[Converged, BlowUp, LeftWindow, ClosedOrbit]


@dataclass(frozen=True)
class OrbitOptions:
    s_max: float = 200.0
    blowup_threshold: float = 1e6
    converge_tol: float = 1e-12
    settle_tol: float = 1e-6          # |N| at s_max still counted as convergence (then polished)
    rtol: float = 1e-10
    atol: float = 1e-12
    closed_orbit: bool | None = None  # None: search the return map after a LeftWindow leg
    closure_tol: float = 1e-6
    fit_points: int = 64


@dataclass(frozen=True, eq=False)
class Orbit:
    s: np.ndarray
    p: np.ndarray                 # (n, 2)
    x: np.ndarray
    forward: Termination | None = None
    backward: Termination | None = None
    slopes: SlopeField | None = field(default=None, repr=False)

    @property
    def termination(self) -> Termination | None:
        return self.forward if self.forward is not None else self.backward

    @property
    def delta(self) -> np.ndarray:
        return delta(self.p)


def _as_field(source) -> SlopeField:
    if isinstance(source, SlopeField):
        return source
    if isinstance(source, GameSpec):
        return SlopeField.from_spec(source)
    k1, k2 = source
    return SlopeField.frozen(k1, k2)


def _planar_rhs(slopes: SlopeField):
    if slopes.is_constant:
        kappa = np.asarray(slopes.constant)

        def rhs(_s, y):
            p = y[:2]
            return np.append(rescaled_field(p, kappa), delta(p))

    else:

        def rhs(_s, y):
            p = y[:2]
            return np.append(rescaled_field(p, slopes(y[2])), delta(p))

    return rhs


def _event(fn, terminal: bool = True, direction: float = 0.0):
    fn.terminal = terminal
    fn.direction = direction
    return fn


def _blowup_fit(sol, s_event: float, threshold: float, n: int) -> BlowUp:
    """|p(s)| ~ eta/|s - s0| over the last decade before the threshold."""
    norms = np.linalg.norm(sol.y[:2], axis=0)
    below = np.nonzero(norms <= threshold / 10.0)[0]
    s_start = float(sol.t[below[-1]]) if below.size else float(sol.t[0])
    s = np.linspace(s_start, s_event, n)
    r = np.linalg.norm(sol.sol(s)[:2], axis=0)
    inv = ols_fit(s, 1.0 / r)
    s0 = -inv.intercept / inv.slope
    eta = 1.0 / abs(inv.slope)
    gap = np.abs(s0 - s)
    keep = gap > 0
    exponent = loglog_slope(gap[keep], r[keep]).slope
    return BlowUp(s0=float(s0), eta=float(eta), exponent=float(exponent))


def _integrate_leg(
    rhs, slopes: SlopeField, y0: np.ndarray, sign: float, opts: OrbitOptions
):
    """One direction in s. Returns (sol, termination)."""

    def blowup(_s, y):
        return opts.blowup_threshold - math.hypot(y[0], y[1])

    def converged(_s, y):
        return float(np.linalg.norm(rhs(0.0, y)[:2])) - opts.converge_tol

    sol = solve_ivp(
        rhs,
        (0.0, sign * opts.s_max),
        y0,
        method="DOP853",
        rtol=opts.rtol,
        atol=opts.atol,
        dense_output=True,
        events=[_event(blowup, direction=-1), _event(converged, direction=-1)],
    )
    if sol.status == -1:
        raise NumericalBreakdown(f"orbit integration failed: {sol.message}", sol.y[:, -1])

    if sol.t_events[0].size:
        s_event = float(sol.t_events[0][0])
        return sol, _blowup_fit(sol, s_event, opts.blowup_threshold, opts.fit_points)
    if sol.t_events[1].size:
        end = sol.y[:2, -1]
        return sol, Converged((float(end[0]), float(end[1])))

    end = sol.y[:, -1]
    if np.linalg.norm(rhs(0.0, end)[:2]) <= opts.settle_tol:
        limit = _newton_polish(end[:2], np.asarray(slopes(end[2])))
        return sol, Converged((float(limit[0]), float(limit[1])))
    return sol, LeftWindow(s_end=float(sol.t[-1]))


def _closed_orbit(rhs, y0: np.ndarray, opts: OrbitOptions):
    """Two legs across the section through p0 normal to the flow at p0."""
    p0 = y0[:2].copy()
    v0 = rhs(0.0, y0)[:2]

    def section(_s, y):
        return float((y[:2] - p0) @ v0)

    legs = []
    y = y0
    s_offset = 0.0
    for direction in (-1, 1):
        sol = solve_ivp(
            rhs,
            (0.0, opts.s_max),
            y,
            method="DOP853",
            rtol=opts.rtol,
            atol=opts.atol,
            events=[_event(section, direction=direction)],
        )
        if sol.status == -1:
            raise NumericalBreakdown(f"orbit integration failed: {sol.message}", sol.y[:, -1])
        if not sol.t_events[0].size:
            raise OrbitNotClosed(float("inf"))
        legs.append((sol.t + s_offset, sol.y))
        s_offset += float(sol.t[-1])
        y = sol.y[:, -1]

    closure = float(np.linalg.norm(y[:2] - p0))
    if not closure <= opts.closure_tol:
        raise OrbitNotClosed(closure)
    s = np.concatenate([legs[0][0], legs[1][0][1:]])
    ys = np.concatenate([legs[0][1], legs[1][1][:, 1:]], axis=1)
    term = ClosedOrbit(period_s=s_offset, period_x=float(y[2] - y0[2]), closure_error=closure)
    return s, ys, term


def _closed_orbit_result(rhs, y0: np.ndarray, slopes: SlopeField, opts: OrbitOptions) -> Orbit:
    s, ys, term = _closed_orbit(rhs, y0, opts)
    log.info("[orbit] closed: period_s=%.6g period_x=%.6g", term.period_s, term.period_x)
    return Orbit(s, ys[:2].T, ys[2], term, None, slopes)


def integrate_orbit(
    source,
    p0,
    direction: str = "forward",
    x0: float = 0.0,
    options: OrbitOptions | None = None,
) -> Orbit:
    """
    Integrate the rescaled field from p0 at x = x0; `source` is a (kappa1, kappa2) pair,
    a two-player GameSpec or a SlopeField. direction is forward | backward | both.

    ClosedOrbit needs a return-map search through p0. `options.closed_orbit=True` runs only
    that search (and raises OrbitNotClosed when the loop does not close). The default None
    runs it after a leg ends as LeftWindow and keeps LeftWindow when the orbit does not return;
    False never searches. A closed loop is reported as the forward termination whatever the
    direction.
    """
    opts = options or OrbitOptions()
    if direction not in ("forward", "backward", "both"):
        raise DomainError(f"direction must be forward, backward or both, got {direction!r}")
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (2,) or not np.all(np.isfinite(p0)):
        raise DomainError(f"p0 must be a finite pair, got {p0}")

    slopes = _as_field(source)
    rhs = _planar_rhs(slopes)
    y0 = np.array([p0[0], p0[1], x0], dtype=float)

    if float(np.linalg.norm(rhs(0.0, y0)[:2])) <= opts.converge_tol:
        at = Converged((float(p0[0]), float(p0[1])))
        return Orbit(np.zeros(1), p0[None, :], np.array([x0]), at, at, slopes)

    if opts.closed_orbit:
        return _closed_orbit_result(rhs, y0, slopes, opts)

    fwd = bwd = None
    s_parts, y_parts = [], []
    if direction in ("backward", "both"):
        sol, bwd = _integrate_leg(rhs, slopes, y0, -1.0, opts)
        s_parts.append(sol.t[::-1])
        y_parts.append(sol.y[:, ::-1])
    if direction in ("forward", "both"):
        sol, fwd = _integrate_leg(rhs, slopes, y0, 1.0, opts)
        skip = 1 if s_parts else 0
        s_parts.append(sol.t[skip:])
        y_parts.append(sol.y[:, skip:])

    s = np.concatenate(s_parts)
    ys = np.concatenate(y_parts, axis=1)
    if opts.closed_orbit is None and all(t is None or isinstance(t, LeftWindow) for t in (fwd, bwd)):
        try:
            return _closed_orbit_result(rhs, y0, slopes, opts)
        except (OrbitNotClosed, NumericalBreakdown) as exc:
            log.debug("[orbit] no return to p0: %s", exc)
    log.debug(
        "[orbit] p0=(%g, %g) forward=%s backward=%s",
        p0[0], p0[1], fwd and fwd.tag, bwd and bwd.tag,
    )
    return Orbit(s, ys[:2].T, ys[2], fwd, bwd, slopes)


# ---------- x-window ----------

FINITE = "finite"
INFINITE = "infinite"
TRUNCATED = "truncated"


@dataclass(frozen=True)
class XWindow:
    x_min: float                   # swept range
    x_max: float
    lower: str                     # finite | infinite | truncated
    upper: str
    lower_limit: float | None      # extrapolated end for finite ends, +-inf for infinite ones
    upper_limit: float | None
    period_x: float | None = None

    @property
    def lower_finite(self) -> bool:
        return self.lower == FINITE

    @property
    def upper_finite(self) -> bool:
        return self.upper == FINITE

    @property
    def globally_defined(self) -> bool:
        return self.lower == INFINITE and self.upper == INFINITE


def _tail_limit(s: np.ndarray, d: np.ndarray, x_end: float, sign: float) -> tuple[str, float | None]:
    """Exponential decay of Delta over the last fifth of a leg means a finite x end."""
    n = max(8, s.size // 5)
    if s.size < 8:
        return TRUNCATED, None
    ss, dd = np.abs(s[-n:]), d[-n:]
    if np.any(dd <= 0):
        return FINITE, x_end
    fit = exp_rate(ss, dd)
    if fit.slope < -1e-3 and fit.r2 > 0.9:
        return FINITE, x_end + sign * float(dd[-1]) / abs(fit.slope)
    return TRUNCATED, None


def _end(term: Termination | None, s, d, x_end: float, sign: float) -> tuple[str, float | None]:
    if term is None:
        return TRUNCATED, None
    if isinstance(term, (BlowUp, ClosedOrbit)):
        return INFINITE, sign * math.inf
    if isinstance(term, Converged):
        if term.x_limit is not None:
            return FINITE, term.x_limit
        if np.hypot(*term.limit) == 0.0:
            return FINITE, x_end
        return INFINITE, sign * math.inf
    return _tail_limit(s, d, x_end, sign)


def x_window(orbit: Orbit) -> XWindow:
    d = orbit.delta
    zero = int(np.argmin(np.abs(orbit.s)))
    lo_kind, lo_lim = _end(orbit.backward, orbit.s[: zero + 1][::-1], d[: zero + 1][::-1], float(orbit.x[0]), -1.0)
    hi_kind, hi_lim = _end(orbit.forward, orbit.s[zero:], d[zero:], float(orbit.x[-1]), 1.0)
    period = orbit.forward.period_x if isinstance(orbit.forward, ClosedOrbit) else None
    if isinstance(orbit.forward, ClosedOrbit):
        lo_kind, lo_lim = INFINITE, -math.inf
    return XWindow(
        x_min=float(np.min(orbit.x)),
        x_max=float(np.max(orbit.x)),
        lower=lo_kind,
        upper=hi_kind,
        lower_limit=lo_lim,
        upper_limit=hi_lim,
        period_x=period,
    )


# ---------- saddle manifolds ----------


def saddle_manifold(
    kappa1: float,
    kappa2: float,
    branch: str = "unstable",
    side: int = 1,
    eps: float = 1e-6,
    x0: float = 0.0,
    options: OrbitOptions | None = None,
) -> Orbit:
    """
    The orbit leaving (unstable) or entering (stable) the saddle at the origin along
    side * eigenvector. The origin end is attached analytically: Delta decays like
    exp(2 lambda s) there, so x converges to x0 -+ Delta(p0)/(2|lambda|).
    """
    if branch not in ("stable", "unstable") or side not in (1, -1):
        raise DomainError(f"branch must be stable|unstable and side +-1, got {branch!r}, {side!r}")
    lin = linearize(kappa1, kappa2)
    if lin.stability != SADDLE:
        raise DomainError(f"origin is a {lin.stability}, not a saddle, for kappa=({kappa1}, {kappa2})")

    j = 0 if branch == "unstable" else 1
    lam = float(lin.eigenvalues[j].real)
    p0 = side * eps * lin.eigenvectors[:, j].real
    x_lim = x0 - float(delta(p0)) / (2.0 * abs(lam)) if branch == "unstable" else x0 + float(delta(p0)) / (2.0 * abs(lam))

    leg_dir = "forward" if branch == "unstable" else "backward"
    # one leg from the origin; a loop back to it is reported by the leg, not as ClosedOrbit
    opts = replace(options or OrbitOptions(), closed_orbit=False)
    orbit = integrate_orbit((kappa1, kappa2), p0, direction=leg_dir, x0=x0, options=opts)
    origin = Converged((0.0, 0.0), x_limit=x_lim)
    if branch == "unstable":
        return Orbit(orbit.s, orbit.p, orbit.x, orbit.forward, origin, orbit.slopes)
    return Orbit(orbit.s, orbit.p, orbit.x, origin, orbit.backward, orbit.slopes)


# ---------- portraits ----------


@dataclass(frozen=True)
class PortraitPoint:
    index: int
    p0: tuple[float, float]
    tag: str
    value: float | None     # s0 for BlowUp, period_s for ClosedOrbit, |limit| for Converged


def portrait_starts(box: float, n: int, seed: int = 0) -> np.ndarray:
    """n x n grid on [-box, box]^2 with a seeded jitter well below the spacing; origin dropped."""
    rng = np.random.default_rng(seed)
    axis = np.linspace(-box, box, n)
    grid = np.array([(a, b) for a in axis for b in axis], dtype=float)
    spacing = 2 * box / max(n - 1, 1)
    grid += rng.uniform(-0.05, 0.05, size=grid.shape) * spacing
    return grid[np.linalg.norm(grid, axis=1) > 1e-9]


def _portrait_value(term: Termination | None) -> float | None:
    if isinstance(term, BlowUp):
        return term.s0
    if isinstance(term, ClosedOrbit):
        return term.period_s
    if isinstance(term, Converged):
        return float(np.hypot(*term.limit))
    return None


def sample_portrait(
    kappa: tuple[float, float],
    box: float = 3.0,
    n: int = 21,
    direction: str = "forward",
    seed: int = 0,
    workers: int = 1,
    options: OrbitOptions | None = None,
) -> list[PortraitPoint]:
    """Terminations over a grid of starting points; the output order follows the grid."""
    if direction not in ("forward", "backward"):
        raise DomainError(f"portrait direction must be forward or backward, got {direction!r}")
    starts = portrait_starts(box, n, seed)

    def one(item):
        i, p0 = item
        term = integrate_orbit(kappa, p0, direction=direction, options=options).termination
        return PortraitPoint(i, (float(p0[0]), float(p0[1])), term.tag if term else "None", _portrait_value(term))

    items = list(enumerate(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, items))
    else:
        points = [one(it) for it in items]
    log.info("[portrait] %d starts, kappa=(%g, %g), %s", len(points), kappa[0], kappa[1], direction)
    return points
