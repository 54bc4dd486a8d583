"""
Closed-loop trajectories x' = g(x) = -sum_i p_i(x)/k_i(x) under a sampled solution, and the
discounted costs they incur.

g is right-continuous. The state is one-dimensional and autonomous, so every trajectory is
monotone: the simulator integrates one monotone piece at a time and stops at zeros of g,
at jump locations and at the window edge.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec, solve_ivp
from scipy.optimize import brentq

from nfg.errors import DomainError, NumericalBreakdown, WindowExceeded
from nfg.game_model import GameSpec
from nfg.solution import PiecewiseSolution

log = logging.getLogger(__name__)

HORIZON = 40.0
ZERO_SNAP = 1e-10
STILL = 1e-14
RTOL = 1e-10
ATOL = 1e-12

HIT_JUMP = "HitJumpPoint"
REACHED_EQUILIBRIUM = "ReachedEquilibrium"
TRUNCATED = "Truncated"


# ---------- the closed-loop drift ----------


def drift(solution: PiecewiseSolution, spec: GameSpec, x, side: str = "right") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p = solution.gradient_at(x, side=side)
    return -np.sum(p / spec.weights_at(x), axis=-1)


@dataclass(frozen=True, eq=False)
class DriftZeros:
    zeros: np.ndarray        # simple zeros inside smooth pieces
    jumps: np.ndarray        # jump locations (g may change sign there)

    def next_zero(self, x: float, direction: int) -> float | None:
        ahead = self.zeros[self.zeros > x] if direction > 0 else self.zeros[self.zeros < x]
        if not ahead.size:
            return None
        return float(ahead.min() if direction > 0 else ahead.max())

    def next_jump(self, x: float, direction: int) -> float | None:
        ahead = self.jumps[self.jumps > x] if direction > 0 else self.jumps[self.jumps < x]
        if not ahead.size:
            return None
        return float(ahead.min() if direction > 0 else ahead.max())


def g_zeros(solution: PiecewiseSolution, spec: GameSpec) -> DriftZeros:
    """Sign changes of g between grid nodes of one smooth piece, refined with brentq."""
    grid = solution.grid
    jump_ys = np.array([j.y for j in solution.jumps], dtype=float)
    right = drift(solution, spec, grid, "right")
    left = drift(solution, spec, grid, "left")
    found = [float(x) for x, g in zip(grid, right) if g == 0.0 and x not in jump_ys]

    for k in range(grid.size - 1):
        a, b = grid[k], grid[k + 1]
        ga, gb = right[k], left[k + 1]
        if ga * gb < 0:
            f = lambda x, b=b, gb=gb: gb if x >= b else float(drift(solution, spec, x, "right"))  # noqa: E731
            found.append(brentq(f, a, b, xtol=1e-14))
    zeros = np.unique(np.asarray(found, dtype=float))
    return DriftZeros(zeros=zeros, jumps=np.sort(jump_ys))


# ---------- trajectories ----------


@dataclass(frozen=True)
class TrajectoryEvent:
    t: float
    kind: str
    x: float


@dataclass(frozen=True, eq=False)
class _Piece:
    t0: float
    t1: float
    side: str
    dense: object | None        # OdeSolution for a moving piece, None while held
    x_hold: float = 0.0

    def x_at(self, t: np.ndarray) -> np.ndarray:
        if self.dense is None:
            return np.full_like(t, self.x_hold)
        return self.dense(t)[0]


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    controls: np.ndarray               # (n, m) feedback controls -p_i/k_i along the path
    events: tuple[TrajectoryEvent, ...]
    horizon: float
    direction: int                     # +1, -1 or 0
    pieces: tuple[_Piece, ...]

    @property
    def t_end(self) -> float:
        return self.pieces[-1].t1

    @property
    def truncated(self) -> bool:
        return any(e.kind == TRUNCATED for e in self.events)

    def x_at(self, t) -> np.ndarray:
        return _x_at(self.pieces, t)

    def is_monotone(self) -> bool:
        d = np.diff(self.x)
        return bool(np.all(d >= -1e-12) or np.all(d <= 1e-12))


def _x_at(pieces, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    for k, piece in enumerate(pieces):
        last = k == len(pieces) - 1
        mask = (t >= piece.t0) & ((t <= piece.t1) if last else (t < piece.t1))
        if np.any(mask):
            out[mask] = piece.x_at(t[mask])
    return out


def _terminal(fn, direction: float = 0.0):
    fn.terminal = True
    fn.direction = direction
    return fn


def simulate(
    solution: PiecewiseSolution,
    spec: GameSpec,
    y: float,
    T: float = HORIZON,
    *,
    on_exit: str = "truncate",
    zero_snap: float = ZERO_SNAP,
    n_samples: int = 2001,
) -> Trajectory:
    """
    Follow x' = g(x) from y. The sign of the right-continuous g(y) fixes the direction; a
    start at a jump location where the left limit points the other way is logged as ambiguous.
    """
    if not T > 0:
        raise DomainError(f"horizon must be positive, got {T}")
    if on_exit not in ("truncate", "raise"):
        raise DomainError(f"on_exit must be truncate or raise, got {on_exit!r}")
    lo, hi = solution.window
    if not lo <= y <= hi:
        raise WindowExceeded(0.0, y)

    zeros = g_zeros(solution, spec)
    g0 = float(drift(solution, spec, y, "right"))
    sign = 0 if abs(g0) <= STILL else int(math.copysign(1, g0))
    if np.any(np.isclose(zeros.jumps, y, atol=1e-12, rtol=0)):
        g_left = float(drift(solution, spec, y, "left"))
        if g_left * g0 < 0:
            log.warning(
                "[simulate] y=%g is a jump point with g(y-)=%.4g, g(y+)=%.4g: both branches are "
                "Caratheodory solutions; following the right-continuous one", y, g_left, g0,
            )

    events: list[TrajectoryEvent] = []
    pieces: list[_Piece] = []
    t, x, direction = 0.0, float(y), sign
    if direction and np.any(np.abs(zeros.zeros - x) <= zero_snap):
        direction = 0

    while t < T and direction:
        side = "right" if direction > 0 else "left"
        z = zeros.next_zero(x, direction)
        j = zeros.next_jump(x, direction)
        edge = hi if direction > 0 else lo

        def rhs(_t, state, side=side):
            return [float(drift(solution, spec, state[0], side))]

        # event order: window edge, zero of g, jump location
        d, far = direction, 2.0 * (hi - lo) + 1.0
        z_at = z if z is not None else x + d * far
        j_at = j if j is not None else x + d * far
        watch = [
            _terminal(lambda _t, s, e=edge: d * (e - s[0]), -1),
            _terminal(lambda _t, s: d * (z_at - s[0]) - zero_snap, -1),
            _terminal(lambda _t, s: d * (j_at - s[0]), -1),
        ]

        sol = solve_ivp(
            rhs, (t, T), [x], method="DOP853", rtol=RTOL, atol=ATOL, dense_output=True, events=watch
        )
        if sol.status == -1:
            raise NumericalBreakdown(f"trajectory integration failed: {sol.message}", [t, x])
        t_stop, x_stop = float(sol.t[-1]), float(sol.y[0, -1])
        pieces.append(_Piece(t, t_stop, side, sol.sol))
        t, x = t_stop, x_stop
        if sol.status == 0:
            break

        if sol.t_events[0].size:
            x = edge
            if on_exit == "raise":
                raise WindowExceeded(t, x)
            events.append(TrajectoryEvent(t, TRUNCATED, x))
            log.info("[simulate] left the window at t=%.6g; truncating", t)
            return _assemble(solution, spec, pieces, events, T, sign, n_samples)
        if sol.t_events[1].size:
            events.append(TrajectoryEvent(t, REACHED_EQUILIBRIUM, x))
            direction = 0
            break
        # jump location reached: continue only if g beyond it keeps the direction
        x = j
        beyond = float(drift(solution, spec, j, side))
        events.append(TrajectoryEvent(t, HIT_JUMP, x))
        if beyond * direction <= 0:
            direction = 0

    if t < T:
        pieces.append(_Piece(t, T, "right", None, x_hold=x))
        if not events:
            events.append(TrajectoryEvent(t, REACHED_EQUILIBRIUM, x))
    return _assemble(solution, spec, pieces, events, T, sign, n_samples)


def _assemble(solution, spec, pieces, events, T, direction, n_samples) -> Trajectory:
    t_end = pieces[-1].t1
    bounds = [p.t0 for p in pieces] + [t_end]
    t = np.unique(np.concatenate([np.linspace(0.0, t_end, n_samples), bounds]))
    x = _x_at(pieces, t)
    side = "left" if direction < 0 else "right"
    controls = -solution.gradient_at(x, side=side) / spec.weights_at(x)
    log.debug("[simulate] %d pieces, events=%s", len(pieces), [e.kind for e in events])
    return Trajectory(t, x, controls, tuple(events), T, direction, tuple(pieces))


def growth_bound_holds(trajectory: Trajectory, C0: float) -> bool:
    """|x(t)| <= |x(0)| + 2 t C0 (1 + t) at every sample."""
    t, x = trajectory.t, trajectory.x
    return bool(np.all(np.abs(x) <= abs(x[0]) + 2.0 * t * C0 * (1.0 + t) + 1e-12))


def drift_bound(solution: PiecewiseSolution, spec: GameSpec) -> float:
    """max |g| over the grid, both one-sided limits."""
    return float(
        max(
            np.max(np.abs(drift(solution, spec, solution.grid, "right"))),
            np.max(np.abs(drift(solution, spec, solution.grid, "left"))),
        )
    )


# ---------- costs ----------


def running_costs(spec: GameSpec, trajectory: Trajectory) -> np.ndarray:
    """e^{-t} [h_i(x) + k_i(x) alpha_i^2 / 2] at every sample, shape (n, m)."""
    x = np.asarray(trajectory.x, dtype=float)
    k = spec.weights_at(x)
    return np.exp(-trajectory.t)[:, None] * (spec.costs_at(x) + 0.5 * k * trajectory.controls**2)


@dataclass(frozen=True)
class CostBreakdown:
    player: int            # 1-based
    running: float         # int e^-t h_i(x) dt
    control: float         # int e^-t k_i alpha_i^2 / 2 dt
    total: float
    tail: float            # bound on the discarded part after t_end
    quad_error: float


def evaluate_cost(spec: GameSpec, trajectory: Trajectory, solution: PiecewiseSolution) -> list[CostBreakdown]:
    """Discounted cost of each player along the trajectory, piece by piece."""
    m = spec.m
    running = np.zeros(m)
    control = np.zeros(m)
    err = np.zeros(m)

    def integrands(t: float, side: str, piece: _Piece):
        x = float(piece.x_at(np.array([t]))[0])
        p = solution.gradient_at(x, side=side)
        k = spec.weights_at(x)
        return math.exp(-t) * spec.costs_at(x), math.exp(-t) * p * p / (2.0 * k)

    for piece in trajectory.pieces:
        if piece.t1 <= piece.t0:
            continue
        if piece.dense is None:
            x = piece.x_hold
            side = "left" if trajectory.direction < 0 else "right"
            p = solution.gradient_at(x, side=side)
            k = spec.weights_at(x)
            w = math.exp(-piece.t0) - math.exp(-piece.t1)
            running += w * spec.costs_at(x)
            control += w * p * p / (2.0 * k)
            continue
        val, e = quad_vec(
            lambda t, piece=piece: np.concatenate(integrands(t, piece.side, piece)),
            piece.t0, piece.t1, epsabs=1e-12, epsrel=1e-10, limit=400,
        )
        running += val[:m]
        control += val[m:]
        err += e

    t_end = trajectory.t_end
    x_end = float(trajectory.x[-1])
    G = drift_bound(solution, spec)
    A = float(max(np.max(np.abs(solution.p)), np.max(np.abs(solution.p_left))))
    h_end = np.abs(spec.costs_at(x_end))
    tail = math.exp(-t_end) * (h_end + spec.C * G + spec.C * A * A / 2.0)

    out = [
        CostBreakdown(
            player=i + 1,
            running=float(running[i]),
            control=float(control[i]),
            total=float(running[i] + control[i]),
            tail=float(tail[i]),
            quad_error=float(err[i]),
        )
        for i in range(m)
    ]
    log.info("[simulate] costs %s (t_end=%.4g)", [round(c.total, 9) for c in out], t_end)
    return out
