"""
Certification of the Nash property by dynamic programming.

For each player the others' feedbacks are frozen at the solution's sampled controls, which
leaves a one-player discounted control problem. Its value is computed by semi-Lagrangian
value iteration and compared with the claimed value u_i.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from nfg.errors import DomainError, NoConvergence, WindowTooSmall
from nfg.game_model import GameSpec
from nfg.solution import PiecewiseSolution

log = logging.getLogger(__name__)

DT = 0.01
GRID_N = 801
CONTROL_N = 81
TOL_DP = 1e-2
SWEEP_TOL = 1e-9
WINDOW_FACTOR = 1.5
MIN_GRID_N = 201
MIN_CONTROL_N = 41


@dataclass(frozen=True, eq=False)
class DeviationProblem:
    player: int                      # 1-based
    spec: GameSpec
    grid: np.ndarray                 # solution grid the frozen feedbacks are sampled on
    opponent_samples: np.ndarray     # sum_{j != i} alpha_j* on the grid (right limits)
    claimed_samples: np.ndarray      # alpha_i* on the grid
    window: tuple[float, float]
    a_max: float

    def _interp(self, samples: np.ndarray, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.grid[0], self.grid[-1])
        return np.interp(x, self.grid, samples)

    def opponent_drift(self, x) -> np.ndarray:
        return self._interp(self.opponent_samples, x)

    def claimed_control(self, x) -> np.ndarray:
        return self._interp(self.claimed_samples, x)

    def running_cost(self, x, a) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        i = self.player - 1
        h = self.spec.costs[i].value(x)
        k = self.spec.weights[i].value(x)
        return h + 0.5 * k * np.asarray(a) ** 2


def deviation_problem(spec: GameSpec, solution: PiecewiseSolution, player: int) -> DeviationProblem:
    if not 1 <= player <= spec.m:
        raise DomainError(f"player must be in 1..{spec.m}, got {player}")
    alpha = -solution.p / spec.weights_at(solution.grid)
    i = player - 1
    others = np.sum(np.delete(alpha, i, axis=1), axis=1)
    lo, hi = solution.window
    half = WINDOW_FACTOR * max(abs(lo), abs(hi))
    a_max = 2.0 * spec.C * (1.0 + float(np.max(np.abs(solution.p))))
    return DeviationProblem(
        player=player,
        spec=spec,
        grid=solution.grid,
        opponent_samples=others,
        claimed_samples=alpha[:, i],
        window=(-half, half),
        a_max=a_max,
    )


# ---------- value iteration ----------


@dataclass(frozen=True, eq=False)
class DPResult:
    x: np.ndarray
    V: np.ndarray
    policy: np.ndarray          # minimizing control per state
    iterations: int
    sup_change: float
    dt: float

    def value_at(self, y) -> np.ndarray:
        return _interp_extrap(self.x, self.V, np.asarray(y, dtype=float))


def _interp_extrap(xs: np.ndarray, vs: np.ndarray, x: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(xs, x) - 1, 0, xs.size - 2)
    w = (x - xs[idx]) / (xs[idx + 1] - xs[idx])
    return (1.0 - w) * vs[idx] + w * vs[idx + 1]


@dataclass(frozen=True, eq=False)
class _Scheme:
    """Everything value iteration needs that does not depend on V."""

    x: np.ndarray
    controls: np.ndarray        # (n, c)
    cost: np.ndarray            # (n, c) discounted running cost over one step
    idx: np.ndarray             # (n, c) left interpolation node of the next state
    w: np.ndarray               # (n, c) interpolation weight, outside [0, 1] when extrapolating
    gamma: float


def _scheme(problem: DeviationProblem, grid_n: int, control_n: int, dt: float) -> _Scheme:
    lo, hi = problem.window
    x = np.linspace(lo, hi, grid_n)
    base = np.linspace(-problem.a_max, problem.a_max, control_n)
    claimed = problem.claimed_control(x)
    controls = np.concatenate([np.broadcast_to(base, (grid_n, control_n)), claimed[:, None]], axis=1)

    v = controls + problem.opponent_drift(x)[:, None]
    x_next = x[:, None] + dt * v
    limit = 2.0 * max(abs(lo), abs(hi))
    if np.any(np.abs(x_next) > limit):
        raise WindowTooSmall(f"one DP step leaves 2x the window (max |x'|={np.max(np.abs(x_next)):.4g})")

    gamma = math.exp(-dt)
    beta = 1.0 - gamma
    tau = (1.0 - gamma * (1.0 + dt)) / beta        # mean time of the discounted step
    cost = beta * problem.running_cost(x[:, None] + tau * v, controls)

    idx = np.clip(np.searchsorted(x, x_next) - 1, 0, grid_n - 2)
    w = (x_next - x[idx]) / (x[idx + 1] - x[idx])
    return _Scheme(x=x, controls=controls, cost=cost, idx=idx, w=w, gamma=gamma)


def _bellman(s: _Scheme, V: np.ndarray) -> np.ndarray:
    return s.cost + s.gamma * ((1.0 - s.w) * V[s.idx] + s.w * V[s.idx + 1])


def dp_value(
    problem: DeviationProblem,
    grid_n: int = GRID_N,
    control_n: int = CONTROL_N,
    dt: float = DT,
    tol: float = SWEEP_TOL,
    max_iter: int | None = None,
) -> DPResult:
    """
    Fixed point of V(x) = min_a { cost over one step + e^-dt V(x + dt (a + opponent drift)) }
    on a uniform grid over the problem window, linear interpolation and extrapolation.
    """
    if grid_n < MIN_GRID_N or control_n < MIN_CONTROL_N or not 0 < dt <= 0.1:
        raise DomainError(
            f"need grid_n >= {MIN_GRID_N}, control_n >= {MIN_CONTROL_N}, 0 < dt <= 0.1; "
            f"got {grid_n}, {control_n}, {dt}"
        )
    s = _scheme(problem, grid_n, control_n, dt)
    if max_iter is None:
        max_iter = int(math.ceil(40.0 / dt)) * 5

    V = np.min(s.cost, axis=1) / (1.0 - s.gamma)
    change = math.inf
    for it in range(1, max_iter + 1):
        V_new = np.min(_bellman(s, V), axis=1)
        change = float(np.max(np.abs(V_new - V)))
        V = V_new
        if it % 500 == 0:
            log.debug("[verify] player %d sweep %d sup-change %.3e", problem.player, it, change)
        if change < tol:
            break
    else:
        raise NoConvergence(change, where=f"value iteration for player {problem.player}")

    policy = s.controls[np.arange(grid_n), np.argmin(_bellman(s, V), axis=1)]
    log.info(
        "[verify] player %d: %d sweeps, grid %d x %d controls, dt=%g", problem.player, it, grid_n, control_n + 1, dt
    )
    return DPResult(x=s.x, V=V, policy=policy, iterations=it, sup_change=change, dt=dt)


def greedy_rollout(
    problem: DeviationProblem,
    result: DPResult,
    y: float,
    T: float = 40.0,
    control_n: int = CONTROL_N,
) -> float:
    """Discounted cost of playing the control that is greedy with respect to V, from y."""
    dt = result.dt
    gamma = math.exp(-dt)
    beta = 1.0 - gamma
    tau = (1.0 - gamma * (1.0 + dt)) / beta
    base = np.linspace(-problem.a_max, problem.a_max, control_n)

    x, total, discount = float(y), 0.0, 1.0
    for _ in range(int(round(T / dt))):
        controls = np.append(base, problem.claimed_control(x))
        v = controls + problem.opponent_drift(x)
        step_cost = beta * problem.running_cost(x + tau * v, controls)
        q = step_cost + gamma * result.value_at(x + dt * v)
        k = int(np.argmin(q))
        total += discount * step_cost[k]
        discount *= gamma
        x += dt * float(v[k])
    return total


# ---------- certification ----------


@dataclass(frozen=True, eq=False)
class NashReport:
    ys: np.ndarray              # (n,)
    u: np.ndarray               # (n, m) claimed values
    V: np.ndarray               # (n, m) DP deviation values
    gap: np.ndarray             # V - u
    tol_dp: float
    error_estimate: np.ndarray  # (m,) fine vs coarse DP difference at the sample points
    point_pass: np.ndarray      # (n, m)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.point_pass))

    @property
    def worst_gap(self) -> float:
        return float(np.max(np.abs(self.gap)))

    @property
    def below_resolution(self) -> bool:
        """tol_dp is tighter than the DP's own discretization error."""
        return bool(np.any(self.error_estimate > self.tol_dp))


def default_sample_ys(L: float, n: int = 10) -> np.ndarray:
    return np.linspace(-0.4 * L, 0.4 * L, n)


def _player_values(problem, ys, grid_n, control_n, dt, richardson):
    fine = dp_value(problem, grid_n, control_n, dt)
    V = fine.value_at(ys)
    coarse_n = (grid_n - 1) // 2 + 1
    if richardson and coarse_n >= MIN_GRID_N:
        coarse = dp_value(problem, coarse_n, control_n, dt)
        err = float(np.max(np.abs(V - coarse.value_at(ys))))
    else:
        err = math.nan
    return V, err


def check_nash(
    spec: GameSpec,
    solution: PiecewiseSolution,
    sample_ys=None,
    tol_dp: float = TOL_DP,
    *,
    grid_n: int = GRID_N,
    control_n: int = CONTROL_N,
    dt: float = DT,
    workers: int = 1,
    richardson: bool = True,
) -> NashReport:
    """gap = V_i(y) - u_i(y); a point passes when |gap| <= tol_dp (no deviation gains more, and the feedback attains V)."""
    ys = default_sample_ys(spec.L) if sample_ys is None else np.asarray(sample_ys, dtype=float)
    problems = [deviation_problem(spec, solution, i + 1) for i in range(spec.m)]

    def run(problem):
        return _player_values(problem, ys, grid_n, control_n, dt, richardson)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, problems))
    else:
        results = [run(p) for p in problems]

    V = np.stack([r[0] for r in results], axis=1)
    err = np.array([r[1] for r in results])
    u = solution.value_at(ys)
    gap = V - u
    report = NashReport(
        ys=ys, u=u, V=V, gap=gap, tol_dp=tol_dp, error_estimate=err, point_pass=np.abs(gap) <= tol_dp
    )
    if report.below_resolution:
        log.warning("[verify] tol_dp=%g is below the DP error estimate %s", tol_dp, err)
    log.log(
        logging.INFO if report.passed else logging.WARNING,
        "[verify] %d points x %d players, worst |gap|=%.3e -> %s",
        ys.size, spec.m, report.worst_gap, "pass" if report.passed else "FAIL",
    )
    return report
