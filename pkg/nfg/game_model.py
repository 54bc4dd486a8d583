"""
Games, their cost families, the standing-assumption checks and regime classification.

A game is fixed by m cost functions h_i, m control-cost weights k_i, a bound C and the
half-width L of the working interval. Dynamics are always xdot = sum_i alpha_i and the
discount rate is 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Union

import numpy as np
from scipy.interpolate import CubicSpline

from nfg.errors import NonFiniteCost

log = logging.getLogger(__name__)

POINTS_PER_UNIT = 64
CHECK_HALF_WIDTH_FACTOR = 10
BOUND_SLACK = 1e-12


# ---------- cost families ----------


@dataclass(frozen=True)
class Linear:
    kappa: float
    offset: float = 0.0
    kind: ClassVar[str] = "linear"

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.kappa * x + self.offset

    def derivative(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.kappa)


SHAPES = ("tanh", "sin", "gaussian-bump")


def _shape(shape: str, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi(z) and phi'(z) for the perturbation shapes."""
    if shape == "tanh":
        t = np.tanh(z)
        return t, 1.0 - t * t
    if shape == "sin":
        return np.sin(z), np.cos(z)
    bump = np.exp(-0.5 * z * z)
    return bump, -z * bump


@dataclass(frozen=True)
class SmoothPerturbed:
    """h(x) = kappa*x + offset + amplitude*phi(x/length_scale)."""

    kappa: float
    amplitude: float
    shape: str
    length_scale: float = 1.0
    offset: float = 0.0
    kind: ClassVar[str] = "smooth_perturbed"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not self.length_scale > 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        phi, _ = _shape(self.shape, x / self.length_scale)
        return self.kappa * x + self.offset + self.amplitude * phi

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        _, dphi = _shape(self.shape, x / self.length_scale)
        return self.kappa + (self.amplitude / self.length_scale) * dphi


@dataclass(frozen=True)
class Tabulated:
    """
    Natural cubic spline through (x, values); linear continuation with the end slopes
    outside the table, so the function and its derivative are defined on the whole line.
    """

    x: tuple[float, ...]
    values: tuple[float, ...]
    kind: ClassVar[str] = "tabulated"
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.size != vs.size:
            raise ValueError("tabulated cost needs matching x/values with at least 2 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated x must be strictly increasing")
        object.__setattr__(self, "x", tuple(float(v) for v in xs))
        object.__setattr__(self, "values", tuple(float(v) for v in vs))
        object.__setattr__(self, "_spline", CubicSpline(xs, vs, bc_type="natural"))

    def _ends(self):
        lo, hi = self.x[0], self.x[-1]
        return lo, hi, float(self._spline(lo, 1)), float(self._spline(hi, 1))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi, s_lo, s_hi = self._ends()
        inner = self._spline(np.clip(x, lo, hi))
        return np.where(
            x < lo,
            self.values[0] + s_lo * (x - lo),
            np.where(x > hi, self.values[-1] + s_hi * (x - hi), inner),
        )

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi, s_lo, s_hi = self._ends()
        inner = self._spline(np.clip(x, lo, hi), 1)
        return np.where(x < lo, s_lo, np.where(x > hi, s_hi, inner))


CostFunction = Union[Linear, SmoothPerturbed, Tabulated]

UNIT_WEIGHT = Linear(kappa=0.0, offset=1.0)


# ---------- the game ----------


@dataclass(frozen=True)
class GameSpec:
    costs: tuple[CostFunction, ...]
    weights: tuple[CostFunction, ...]
    C: float
    L: float

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(self.costs))
        object.__setattr__(self, "weights", tuple(self.weights))
        if len(self.costs) < 2:
            raise ValueError(f"need at least 2 players, got {len(self.costs)}")
        if len(self.weights) != len(self.costs):
            raise ValueError("one weight k_i per cost h_i is required")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def m(self) -> int:
        return len(self.costs)

    def costs_at(self, x) -> np.ndarray:
        """h_i(x) stacked on the last axis."""
        return np.stack([np.asarray(c.value(x), dtype=float) for c in self.costs], axis=-1)

    def weights_at(self, x) -> np.ndarray:
        return np.stack([np.asarray(k.value(x), dtype=float) for k in self.weights], axis=-1)

    def slopes(self, x) -> np.ndarray:
        """h'_i(x) stacked on the last axis."""
        return np.stack([np.asarray(c.derivative(x), dtype=float) for c in self.costs], axis=-1)

    def has_unit_weights(self) -> bool:
        return all(isinstance(k, Linear) and k.kappa == 0 and k.offset == 1 for k in self.weights)


def constant_slope_spec(kappa1: float, kappa2: float, C: float | None = None, L: float = 5.0) -> GameSpec:
    """h_i = kappa_i x with unit weights; C defaults to the smallest bound the slopes allow."""
    if C is None:
        C = max(1.0, abs(kappa1), abs(kappa2))
    return GameSpec(
        costs=(Linear(kappa1), Linear(kappa2)), weights=(UNIT_WEIGHT, UNIT_WEIGHT), C=C, L=L
    )


def linear_example_spec(kappa: float, C: float | None = None, L: float = 5.0) -> GameSpec:
    """h_1 = -kappa x, h_2 = kappa x."""
    return constant_slope_spec(-kappa, kappa, C=C, L=L)


def zero_game_spec(C: float = 1.0, L: float = 5.0) -> GameSpec:
    return constant_slope_spec(0.0, 0.0, C=C, L=L)


# ---------- assumption checks ----------


def sample_grid(
    L: float,
    points_per_unit: int = POINTS_PER_UNIT,
    half_width_factor: float = CHECK_HALF_WIDTH_FACTOR,
) -> np.ndarray:
    hw = half_width_factor * L
    n = int(round(2 * hw * points_per_unit)) + 1
    return np.linspace(-hw, hw, n)


@dataclass(frozen=True)
class Violation:
    assumption: str         # k_below_inv_C | k_above_C | slope_above_C
    player: int             # 1-based
    x: float                # first witness on the grid
    value: float
    bound: float
    count: int              # offending grid points

    def describe(self) -> str:
        return (
            f"{self.assumption} for player {self.player}: value {self.value:.6g} vs bound "
            f"{self.bound:.6g} at x={self.x:.6g} ({self.count} grid points)"
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    grid_size: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _first_violation(grid, values, mask, assumption, player, bound) -> Violation | None:
    if not np.any(mask):
        return None
    j = int(np.argmax(mask))
    return Violation(assumption, player, float(grid[j]), float(values[j]), bound, int(mask.sum()))


def validate_game(
    spec: GameSpec,
    points_per_unit: int = POINTS_PER_UNIT,
    half_width_factor: float = CHECK_HALF_WIDTH_FACTOR,
) -> ValidationReport:
    """
    Check 1/C <= k_i <= C and |h_i'| <= C on a dense grid over [-10L, 10L].
    Raises NonFiniteCost at the first x where any cost, slope or weight is not finite.
    """
    grid = sample_grid(spec.L, points_per_unit, half_width_factor)
    lo_k, hi = 1.0 / spec.C, spec.C
    found: list[Violation] = []

    for i in range(spec.m):
        h = np.asarray(spec.costs[i].value(grid), dtype=float)
        dh = np.asarray(spec.costs[i].derivative(grid), dtype=float)
        k = np.asarray(spec.weights[i].value(grid), dtype=float)
        for what, arr in ((f"h{i + 1}", h), (f"h{i + 1}'", dh), (f"k{i + 1}", k)):
            bad = ~np.isfinite(arr)
            if np.any(bad):
                raise NonFiniteCost(float(grid[int(np.argmax(bad))]), what)

        checks = (
            ("k_below_inv_C", k, k < lo_k - BOUND_SLACK, lo_k),
            ("k_above_C", k, k > hi + BOUND_SLACK, hi),
            ("slope_above_C", dh, np.abs(dh) > hi + BOUND_SLACK, hi),
        )
        for assumption, values, mask, bound in checks:
            v = _first_violation(grid, values, mask, assumption, i + 1, bound)
            if v is not None:
                found.append(v)

    report = ValidationReport(violations=tuple(found), grid_size=grid.size)
    log.info("[validate] grid=%d violations=%d", grid.size, len(found))
    return report


# ---------- regimes ----------


class RegimeTag(str, Enum):
    COOPERATIVE_INCREASING = "CooperativeIncreasing"
    COOPERATIVE_DECREASING = "CooperativeDecreasing"
    CONFLICTING = "Conflicting"
    LINEAR_EXAMPLE = "LinearExample"
    GENERAL = "General"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    kappa: tuple[float, float] | None = None   # grid means of h_i'
    delta: float | None = None                 # max deviation from kappa
    C: float | None = None

    @property
    def linear_kappa(self) -> float:
        """The kappa of h_1 = -kappa x, h_2 = kappa x."""
        if self.tag is not RegimeTag.LINEAR_EXAMPLE or self.kappa is None:
            raise ValueError(f"{self.tag.value} has no linear-example kappa")
        return self.kappa[1]

    def describe(self) -> str:
        if self.kappa is None:
            return self.tag.value
        k1, k2 = self.kappa
        return f"{self.tag.value}(kappa=({k1:.6g}, {k2:.6g}), delta={self.delta or 0.0:.3g})"


def _is_linear_example(spec: GameSpec) -> bool:
    h1, h2 = spec.costs
    return (
        isinstance(h1, Linear)
        and isinstance(h2, Linear)
        and h2.kappa > 0
        and h1.kappa == -h2.kappa
        and h1.offset == 0
        and h2.offset == 0
        and spec.has_unit_weights()
    )


def classify_regime(
    spec: GameSpec,
    points_per_unit: int = POINTS_PER_UNIT,
    half_width_factor: float = CHECK_HALF_WIDTH_FACTOR,
) -> Regime:
    if spec.m != 2:
        return Regime(RegimeTag.GENERAL, C=spec.C)

    if _is_linear_example(spec):
        k = spec.costs[1].kappa
        return Regime(RegimeTag.LINEAR_EXAMPLE, kappa=(-k, k), delta=0.0, C=spec.C)

    grid = sample_grid(spec.L, points_per_unit, half_width_factor)
    dh = spec.slopes(grid)
    lo, hi = dh.min(axis=0), dh.max(axis=0)
    kappa = dh.mean(axis=0)
    delta = float(np.max(np.abs(dh - kappa)))
    k = (float(kappa[0]), float(kappa[1]))
    C = spec.C

    if np.all(lo >= 1.0 / C - BOUND_SLACK) and np.all(hi <= C + BOUND_SLACK):
        regime = Regime(RegimeTag.COOPERATIVE_INCREASING, kappa=k, delta=delta, C=C)
    elif np.all(hi <= -1.0 / C + BOUND_SLACK) and np.all(lo >= -C - BOUND_SLACK):
        regime = Regime(RegimeTag.COOPERATIVE_DECREASING, kappa=k, delta=delta, C=C)
    elif (
        k[0] < 0 < k[1]
        and delta < 0.5 * min(-k[0], k[1])
        and abs(k[0] + k[1]) > 2 * delta
    ):
        regime = Regime(RegimeTag.CONFLICTING, kappa=k, delta=delta, C=C)
    else:
        regime = Regime(RegimeTag.GENERAL, kappa=k, delta=delta, C=C)

    log.info("[validate] regime %s", regime.describe())
    return regime
