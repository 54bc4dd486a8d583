"""
Sampled piecewise solutions of the HJ system and their admissibility report.

Samples hold right limits at jump locations; the left limits live in the jump records.
Evaluation between samples is piecewise, split at the jumps, so that p is right-continuous
and u stays continuous.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

from nfg.hj_system import JumpRecord

JUMP_LOCATE_TOL = 1e-9


@dataclass(frozen=True)
class AdmissibilityReport:
    max_residual: float            # A1: max |u - H(x, p)| over grid (both one-sided limits)
    consistency_residual: float    # A1: |du - trapezoid(p) dx| / dx, max over cells
    growth_constant: float         # A2: smallest C' with |u| <= C'(1 + |x|) on the grid
    growth_slope: float            # A2: outer-grid slope of |u| vs |x|, max over players
    growth_bound: float            # A2 threshold, C + tol
    jumps_admissible: tuple[bool, ...]
    a1: bool
    a2: bool
    a3: bool

    @property
    def passed(self) -> bool:
        return self.a1 and self.a2 and self.a3

    @property
    def reasons(self) -> tuple[str, ...]:
        return tuple(code for code, ok in (("A1", self.a1), ("A2", self.a2), ("A3", self.a3)) if not ok)


@dataclass(frozen=True, eq=False)
class PiecewiseSolution:
    grid: np.ndarray            # strictly increasing, spans [-L, L]
    p: np.ndarray               # (n, m) right limits
    u: np.ndarray               # (n, m)
    jumps: tuple[JumpRecord, ...] = ()
    meta: dict[str, Any] = field(default_factory=dict)
    audit: AdmissibilityReport | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        p = np.asarray(self.p, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 points")
        if p.shape != (grid.size, p.shape[-1]) or u.shape != p.shape:
            raise ValueError(f"p and u must have shape (n, m); got {p.shape}, {u.shape}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "jumps", tuple(sorted(self.jumps, key=lambda j: j.y)))

    @property
    def m(self) -> int:
        return self.p.shape[1]

    @property
    def window(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def with_audit(self, report: AdmissibilityReport) -> PiecewiseSolution:
        return dataclasses.replace(self, audit=report)

    @cached_property
    def jump_indices(self) -> np.ndarray:
        idx = []
        for j in self.jumps:
            k = int(np.argmin(np.abs(self.grid - j.y)))
            if abs(self.grid[k] - j.y) > JUMP_LOCATE_TOL:
                raise ValueError(f"jump at y={j.y} is not a grid point")
            idx.append(k)
        return np.asarray(idx, dtype=int)

    @cached_property
    def p_left(self) -> np.ndarray:
        """Left limits at every grid point."""
        out = self.p.copy()
        for k, j in zip(self.jump_indices, self.jumps, strict=True):
            out[k] = j.p_minus
        return out

    @cached_property
    def _segments(self) -> list[tuple[int, int]]:
        cuts = [0, *[int(k) for k in self.jump_indices if 0 < k < self.grid.size - 1], self.grid.size - 1]
        return [(a, b) for a, b in zip(cuts[:-1], cuts[1:], strict=True) if b > a]

    def _fit(self, values_right: np.ndarray, values_left: np.ndarray, kind: str) -> list:
        pieces = []
        for a, b in self._segments:
            xs = self.grid[a : b + 1]
            ys = values_right[a : b + 1].copy()
            ys[-1] = values_left[b]
            if kind == "cubic" and xs.size >= 4:
                pieces.append(CubicSpline(xs, ys, axis=0))
            else:
                pieces.append((xs, ys))
        return pieces

    @cached_property
    def _p_cubic(self):
        return self._fit(self.p, self.p_left, "cubic")

    @cached_property
    def _p_linear(self):
        return self._fit(self.p, self.p_left, "linear")

    @cached_property
    def _u_cubic(self):
        return self._fit(self.u, self.u, "cubic")

    def _evaluate(self, pieces, x, side: str) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.grid[0], self.grid[-1])
        flat = x.reshape(-1)
        ys = np.asarray([j.y for j in self.jumps if self.grid[0] < j.y < self.grid[-1]])
        seg = np.searchsorted(ys, flat, side="right" if side == "right" else "left")
        out = np.empty((flat.size, self.m))
        for s in np.unique(seg):
            mask = seg == s
            piece = pieces[int(s)]
            if isinstance(piece, CubicSpline):
                out[mask] = piece(flat[mask])
            else:
                xs, vs = piece
                out[mask] = np.stack(
                    [np.interp(flat[mask], xs, vs[:, i]) for i in range(self.m)], axis=-1
                )
        return out.reshape(x.shape + (self.m,))

    def gradient_at(self, x, side: str = "right", kind: str = "cubic") -> np.ndarray:
        """p at x (clamped to the window); side picks the one-sided limit at jump locations."""
        pieces = self._p_cubic if kind == "cubic" else self._p_linear
        return self._evaluate(pieces, x, side)

    def value_at(self, x) -> np.ndarray:
        return self._evaluate(self._u_cubic, x, "right")
