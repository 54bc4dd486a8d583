"""
Pointwise algebra of the stationary Hamilton-Jacobi system

    u_i = (p_i/(2 k_i) - sum_j p_j/k_j) p_i + h_i,      p_i = u_i',

its optimal feedback alpha_i* = -p_i/k_i, the two-player gradient ODE dp/dx = N(p)/Delta(p),
the rescaled field dp/ds = N(p) (dx/ds = Delta(p)), and the jump admissibility test.

Array arguments broadcast: players live on the last axis.
"""
from __future__ import annotations

import dataclasses
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from nfg.errors import DomainError, SingularGradient
from nfg.game_model import GameSpec

EPS_SING = 1e-12
JUMP_IDENTITY_TOL = 1e-9
DRIFT_SLACK = 1e-12


@dataclass(frozen=True)
class GradientState:
    x: float
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if not np.isfinite(self.x) or not np.all(np.isfinite(self.p)):
            raise ValueError(f"non-finite gradient state x={self.x}, p={self.p}")


# ---------- general m ----------


def optimal_feedback(spec: GameSpec, state: GradientState) -> np.ndarray:
    return -np.asarray(state.p) / spec.weights_at(state.x)


def hamiltonian(spec: GameSpec, x, p) -> np.ndarray:
    """H_i(x, p) = (p_i/(2k_i) - sum_j p_j/k_j) p_i + h_i(x)."""
    p = np.asarray(p, dtype=float)
    k = spec.weights_at(x)
    drift = np.sum(p / k, axis=-1, keepdims=True)
    return (p / (2.0 * k) - drift) * p + spec.costs_at(x)


def hj_residual(spec: GameSpec, x, u, p) -> np.ndarray:
    return np.asarray(u, dtype=float) - hamiltonian(spec, x, p)


def reconstruct_values(spec: GameSpec, x, p) -> np.ndarray:
    """The values u with zero residual for the given gradients."""
    return hamiltonian(spec, x, p)


# ---------- two players ----------


def delta(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    p1, p2 = p[..., 0], p[..., 1]
    return p1 * p1 + p2 * p2 + p1 * p2


def rescaled_field(p, slopes) -> np.ndarray:
    """Numerators of the gradient ODE for slopes (h_1', h_2')."""
    p = np.asarray(p, dtype=float)
    s = np.asarray(slopes, dtype=float)
    p1, p2 = p[..., 0], p[..., 1]
    s1, s2 = s[..., 0], s[..., 1]
    n1 = -p1 * p1 + (s1 - s2) * p1 + s1 * p2
    n2 = -p2 * p2 + (s2 - s1) * p2 + s2 * p1
    return np.stack([n1, n2], axis=-1)


def gradient_field(p, slopes, eps_sing: float = EPS_SING) -> np.ndarray:
    d = delta(p)
    if np.any(d <= eps_sing):
        bad = np.asarray(p, dtype=float).reshape(-1, 2)[int(np.argmin(np.reshape(d, -1)))]
        raise SingularGradient(bad, float(np.min(d)))
    return rescaled_field(p, slopes) / np.asarray(d)[..., None]


def jacobian(p, slopes) -> np.ndarray:
    """Jacobian of the rescaled field at a single point."""
    p1, p2 = (float(v) for v in p)
    s1, s2 = (float(v) for v in slopes)
    return np.array([[s1 - s2 - 2.0 * p1, s1], [s2, s2 - s1 - 2.0 * p2]])


def _require_two(spec: GameSpec) -> None:
    if spec.m != 2:
        raise DomainError(f"the gradient ODE is two-player only (m={spec.m})")


def gradient_ode_rhs(spec: GameSpec, state: GradientState, eps_sing: float = EPS_SING) -> np.ndarray:
    _require_two(spec)
    return gradient_field(state.p, spec.slopes(state.x), eps_sing)


def rescaled_rhs(spec: GameSpec, state: GradientState) -> np.ndarray:
    _require_two(spec)
    return rescaled_field(state.p, spec.slopes(state.x))


@dataclass(frozen=True)
class SlopeField:
    """
    x -> (h_1'(x), h_2'(x)), optionally viewed after the reflection x -> -x
    (slopes become -h'(-x)) and/or the player swap.
    """

    fn: Callable[[np.ndarray], np.ndarray] | None = None
    constant: tuple[float, float] | None = None

    @classmethod
    def from_spec(cls, spec: GameSpec) -> SlopeField:
        _require_two(spec)
        return cls(fn=spec.slopes)

    @classmethod
    def frozen(cls, s1: float, s2: float) -> SlopeField:
        return cls(constant=(float(s1), float(s2)))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def __call__(self, x) -> np.ndarray:
        if self.constant is not None:
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(np.asarray(self.constant), x.shape + (2,)).copy()
        return self.fn(x)

    def normalized(self, reflect: bool, swap: bool) -> SlopeField:
        if not reflect and not swap:
            return self
        if self.constant is not None:
            s = np.asarray(self.constant)
            s = -s if reflect else s
            s = s[::-1] if swap else s
            return SlopeField.frozen(*s)
        base = self.fn

        def fn(x):
            x = np.asarray(x, dtype=float)
            s = -base(-x) if reflect else base(x)
            return s[..., ::-1] if swap else s

        return SlopeField(fn=fn)


# ---------- jumps ----------


@dataclass(frozen=True)
class JumpRecord:
    y: float
    p_minus: tuple[float, ...]
    p_plus: tuple[float, ...]
    admissible: bool | None = None
    identities_residual: float | None = None
    violated: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "p_minus", tuple(float(v) for v in self.p_minus))
        object.__setattr__(self, "p_plus", tuple(float(v) for v in self.p_plus))


def _identities(p: np.ndarray, k: np.ndarray) -> np.ndarray:
    """p_i^2/(2k_i) + sum_{j != i} p_i p_j / k_j for each i."""
    drift = np.sum(p / k)
    return p * (drift - p / (2.0 * k))


def jump_admissible(
    spec: GameSpec, record: JumpRecord, tol: float = JUMP_IDENTITY_TOL
) -> JumpRecord:
    """
    Fill in the verdict for a candidate jump at y: the one-sided drifts must point away from
    y (sum p+/k <= 0 <= sum p-/k) and the value-continuity identities must match.
    """
    pm = np.asarray(record.p_minus, dtype=float)
    pp = np.asarray(record.p_plus, dtype=float)
    if pm.shape != pp.shape or pm.size != spec.m:
        raise DomainError(f"jump sides must both have {spec.m} entries")
    if np.array_equal(pm, pp):
        raise DomainError(f"no jump at y={record.y}: p_minus equals p_plus")

    k = spec.weights_at(record.y)
    violated: list[str] = []
    if np.sum(pp / k) > DRIFT_SLACK:
        violated.append("drift_plus_positive")
    if np.sum(pm / k) < -DRIFT_SLACK:
        violated.append("drift_minus_negative")
    residual = float(np.max(np.abs(_identities(pp, k) - _identities(pm, k))))
    if residual > tol:
        violated.append("value_identities")

    return dataclasses.replace(
        record, admissible=not violated, identities_residual=residual, violated=tuple(violated)
    )
