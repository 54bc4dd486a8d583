"""
Exception hierarchy. The CLI maps `exit_code` straight to the process exit status:
1 = malformed input, 2 = assumption violated, 3 = numerical failure.
"""
from __future__ import annotations


class GameError(Exception):
    exit_code = 1


class SpecFormatError(GameError):
    """Malformed game-spec or solution file (bad JSON, unknown or missing fields)."""

    exit_code = 1


# ---------- assumption violations (exit 2) ----------


class AssumptionViolation(GameError):
    exit_code = 2


class NonFiniteCost(AssumptionViolation):
    def __init__(self, x: float, what: str):
        super().__init__(f"{what} is not finite at x={x!r}")
        self.x = x
        self.what = what


class Unsupported(AssumptionViolation):
    """The requested routine has no construction for this regime or these weights."""


class DomainError(AssumptionViolation):
    pass


class OriginError(DomainError):
    def __init__(self) -> None:
        super().__init__("p = (0, 0) belongs to no region")


# ---------- numerical failures (exit 3) ----------


class NumericalFailure(GameError):
    exit_code = 3


class SingularGradient(NumericalFailure):
    def __init__(self, p, delta: float):
        super().__init__(f"Delta(p)={delta:.3e} too small at p={tuple(float(v) for v in p)}")
        self.p = tuple(float(v) for v in p)
        self.delta = delta


class InvariantViolation(NumericalFailure):
    def __init__(self, x: float, p, region: str):
        super().__init__(
            f"iterate left {region} at x={x:.6g}, p={tuple(round(float(v), 9) for v in p)}"
        )
        self.x = x
        self.p = tuple(float(v) for v in p)


class NoConvergence(NumericalFailure):
    def __init__(self, sup_diff: float, nu: float | None = None, where: str = "nu-limit"):
        limit = f"by nu={nu:g}" if nu is not None else f"in {where}"
        super().__init__(f"no convergence {limit} (sup-difference {sup_diff:.3e})")
        self.sup_diff = sup_diff
        self.nu = nu


class OrbitNotClosed(NumericalFailure):
    def __init__(self, closure_error: float):
        super().__init__(f"return map does not close (error {closure_error:.3e})")
        self.closure_error = closure_error


class NumericalBreakdown(NumericalFailure):
    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = None if state is None else tuple(float(v) for v in state)


class WindowExceeded(NumericalFailure):
    def __init__(self, t: float, x: float):
        super().__init__(f"trajectory left the solution window at t={t:.6g} (x={x:.6g})")
        self.t = t
        self.x = x


class WindowTooSmall(NumericalFailure):
    pass
