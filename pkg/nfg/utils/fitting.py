"""
Least-squares helpers shared by the blow-up tail fit, the growth audit and the
contraction probe. No external deps beyond NumPy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class OLSResult:
    beta: np.ndarray        # [intercept, slope]
    y_hat: np.ndarray
    resid: np.ndarray
    r2: float
    sigma: float            # residual std (ddof=2)

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def slope(self) -> float:
        return float(self.beta[1])


def ols_fit(x: np.ndarray, y: np.ndarray) -> OLSResult:
    """
    Fit y = a + b*x via ordinary least squares (closed form).

    - Ignores non-finite values by masking both x & y.
    - Adds intercept automatically.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    m = np.isfinite(x) & np.isfinite(y)
    x, y = x[m], y[m]

    if x.size < 3:
        raise ValueError("Need at least 3 finite points for OLS")

    X = np.c_[np.ones_like(x), x]
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    y_hat = X @ beta
    resid = y - y_hat

    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sigma = float(np.std(resid, ddof=2)) if x.size > 2 else 0.0

    return OLSResult(beta=beta, y_hat=y_hat, resid=resid, r2=r2, sigma=sigma)


def loglog_slope(x: np.ndarray, y: np.ndarray) -> OLSResult:
    """Power-law exponent: OLS of log|y| on log|x| over entries where both are nonzero."""
    x = np.abs(np.asarray(x, dtype=float).reshape(-1))
    y = np.abs(np.asarray(y, dtype=float).reshape(-1))
    m = (x > 0) & (y > 0)
    return ols_fit(np.log(x[m]), np.log(y[m]))


def exp_rate(s: np.ndarray, w: np.ndarray) -> OLSResult:
    """Exponential rate: OLS of log|w| on s. A contraction shows up as a negative slope."""
    s = np.asarray(s, dtype=float).reshape(-1)
    w = np.abs(np.asarray(w, dtype=float).reshape(-1))
    m = w > 0
    return ols_fit(s[m], np.log(w[m]))
