"""Least-squares fits on log scales."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInput, ParameterError


@dataclass(frozen=True)
class PowerLawFit:
    """``ln y = log_prefactor + exponent * ln x``."""

    exponent: float
    log_prefactor: float
    max_abs_residual: float

    def __call__(self, x):
        return np.exp(self.log_prefactor) * np.asarray(x, dtype=float) ** self.exponent


@dataclass(frozen=True)
class ExponentialFit:
    """``ln y = intercept + slope / x``, the shape of Landau-Zener-type laws in 1/alpha."""

    slope: float
    intercept: float
    max_abs_residual: float


def _linear_lsq(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if x.size < 3:
        raise ParameterError("need at least 3 points")
    if np.ptp(x) == 0.0:
        raise DegenerateInput("all abscissae are equal")
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (icpt + slope * x)
    return float(slope), float(icpt), float(np.max(np.abs(resid)))


def fit_powerlaw(xs, ys) -> PowerLawFit:
    """Fit ``y = A x^k`` by least squares on ``(ln x, ln y)``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ParameterError("xs and ys differ in length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("power-law fit needs positive data")
    k, c, r = _linear_lsq(np.log(x), np.log(y))
    return PowerLawFit(k, c, r)


def fit_exponential_inverse(xs, ys) -> ExponentialFit:
    """Fit ``ln y`` linearly against ``1/x``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ParameterError("xs and ys differ in length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("exponential fit needs positive data")
    k, c, r = _linear_lsq(1.0 / x, np.log(y))
    return ExponentialFit(k, c, r)
