"""Adaptive quadrature on finite and half-infinite intervals."""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from ..errors import NoConvergence, ParameterError

DEFAULT_QUAD_TOL = 1e-10


def quad_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    limit: int = 500,
    points=None,
) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Gauss-Kronrod bisection.

    QUADPACK's bisection concentrates nodes toward integrable endpoint
    singularities of the ``(x - a)^p`` type.  An infinite upper limit is
    mapped onto ``[0, 1)`` with ``x = a + t / (1 - t)``.

    Parameters
    ----------
    f : callable
    a, b : float
        Limits; ``b`` may be ``math.inf``.
    tol : float
        Absolute error target.
    limit : int
        Maximum number of subintervals.
    points : sequence of float, optional
        Interior break points (finite intervals only).

    Raises
    ------
    NoConvergence
        If QUADPACK flags a failure and its error estimate exceeds both
        ``tol`` and the rounding floor of the result.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if math.isinf(a):
        raise ParameterError("lower limit must be finite")
    if b == a:
        return 0.0
    if math.isinf(b):
        if b < 0:
            raise ParameterError("upper limit must exceed lower limit")

        def g(t: float) -> float:
            if t >= 1.0:
                return 0.0
            u = 1.0 - t
            return f(a + t / u) / (u * u)

        lo, hi, points = 0.0, 1.0, None
    else:
        g, lo, hi = f, a, b

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        out = quad(
            g, lo, hi, epsabs=tol, epsrel=0.0, limit=limit, points=points, full_output=1
        )
    val, err, info = out[0], out[1], out[2]
    ier = 0 if len(out) == 3 else 1
    # a roundoff report with an error estimate at the rounding floor is fine
    floor = max(tol, 1e3 * np.finfo(float).eps * max(1.0, abs(val)))
    if ier and not err <= floor:
        raise NoConvergence(
            f"quadrature did not reach tol={tol:g} (estimate {err:g}, {info['last']} subintervals)"
        )
    if not math.isfinite(val):
        raise NoConvergence("quadrature produced a non-finite value")
    return float(val)
