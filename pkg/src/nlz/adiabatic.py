"""Adiabatic-limit tunneling from the action of the homoclinic orbit.

For ``C > V`` the lower-level fixed point P1 meets the saddle P3 at
``gamma = gamma_c``.  The state, which carried zero action while it sat
on P1, is released onto the homoclinic orbit through the saddle-node
point.  Action is conserved from then on, so the final population is set
by the area enclosed by that orbit:

    Gamma_ad = I_c / 2 = A / (4 pi).

The area is integrated in the ``s`` parameterization.  At fixed ``s`` the
region ``{H_e > E_c}`` is an arc of phases centered on ``theta = pi``,
of length ``2 arccos(-g(s))``.  The region starts at the cusp ``s_c``
(a triple root of the turning-point quartic), and its far end is fixed
by the remaining fourth root, found by deflation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import OrbitTrace, orbit_trace, region_area, turning_quartic_coeffs, _h
from .errors import NoWindow, ParameterError, TraceFailure
from .levels import gamma_c as _gamma_c
from .model import PhasePoint, SystemParams


@dataclass(frozen=True)
class HomoclinicData:
    """Homoclinic-orbit quantities at the saddle-node bifurcation.

    Attributes
    ----------
    gamma_c, s_c, E_c : float
        Bias, population difference and energy of the saddle-node point.
    action : float
        Enclosed area over ``2 pi``.
    gamma_ad : float
        Adiabatic tunneling probability, ``action / 2``.
    s_far : float
        The fourth turning point of the ``E_c`` level set.
    topology : str
        ``"loop"`` when the region closes at ``s_far`` on ``theta = pi``,
        ``"cap"`` when it extends to the pole ``s = 1``.
    """

    gamma_c: float
    s_c: float
    E_c: float
    action: float
    gamma_ad: float
    s_far: float
    topology: str


def _require_window(params: SystemParams) -> None:
    if params.C <= params.V:
        raise NoWindow(f"no saddle-node collision for C <= V (C/V={params.ratio})")


def s_degenerate_simple(params: SystemParams) -> float:
    """``s_c = -sqrt(1 - (V/C)^(2/3))``."""
    _require_window(params)
    return -math.sqrt(1.0 - (params.V / params.C) ** (2.0 / 3.0))


def s_degenerate(params: SystemParams) -> float:
    """Population difference at the saddle-node point.

    Evaluates ``-(sqrt(1 - sigma)/2)(1 + sigma) - gamma_c/(2C)`` with
    ``sigma = (V/C)^(2/3)`` and checks it against the simplified form
    ``-sqrt(1 - sigma)``.
    """
    _require_window(params)
    sig = (params.V / params.C) ** (2.0 / 3.0)
    gc = _gamma_c(params)
    s_c = -0.5 * math.sqrt(1.0 - sig) * (1.0 + sig) - gc / (2.0 * params.C)
    alt = s_degenerate_simple(params)
    if abs(s_c - alt) > 1e-8:
        raise TraceFailure(f"s_c forms disagree: {s_c} vs {alt}")
    return s_c


def critical_energy(params: SystemParams) -> float:
    """``E_c = (C/2) s_c^2 + gamma_c s_c + V sqrt(1 - s_c^2)``, i.e. H_e at (s_c, pi)."""
    _require_window(params)
    s_c = s_degenerate(params)
    gc = _gamma_c(params)
    return 0.5 * params.C * s_c * s_c + gc * s_c + params.V * math.sqrt(1.0 - s_c * s_c)


def homoclinic(params: SystemParams) -> HomoclinicData:
    """Locate the homoclinic orbit and integrate its area.

    Raises
    ------
    NoWindow
        If ``C <= V``.
    TraceFailure
        If the cusp is not a triple turning point to working accuracy.
    """
    _require_window(params)
    V, C = params.V, params.C
    gc = _gamma_c(params)
    s_c = s_degenerate(params)
    E_c = critical_energy(params)

    c = turning_quartic_coeffs(params, gc, E_c)
    # the cusp is a triple root; the sum of roots gives the fourth one
    s_far = -c[1] / c[0] - 3.0 * s_c
    scale = sum(abs(ck) for ck in c)
    if abs(np.polyval(c, s_c)) > 1e-10 * scale or abs(np.polyval(c, s_far)) > 1e-8 * scale:
        raise TraceFailure("turning-point quartic does not factor as (s - s_c)^3 (s - s_far)")

    on_pi = abs(_h(V, C, gc, s_far, math.pi) - E_c) <= abs(_h(V, C, gc, s_far, 0.0) - E_c)
    if s_c < s_far < 1.0 and on_pi:
        hi, topology = s_far, "loop"
    else:
        hi, topology = 1.0, "cap"
    area = region_area(params, gc, E_c, s_c, hi, above=True, breaks=[s_far])
    action = area / (2.0 * math.pi)
    gamma_ad = min(1.0, max(0.0, 0.5 * action))
    return HomoclinicData(gc, s_c, E_c, action, gamma_ad, s_far, topology)


def homoclinic_action(params: SystemParams) -> float:
    """Enclosed area of the homoclinic orbit divided by ``2 pi``."""
    return homoclinic(params).action


def homoclinic_trace(params: SystemParams, theta_grid=None) -> OrbitTrace:
    """Sample the homoclinic level curve, pinched at ``(s_c, pi)``."""
    data = homoclinic(params)
    if theta_grid is None:
        theta_grid = np.linspace(0.0, 2.0 * math.pi, 721)
    hi = data.s_far if data.topology == "loop" else min(data.s_far, 1.0)
    seed = PhasePoint(0.5 * (data.s_c + hi), math.pi)
    return orbit_trace(params, data.gamma_c, data.E_c, theta_grid, seed=seed)


def gamma_adiabatic(params: SystemParams) -> float:
    """Tunneling probability in the limit of vanishing sweep rate.

    Zero for ``C <= V``: P1 then never meets a saddle and follows the
    lower level to the end.
    """
    if params.C <= params.V:
        return 0.0
    return homoclinic(params).gamma_ad


def gamma_ad_small_delta(delta: float) -> float:
    """Published small-``delta`` law ``(4 / 3 pi) delta^(3/2)``, ``delta = C/V - 1``."""
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    return 4.0 / (3.0 * math.pi) * delta**1.5


def gamma_ad_leading_order(delta: float) -> float:
    """Leading small-``delta`` behaviour of the exact action, ``(2 delta / 3)^(3/2)``.

    Near the threshold the cusp sits at ``s_c ~ -sqrt(2 delta / 3)``, the
    loop spans ``L = 4 sqrt(2 delta / 3)`` in ``s`` and its area is
    ``L^3 B(5/2, 3/2) = 4 pi (2 delta / 3)^(3/2)``.
    """
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    return (2.0 * delta / 3.0) ** 1.5


def gamma_ad_large_ratio(params: SystemParams) -> float:
    """Strong-coupling asymptote ``1 - (3/2)(V/C)^(2/3)``."""
    _require_window(params)
    return 1.0 - 1.5 * (params.V / params.C) ** (2.0 / 3.0)
