"""Classical Josephson-Hamiltonian picture of the mean-field dynamics.

With ``s = |b|^2 - |a|^2`` and ``theta = arg b - arg a`` the amplitude
equations become canonical with

    H_e(s, theta) = (C/2) s^2 + gamma s - V sqrt(1 - s^2) cos(theta)

    ds/dt     = -dH_e/dtheta = -V sqrt(1 - s^2) sin(theta)
    dtheta/dt =  dH_e/ds     =  gamma + C s + V s cos(theta) / sqrt(1 - s^2)

Level sets ``H_e = E`` are handled in the ``s`` parameterization
``cos(theta) = g(s) = ((C/2) s^2 + gamma s - E) / (V sqrt(1 - s^2))``.
Their turning points solve the quartic
``((C/2) s^2 + gamma s - E)^2 = V^2 (1 - s^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .errors import HyperbolicPoint, NoIntersection, NoWindow, ParameterError, PoleState
from .model import PhasePoint, SystemParams, wrap_angle
from .numerics import find_root_scalar, quad_adaptive, real_roots_poly

ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"
DEGENERATE = "degenerate"

# |gamma -+ gamma_c| below this (relative to V + C) is the saddle-node point
_SN_TOL = 1e-10


def josephson_energy(params: SystemParams, gamma: float, p: PhasePoint) -> float:
    """``H_e = (C/2) s^2 + gamma s - V sqrt(1 - s^2) cos(theta)``."""
    s = p.s
    return 0.5 * params.C * s * s + gamma * s - params.V * math.sqrt(max(0.0, 1.0 - s * s)) * math.cos(p.theta)


def _h(V, C, gamma, s, theta):
    return 0.5 * C * s * s + gamma * s - V * math.sqrt(max(0.0, 1.0 - s * s)) * math.cos(theta)


def eom_rhs(params: SystemParams, gamma: float, p: PhasePoint) -> tuple[float, float]:
    """``(ds/dt, dtheta/dt)`` of the Josephson flow."""
    s = p.s
    if abs(s) >= 1.0:
        raise PoleState("dtheta/dt is singular at s = +-1")
    w = math.sqrt(1.0 - s * s)
    V = params.V
    return -V * w * math.sin(p.theta), gamma + params.C * s + V * s * math.cos(p.theta) / w


@numba.njit(cache=True, nogil=True)
def eom_rhs_real(t, y, args):
    """Josephson flow for the integrator; ``args = (V, C, alpha, gamma0)``."""
    V, C, alpha, g0 = args[0], args[1], args[2], args[3]
    s = y[0]
    w = math.sqrt(1.0 - s * s)
    out = np.empty(2)
    out[0] = -V * w * math.sin(y[1])
    out[1] = g0 + alpha * t + C * s + V * s * math.cos(y[1]) / w
    return out


def jacobian(params: SystemParams, gamma: float, p: PhasePoint) -> np.ndarray:
    """Jacobian of :func:`eom_rhs` with respect to ``(s, theta)``."""
    s, th = p.s, p.theta
    if abs(s) >= 1.0:
        raise PoleState("Jacobian is singular at s = +-1")
    V = params.V
    w = math.sqrt(1.0 - s * s)
    j11 = V * s * math.sin(th) / w
    return np.array(
        [
            [j11, -V * w * math.cos(th)],
            [params.C + V * math.cos(th) / w**3, -j11],
        ]
    )


# fixed points ---------------------------------------------------------------


@dataclass(frozen=True)
class FixedPoint:
    """Stationary point of the Josephson flow.

    Attributes
    ----------
    s_star, theta_star : float
        Location; ``theta_star`` is exactly ``0.0`` or ``math.pi``.
    stability : str
        ``"elliptic"``, ``"hyperbolic"`` or ``"degenerate"`` (saddle-node).
    omega_star : float
        Small-oscillation frequency; 0 unless elliptic.
    label : str
        ``P1``..``P4``; a saddle-node point carries both colliding labels,
        e.g. ``"P1+P3"``.
    epsilon : float
        Eigenenergy of the matching nonlinear eigenstate,
        ``gamma/2 + C s/2 + (V/2) b/a``.
    """

    s_star: float
    theta_star: float
    stability: str
    omega_star: float
    label: str
    epsilon: float

    @property
    def point(self) -> PhasePoint:
        return PhasePoint(self.s_star, self.theta_star)


def _fp_condition(V, C, gamma, s, cos_th):
    return gamma + C * s + V * s * cos_th / math.sqrt(1.0 - s * s)


def _branch_root(V, C, gamma, cos_th, lo, hi):
    """Root of the unsquared condition on ``(lo, hi)``, where it is monotone."""
    f = lambda x: _fp_condition(V, C, gamma, x, cos_th)  # noqa: E731
    # pull the ends in from the poles until the sign is resolved
    for k in range(1, 60):
        a = lo if lo > -1.0 else -1.0 + (hi + 1.0) * 2.0**-k
        b = hi if hi < 1.0 else 1.0 - (1.0 - lo) * 2.0**-k
        if (f(a) > 0.0) != (f(b) > 0.0) or f(a) == 0.0 or f(b) == 0.0:
            return find_root_scalar(f, a, b, tol=1e-15)
    raise ParameterError("fixed point too close to a pole to resolve")


def fixed_point_quartic_coeffs(params: SystemParams, gamma: float) -> tuple[float, ...]:
    """Fixed-point quartic multiplied through by ``C^2`` (degree drops at C = 0)."""
    C, V, g = params.C, params.V, gamma
    return (C * C, 2.0 * g * C, -(C * C - g * g - V * V), -2.0 * g * C, -g * g)


def omega_star(params: SystemParams, s_star: float, theta_star: float = math.pi) -> float:
    """Small-oscillation frequency around a fixed point.

    On ``theta = pi``: ``V sqrt(1/(1 - s^2) - (C/V) sqrt(1 - s^2))``; on
    ``theta = 0`` the sign of the second term flips.

    Raises
    ------
    HyperbolicPoint
        If the radicand is negative (a saddle).
    """
    if abs(s_star) >= 1.0:
        raise PoleState("omega* undefined at s = +-1")
    V, C = params.V, params.C
    w = math.sqrt(1.0 - s_star * s_star)
    sign = -1.0 if math.cos(theta_star) < 0 else 1.0
    rad = 1.0 / (w * w) + sign * (C / V) * w
    if rad < 0.0:
        if rad > -1e-12 * (1.0 / (w * w) + (C / V) * w):
            return 0.0
        raise HyperbolicPoint(f"radicand {rad:g} < 0 at s*={s_star}")
    return V * math.sqrt(rad)


def omega_zero_locus(params: SystemParams) -> float:
    """``s0* = sqrt(1 - (V/C)^(2/3))`` where the theta = pi radicand vanishes (C > V)."""
    if params.C <= params.V:
        raise NoWindow("the radicand only vanishes for C > V")
    return math.sqrt(1.0 - (params.V / params.C) ** (2.0 / 3.0))


def fixed_points(params: SystemParams, gamma: float) -> list[FixedPoint]:
    """All fixed points at bias ``gamma``, sorted by (theta*, s*).

    Every fixed point is a real root of the squared quartic
    (:func:`fixed_point_quartic_coeffs`) that also satisfies the unsquared
    condition ``gamma + C s + V s cos(theta)/sqrt(1 - s^2) = 0`` on
    ``theta = 0`` or ``theta = pi``.  The roots are located on the
    unsquared condition directly.  On ``theta = 0`` it is increasing in
    ``s``, so P2 is unique.  On ``theta = pi`` it is monotone between its
    turning points ``-s0``, ``+s0`` (``s0`` from :func:`omega_zero_locus`),
    where it takes the values ``gamma - gamma_c`` and ``gamma + gamma_c``.
    Each monotone piece holds at most one root, so counts and labels are
    exact even where the quartic has clustered roots (``C ~ V``,
    ``gamma ~ 0``) or huge spurious ones (``C -> 0``).
    """
    V, C = params.V, params.C
    if not math.isfinite(gamma):
        raise ParameterError("gamma must be finite")
    found: list[tuple[float, float, str, bool]] = []  # (s, theta, label, degenerate)
    found.append((_branch_root(V, C, gamma, 1.0, -1.0, 1.0), 0.0, "P2", False))

    if C <= V:
        found.append((_branch_root(V, C, gamma, -1.0, -1.0, 1.0), math.pi, "P1", False))
    else:
        s0 = omega_zero_locus(params)
        gc = (C ** (2.0 / 3.0) - V ** (2.0 / 3.0)) ** 1.5
        tol = _SN_TOL * (V + C)
        lo_val, hi_val = gamma - gc, gamma + gc  # condition at -s0 and +s0
        if abs(lo_val) <= tol:
            found.append((-s0, math.pi, "P1+P3", True))
        else:
            if lo_val < 0:
                found.append((_branch_root(V, C, gamma, -1.0, -1.0, -s0), math.pi, "P1", False))
                if hi_val > tol:
                    found.append((_branch_root(V, C, gamma, -1.0, -s0, s0), math.pi, "P3", False))
        if abs(hi_val) <= tol:
            found.append((s0, math.pi, "P3+P4", True))
        elif hi_val > 0:
            found.append((_branch_root(V, C, gamma, -1.0, s0, 1.0), math.pi, "P4", False))

    pts = [_classify(params, gamma, s_, th, degen, label) for s_, th, label, degen in found]
    pts.sort(key=lambda p: (p.theta_star, p.s_star))
    return pts


def _classify(params, gamma, s, th, degen, label) -> FixedPoint:
    J = jacobian(params, gamma, PhasePoint(s, th))
    lam2 = J[0, 0] ** 2 + J[0, 1] * J[1, 0]
    scale = params.V * (params.V + params.C)
    cos_th = math.cos(th)
    eps = 0.5 * gamma + 0.5 * params.C * s + 0.5 * params.V * math.copysign(
        math.sqrt((1.0 + s) / (1.0 - s)), cos_th
    )
    if degen or abs(lam2) <= 1e-16 * scale * scale:
        return FixedPoint(s, th, DEGENERATE, 0.0, label, eps)
    if lam2 < 0:
        return FixedPoint(s, th, ELLIPTIC, math.sqrt(-lam2), label, eps)
    return FixedPoint(s, th, HYPERBOLIC, 0.0, label, eps)


# level-set geometry ---------------------------------------------------------

POLE, TURN_PI, TURN_ZERO = "pole", "pi", "zero"


@dataclass(frozen=True)
class LevelPiece:
    """One connected component of ``H_e = E``, described by its s-range.

    ``lo_end``/``hi_end`` say how the curve ends in ``s``: at a turning
    point on ``theta = pi`` (``"pi"``), on ``theta = 0`` (``"zero"``), or at
    a pole of the cylinder (``"pole"``).  Both ends on the same line make
    a libration loop; mixed ends make a rotation around the cylinder.
    """

    lo: float
    hi: float
    lo_end: str
    hi_end: str

    @property
    def kind(self) -> str:
        if POLE in (self.lo_end, self.hi_end):
            return "open"
        if self.lo_end == self.hi_end:
            return "libration_pi" if self.lo_end == TURN_PI else "libration_zero"
        return "rotation"


def turning_quartic_coeffs(params: SystemParams, gamma: float, energy: float, cos2: float = 1.0):
    """Coefficients of ``((C/2)s^2 + gamma s - E)^2 - V^2 cos2 (1 - s^2)``."""
    C, V, g, E = params.C, params.V, gamma, energy
    v2 = V * V * cos2
    return (0.25 * C * C, C * g, g * g - C * E + v2, -2.0 * g * E, E * E - v2)


def _g(V, C, gamma, E, s):
    w = math.sqrt(max(0.0, 1.0 - s * s))
    num = 0.5 * C * s * s + gamma * s - E
    if w == 0.0:
        return math.copysign(math.inf, num) if num != 0 else 0.0
    return num / (V * w)


def _turning_points(params, gamma, energy):
    """Turning points in (-1, 1) tagged by the line they sit on."""
    V, C = params.V, params.C
    rr = real_roots_poly(turning_quartic_coeffs(params, gamma, energy))
    out = []
    for r, m in zip(rr.roots, rr.multiplicities):
        if -1.0 < r < 1.0:
            d_pi = abs(_h(V, C, gamma, r, math.pi) - energy)
            d_0 = abs(_h(V, C, gamma, r, 0.0) - energy)
            out.append((r, TURN_PI if d_pi <= d_0 else TURN_ZERO, m))
    return out


def level_pieces(params: SystemParams, gamma: float, energy: float) -> list[LevelPiece]:
    """Connected components of the level set ``H_e = energy``, ascending in s."""
    V, C = params.V, params.C
    tps = _turning_points(params, gamma, energy)
    edges = [(-1.0, POLE)] + [(r, tag) for r, tag, _ in tps] + [(1.0, POLE)]
    pieces = []
    for (lo, lo_t), (hi, hi_t) in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        if abs(_g(V, C, gamma, energy, mid)) <= 1.0:
            pieces.append(LevelPiece(lo, hi, lo_t, hi_t))
    return pieces


def _measure_above(V, C, gamma, E, s):
    """theta-measure of {H_e > E} at fixed s (an arc centered on theta = pi)."""
    g = _g(V, C, gamma, E, s)
    return 2.0 * math.acos(-min(1.0, max(-1.0, g)))


def _measure_below(V, C, gamma, E, s):
    g = _g(V, C, gamma, E, s)
    return 2.0 * math.acos(min(1.0, max(-1.0, g)))


def region_area(
    params: SystemParams,
    gamma: float,
    energy: float,
    lo: float,
    hi: float,
    above: bool = True,
    breaks: Sequence[float] = (),
    tol: float = 1e-11,
) -> float:
    """Area of ``{H_e > E}`` (or ``{H_e < E}``) restricted to ``lo <= s <= hi``."""
    V, C = params.V, params.C
    f = _measure_above if above else _measure_below
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += quad_adaptive(lambda s: f(V, C, gamma, energy, s), a, b, tol=tol, limit=1000)
    return total


def enclosed_area(params: SystemParams, gamma: float, energy: float, seed: PhasePoint) -> float:
    """Area of the connected component of ``{H_e > E}`` or ``{H_e < E}`` containing ``seed``.

    The side is fixed by the sign of ``H_e(seed) - E``.  A region that
    reaches a pole of the cylinder includes the full polar cap.
    """
    V, C = params.V, params.C
    h0 = josephson_energy(params, gamma, seed) - energy
    if h0 == 0.0:
        raise ParameterError("seed lies on the level set; pick a point inside the region")
    above = h0 > 0
    tps = _turning_points(params, gamma, energy)
    # the region's s-range ends where its theta-arc shrinks to zero
    wall = TURN_PI if above else TURN_ZERO
    lo = max([r for r, tag, _ in tps if tag == wall and r <= seed.s], default=-1.0)
    hi = min([r for r, tag, _ in tps if tag == wall and r >= seed.s], default=1.0)
    breaks = [r for r, _, _ in tps]
    return region_area(params, gamma, energy, lo, hi, above=above, breaks=breaks)


# orbit traces ---------------------------------------------------------------


@dataclass(frozen=True)
class OrbitTrace:
    """Samples along one closed component of a level set of ``H_e``."""

    points: tuple[PhasePoint, ...]
    energy: float
    closed: bool
    kind: str = "libration_pi"

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.array([p.s for p in self.points])
        th = np.array([p.theta for p in self.points])
        return s, th


def _pick_piece(pieces: list[LevelPiece], seed: PhasePoint | None) -> LevelPiece:
    if seed is None:
        if len(pieces) != 1:
            raise ParameterError(f"{len(pieces)} components at this energy; supply a seed")
        return pieces[0]
    hits = [pc for pc in pieces if pc.lo <= seed.s <= pc.hi]
    if not hits:
        raise NoIntersection(f"no level-set component passes over s = {seed.s}")
    # on a shared pinch point prefer the component above it
    return hits[-1]


def orbit_trace(
    params: SystemParams,
    gamma: float,
    energy: float,
    theta_grid,
    seed: PhasePoint | None = None,
) -> OrbitTrace:
    """Sample the level curve ``H_e = energy`` on a grid of phases.

    For each ``theta`` the quartic
    ``((C/2)s^2 + gamma s - E)^2 = V^2 (1 - s^2) cos^2(theta)`` is solved,
    roots failing the unsquared equation are dropped, and only roots on
    the component whose s-range covers ``seed.s`` are kept.  Phases where
    the component has no point (outside a libration window) are skipped.

    Returns
    -------
    OrbitTrace
        Librations are ordered lower branch by ascending phase, then upper
        branch by descending phase; rotations by ascending phase.

    Raises
    ------
    NoIntersection
        If no grid phase meets the selected component.
    """
    V, C = params.V, params.C
    pieces = level_pieces(params, gamma, energy)
    if not pieces:
        raise NoIntersection(f"H_e never equals {energy} at gamma={gamma}")
    piece = _pick_piece(pieces, seed)
    kind = piece.kind
    center = math.pi if kind == "libration_pi" else 0.0
    th = np.asarray(theta_grid, dtype=float).ravel()
    th = np.unique(center + wrap_angle(th - center))

    pad = 1e-9 * (piece.hi - piece.lo) + 1e-12
    escale = abs(energy) + abs(gamma) + C + V
    lower, upper = [], []
    for t in th:
        c = math.cos(t)
        rr = real_roots_poly(turning_quartic_coeffs(params, gamma, energy, c * c))
        good = sorted(
            r
            for r in rr.roots
            if piece.lo - pad <= r <= piece.hi + pad
            and -1.0 <= r <= 1.0
            and abs(_h(V, C, gamma, r, t) - energy) <= 1e-9 * escale
        )
        if not good:
            continue
        if kind == "rotation" or kind == "open":
            lower.append((good[0], t))
        else:
            lower.append((good[0], t))
            if len(good) > 1 and good[-1] - good[0] > pad:
                upper.append((good[-1], t))
    if not lower:
        raise NoIntersection("no grid phase meets the selected component")
    seq = lower + upper[::-1]
    pts = tuple(PhasePoint(min(1.0, max(-1.0, s)), float(t)) for s, t in seq)
    return OrbitTrace(pts, energy, kind != "open", kind)


@dataclass(frozen=True)
class Portrait:
    """Fixed points plus level-curve traces at one bias."""

    gamma: float
    fixed_points: list[FixedPoint]
    orbits: list[OrbitTrace]


def portrait(
    params: SystemParams,
    gamma: float,
    energy_levels: Sequence[float] = (),
    theta_grid=None,
) -> Portrait:
    """Phase portrait: all fixed points and every component of each requested level."""
    if theta_grid is None:
        theta_grid = np.linspace(-math.pi, math.pi, 361)
    orbits: list[OrbitTrace] = []
    for E in energy_levels:
        for pc in level_pieces(params, gamma, E):
            seed = PhasePoint(0.5 * (pc.lo + pc.hi), math.pi)
            try:
                orbits.append(orbit_trace(params, gamma, E, theta_grid, seed=seed))
            except NoIntersection:
                continue
    return Portrait(gamma, fixed_points(params, gamma), orbits)
