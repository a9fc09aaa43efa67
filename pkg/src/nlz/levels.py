"""Adiabatic eigenenergies and eigenstates of the nonlinear two-level system.

Eigenstates solve ``H(gamma, s) (a, b) = eps (a, b)`` with ``s`` computed
from the state itself.  Eliminating the amplitudes gives the quartic

    eps^4 + C eps^3 + (C^2/4 - V^2/4 - gamma^2/4) eps^2 - (V^2 C/4) eps - V^2 C^2/16 = 0.

Each real root is one eigenstate, and each eigenstate is a fixed point of
the classical flow; that correspondence supplies branch labels and a
well-conditioned fallback wherever the closed-form amplitudes degenerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classical import FixedPoint, fixed_points
from .errors import DegenerateFormula, NoWindow, ParameterError
from .model import Amplitudes, PhasePoint, SystemParams, amplitudes_from_bloch
from .numerics import real_roots_quartic

RESIDUAL_TOL = 1e-8

# branch names of the lower level; the upper level is always "upper"
BRANCH_OF_LABEL = {
    "P1": "OXT",
    "P3": "WT",
    "P4": "MXW",
    "P2": "upper",
    "P1+P3": "OXT",
    "P3+P4": "MXW",
}


@dataclass(frozen=True)
class LevelSet:
    """Eigenenergies at one bias, ascending, with multiplicity.

    Attributes
    ----------
    gamma : float
    energies : tuple of float
        2 or 4 entries; a double root at the window edge appears twice.
    states : tuple of Amplitudes
        One normalized eigenstate per energy.
    labels : tuple of str
        Fixed-point label of each state (``P1``..``P4``).
    branches : tuple of str
        Branch names: ``lower``/``upper`` without a loop, and
        ``OXT``/``MXW``/``WT``/``upper`` when ``C > V``.
    closed_form : tuple of bool
        Whether the state came from the closed-form amplitudes (True) or
        the fixed-point fallback (False).
    """

    gamma: float
    energies: tuple[float, ...]
    states: tuple[Amplitudes, ...]
    labels: tuple[str, ...]
    branches: tuple[str, ...]
    closed_form: tuple[bool, ...]

    @property
    def count(self) -> int:
        return len(self.energies)


def eigenenergy_quartic_coeffs(params: SystemParams, gamma: float) -> tuple[float, float, float, float, float]:
    """Coefficients, highest degree first, of the eigenenergy quartic."""
    V, C = params.V, params.C
    return (
        1.0,
        C,
        0.25 * (C * C - V * V - gamma * gamma),
        -0.25 * V * V * C,
        -V * V * C * C / 16.0,
    )


def gamma_c(params: SystemParams) -> float:
    """Half-width of the bias window with four eigenstates, ``(C^(2/3) - V^(2/3))^(3/2)``."""
    if params.C <= params.V:
        raise NoWindow(f"no loop for C <= V (C={params.C}, V={params.V})")
    return (params.C ** (2.0 / 3.0) - params.V ** (2.0 / 3.0)) ** 1.5


def eigen_residual(params: SystemParams, gamma: float, eps: float, state: Amplitudes) -> float:
    """Max-norm residual of ``H(gamma, s) psi - eps psi`` with ``s`` taken from ``psi``."""
    a, b = state.a, state.b
    d = 0.5 * (gamma + params.C * state.s)
    h = 0.5 * params.V
    r1 = d * a + h * b - eps * a
    r2 = h * a - d * b - eps * b
    return max(abs(r1), abs(r2))


def closed_form_state(params: SystemParams, gamma: float, eps: float) -> Amplitudes:
    """Real eigenstate from the closed-form amplitudes.

    ``a = sqrt(1/2 + gamma/(2C + 4 eps))`` and
    ``b = V sqrt(2C + 4 eps) / (4 eps sqrt(C + 2 eps + gamma))``,
    renormalized.

    Raises
    ------
    DegenerateFormula
        Near the removable singularities ``eps = 0``, ``2C + 4 eps = 0`` or
        ``C + 2 eps + gamma = 0``, or where a radicand goes negative.
    """
    V, C = params.V, params.C
    scale = V + C + abs(gamma)
    d1 = 2.0 * C + 4.0 * eps
    d2 = C + 2.0 * eps + gamma
    guard = 1e-7 * scale
    if abs(eps) < guard or d1 < guard or d2 < guard:
        raise DegenerateFormula(f"closed form singular at eps={eps}")
    rad_a = 0.5 + gamma / d1
    if rad_a < 0.0:
        raise DegenerateFormula("negative radicand for a")
    a = math.sqrt(rad_a)
    b = V * math.sqrt(d1) / (4.0 * eps * math.sqrt(d2))
    if not (math.isfinite(a) and math.isfinite(b)) or a == 0.0 and b == 0.0:
        raise DegenerateFormula("non-finite closed-form amplitudes")
    return Amplitudes.normalized(a, b)


def _fp_state(fp: FixedPoint) -> Amplitudes:
    return amplitudes_from_bloch(PhasePoint(fp.s_star, fp.theta_star))


def _linear_levels(params: SystemParams, gamma: float) -> LevelSet:
    H = np.array([[0.5 * gamma, 0.5 * params.V], [0.5 * params.V, -0.5 * gamma]])
    w, vecs = np.linalg.eigh(H)
    r = 0.5 * math.hypot(gamma, params.V)
    energies = (-r, r)
    states = []
    for k in range(2):
        v = vecs[:, k]
        if v[0] < 0 or (v[0] == 0 and v[1] < 0):
            v = -v
        states.append(Amplitudes.normalized(float(v[0]), float(v[1])))
    return LevelSet(gamma, energies, tuple(states), ("P1", "P2"), ("lower", "upper"), (False, False))


def adiabatic_levels(params: SystemParams, gamma: float) -> LevelSet:
    """All eigenenergies and eigenstates at bias ``gamma``.

    Energies are the real roots of the quartic.  States come from the
    closed form when it is well conditioned and passes the eigen-equation
    check; otherwise the matching classical fixed point supplies the state.
    """
    if not math.isfinite(gamma):
        raise ParameterError("gamma must be finite")
    if params.C == 0.0:
        return _linear_levels(params, gamma)

    roots = real_roots_quartic(*eigenenergy_quartic_coeffs(params, gamma)).expanded()
    fps = sorted(fixed_points(params, gamma), key=lambda f: f.epsilon)
    if len(fps) == len(roots):
        matched = list(zip(roots, fps))
    else:
        # A double root at the window edge is one saddle-node fixed point.
        # At gamma = 0 the quartic also has the double root -C/2 for every
        # C; when C < V it belongs to no eigenstate and is dropped here.
        tol = 1e-6 * (params.V + params.C + abs(gamma))
        matched = []
        used: set[int] = set()
        for e in roots:
            k = min(range(len(fps)), key=lambda i: abs(fps[i].epsilon - e))
            fp = fps[k]
            if abs(fp.epsilon - e) > tol or (k in used and "+" not in fp.label):
                continue
            used.add(k)
            matched.append((e, fp))

    loop = params.C > params.V
    energies, states, labels, branches, closed = [], [], [], [], []
    seen: dict[str, int] = {}
    for eps, fp in matched:
        ref = _fp_state(fp)
        state, used_cf = ref, False
        try:
            cf = closed_form_state(params, gamma, eps)
            overlap = abs(cf.a * ref.a.conjugate() + cf.b * ref.b.conjugate())
            if eigen_residual(params, gamma, eps, cf) < RESIDUAL_TOL and overlap > 1.0 - 1e-6:
                state, used_cf = cf, True
        except DegenerateFormula:
            pass
        label = fp.label
        if "+" in label:
            # report the two colliding branches of a double root separately
            k = seen.get(label, 0)
            seen[label] = k + 1
            label = label.split("+")[k % 2]
        energies.append(eps)
        states.append(state)
        labels.append(label)
        if loop:
            branches.append(BRANCH_OF_LABEL[label])
        else:
            branches.append("upper" if label == "P2" else "lower")
        closed.append(used_cf)
    return LevelSet(gamma, tuple(energies), tuple(states), tuple(labels), tuple(branches), tuple(closed))


def lower_eigenstate(params: SystemParams, gamma: float) -> Amplitudes:
    """The eigenstate continued from ``(a, b) = (1, 0)`` at ``gamma -> -inf``."""
    ls = adiabatic_levels(params, gamma)
    for lab, st in zip(ls.labels, ls.states):
        if lab == "P1":
            return st
    raise ParameterError(f"no P1 state at gamma={gamma}; it exists for gamma < gamma_c")


def level_curve(params: SystemParams, gamma_grid: Sequence[float]) -> list[LevelSet]:
    """Level sets on an ascending bias grid.

    Branch labels follow the classical fixed point each eigenstate maps
    to.  Those points move continuously with ``gamma``, so a branch keeps
    its label along the grid without any energy matching between points.
    """
    grid = np.asarray(gamma_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ParameterError("gamma grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("gamma grid must be strictly ascending")
    return [adiabatic_levels(params, float(g)) for g in grid]
