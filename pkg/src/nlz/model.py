"""The nonlinear two-level system and its state representations.

Hamiltonian (hbar = 1)::

    H = [[ gamma/2 + (C/2) s,   V/2                ],
         [ V/2,                 -gamma/2 - (C/2) s ]],   s = |b|^2 - |a|^2

The complex amplitudes are integrated as four real components
``y = (Re a, Im a, Re b, Im b)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import ParameterError, PhaseUndefined, PoleState

NORM_TOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """Model constants: coupling ``V > 0`` and nonlinearity ``C >= 0``.

    The level bias ``gamma`` is a per-call argument.
    """

    V: float
    C: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.V) and self.V > 0):
            raise ParameterError(f"V must be finite and > 0, got {self.V}")
        if not (math.isfinite(self.C) and self.C >= 0):
            raise ParameterError(f"C must be finite and >= 0, got {self.C}")

    @property
    def ratio(self) -> float:
        """C / V."""
        return self.C / self.V

    @classmethod
    def from_ratio(cls, ratio: float, V: float = 1.0) -> "SystemParams":
        return cls(V=V, C=ratio * V)


@dataclass(frozen=True)
class Amplitudes:
    """Normalized probability amplitudes ``(a, b)`` of the two levels."""

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        n = abs(a) ** 2 + abs(b) ** 2
        if not abs(n - 1.0) <= NORM_TOL:
            raise ParameterError(f"amplitudes not normalized: |a|^2+|b|^2 = {n!r}")

    @classmethod
    def normalized(cls, a: complex, b: complex) -> "Amplitudes":
        n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if n == 0.0:
            raise ParameterError("zero vector cannot be normalized")
        return cls(a / n, b / n)

    @classmethod
    def from_real(cls, y) -> "Amplitudes":
        """From the real 4-vector layout used by the integrator."""
        return cls(complex(y[0], y[1]), complex(y[2], y[3]))

    def to_real(self) -> np.ndarray:
        return np.array([self.a.real, self.a.imag, self.b.real, self.b.imag])

    @property
    def s(self) -> float:
        return abs(self.b) ** 2 - abs(self.a) ** 2


@dataclass(frozen=True)
class PhasePoint:
    """Classical state: population difference ``s`` and relative phase ``theta``."""

    s: float
    theta: float

    def __post_init__(self):
        if not -1.0 <= self.s <= 1.0:
            raise ParameterError(f"s must lie in [-1, 1], got {self.s}")


def default_gamma_max(params: SystemParams) -> float:
    return max(40.0 * params.V, 20.0 * params.C, 10.0)


@dataclass(frozen=True)
class SweepSpec:
    """Linear sweep ``gamma = alpha * t`` from ``-gamma_max`` to ``+gamma_max``."""

    alpha: float
    gamma_max: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not (math.isfinite(self.gamma_max) and self.gamma_max > 0):
            raise ParameterError(f"gamma_max must be > 0, got {self.gamma_max}")

    @classmethod
    def for_params(
        cls,
        params: SystemParams,
        alpha: float,
        gamma_max: float | None = None,
        allow_short: bool = False,
    ) -> "SweepSpec":
        """Sweep with the default window ``max(40 V, 20 C, 10)``.

        An explicit ``gamma_max`` below ``20 max(V, C)`` is rejected unless
        ``allow_short`` is set.
        """
        if gamma_max is None:
            gamma_max = default_gamma_max(params)
        elif not allow_short and gamma_max < 20.0 * max(params.V, params.C):
            raise ParameterError(
                f"gamma_max={gamma_max} < 20*max(V, C); pass allow_short=True to override"
            )
        return cls(alpha=alpha, gamma_max=gamma_max)

    @property
    def t_span(self) -> tuple[float, float]:
        return -self.gamma_max / self.alpha, self.gamma_max / self.alpha


def hamiltonian(params: SystemParams, gamma: float, s: float) -> np.ndarray:
    """The 2x2 matrix with the diagonal evaluated at population difference ``s``."""
    d = 0.5 * (gamma + params.C * s)
    h = 0.5 * params.V
    return np.array([[d, h], [h, -d]])


def schrodinger_rhs(
    params: SystemParams, gamma: float, state: Amplitudes
) -> tuple[complex, complex]:
    """``(da/dt, db/dt) = -i H(gamma, s) (a, b)``."""
    a, b = state.a, state.b
    d = 0.5 * (gamma + params.C * state.s)
    h = 0.5 * params.V
    return -1j * (d * a + h * b), -1j * (h * a - d * b)


@numba.njit(cache=True, nogil=True)
def schrodinger_rhs_real(t, y, args):
    """Real-component right-hand side; ``args = (V, C, alpha, gamma0)``, gamma = gamma0 + alpha t."""
    V, C, alpha, g0 = args[0], args[1], args[2], args[3]
    s = y[2] * y[2] + y[3] * y[3] - y[0] * y[0] - y[1] * y[1]
    d = 0.5 * (g0 + alpha * t + C * s)
    h = 0.5 * V
    out = np.empty(4)
    out[0] = d * y[1] + h * y[3]
    out[1] = -(d * y[0] + h * y[2])
    out[2] = h * y[1] - d * y[3]
    out[3] = -(h * y[0] - d * y[2])
    return out


def wrap_angle(theta):
    """Reduce to (-pi, pi]."""
    r = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    r = np.where(r == -np.pi, np.pi, r)
    return float(r) if r.ndim == 0 else r


def bloch_from_amplitudes(state: Amplitudes) -> PhasePoint:
    """``s = |b|^2 - |a|^2`` and ``theta = arg b - arg a`` in (-pi, pi]."""
    if state.a == 0 or state.b == 0:
        raise PhaseUndefined("relative phase undefined when an amplitude vanishes")
    s = min(1.0, max(-1.0, state.s))
    theta = cmath.phase(state.b * state.a.conjugate())
    return PhasePoint(s, wrap_angle(theta))


def amplitudes_from_bloch(p: PhasePoint) -> Amplitudes:
    """Inverse of :func:`bloch_from_amplitudes` with the gauge ``arg a = 0``."""
    if not -1.0 < p.s < 1.0:
        raise PoleState(f"s = {p.s} is a pole of the phase representation")
    a = math.sqrt((1.0 - p.s) / 2.0)
    b = math.sqrt((1.0 + p.s) / 2.0) * cmath.exp(1j * p.theta)
    return Amplitudes.normalized(a, b)


def bec_doublewell_params(
    K: float,
    E1_0: float,
    E2_0: float,
    U1: float,
    U2: float,
    N_T: float,
    hbar: float = 1.0,
) -> tuple[float, float, float]:
    """Map two-mode double-well constants onto ``(V, gamma, C)``.

    ``V = 2K/hbar``, ``gamma = -[(E1_0 - E2_0) - (U1 - U2) N_T / 2] / hbar``
    and ``C = (U1 + U2) N_T / (2 hbar)``.
    """
    if not K > 0:
        raise ParameterError("K must be > 0")
    if not N_T > 0:
        raise ParameterError("N_T must be > 0")
    if not hbar > 0:
        raise ParameterError("hbar must be > 0")
    V = 2.0 * K / hbar
    gamma = -((E1_0 - E2_0) - (U1 - U2) * N_T / 2.0) / hbar
    C = (U1 + U2) * N_T / (2.0 * hbar)
    return V, gamma, C
