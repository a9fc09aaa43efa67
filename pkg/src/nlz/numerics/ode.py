"""Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)).

The stepping loop is compiled with numba so that long, slow sweeps
(millions of steps) stay cheap.  Right-hand sides have the signature
``rhs(t, y, args) -> ndarray`` where ``args`` is a float64 array.  A
numba-jitted ``rhs`` runs fully compiled; a plain Python callable is
accepted too and drives the same algorithm through the interpreter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numba.extending import is_jitted
from scipy.integrate._ivp import dop853_coefficients as _dop

from ..errors import NoConvergence, NumericalError, ParameterError, StepUnderflow

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

_A = np.ascontiguousarray(_dop.A[:12, :12], dtype=np.float64)
_B = np.ascontiguousarray(_dop.B, dtype=np.float64)
_C = np.ascontiguousarray(_dop.C[:12], dtype=np.float64)
_E3 = np.ascontiguousarray(_dop.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_dop.E5, dtype=np.float64)

_OK, _UNDERFLOW, _MAXSTEPS, _NONFINITE = 0, 1, 2, 3


@dataclass(frozen=True)
class OdeSolution:
    """Sampled solution of an initial value problem.

    Attributes
    ----------
    times : ndarray, shape (m,)
        Strictly ascending sample times, first ``t0`` and last ``t1`` when
        the accepted-step mesh is stored.
    states : ndarray, shape (m, n)
        State vector at each sample time.
    accepted_steps, rejected_steps : int
        Step counters.
    max_norm_drift : float
        Largest ``|y.y - y0.y0|`` seen at any accepted step.  For unitary
        dynamics written in real components this is the norm error.
    """

    times: np.ndarray
    states: np.ndarray
    accepted_steps: int
    rejected_steps: int
    max_norm_drift: float

    @property
    def y_final(self) -> np.ndarray:
        return self.states[-1]


def _dop853_core(
    rhs, y0, t0, t1, rtol, atol, args, h0, t_eval, record_all, max_steps,
    A, B, Cn, E3, E5,
):
    n = y0.size
    y = y0.copy()
    t = t0
    n0 = 0.0
    for i in range(n):
        n0 += y[i] * y[i]

    K = np.empty((13, n))
    K[0] = rhs(t, y, args)
    ys = np.empty(n)
    yn = np.empty(n)

    if record_all:
        cap = 1024
    else:
        cap = t_eval.size
    times = np.empty(cap)
    states = np.empty((cap, n))
    nrec = 0
    k_eval = 0
    if record_all:
        times[0] = t
        states[0] = y
        nrec = 1
    else:
        while k_eval < t_eval.size and t_eval[k_eval] <= t:
            times[nrec] = t_eval[k_eval]
            states[nrec] = y
            nrec += 1
            k_eval += 1

    h = h0
    nacc = 0
    nrej = 0
    maxdrift = 0.0
    status = 0
    span = t1 - t0
    while t < t1:
        if nacc + nrej >= max_steps:
            status = 2
            break
        # land exactly on the end point and on requested output times
        target = t1
        if not record_all and k_eval < t_eval.size and t_eval[k_eval] < t1:
            target = t_eval[k_eval]
        hit = False
        h_nat = h
        if t + h >= target:
            h = target - t
            hit = True
        if h <= 1e-15 * max(abs(t), span):
            status = 1
            break

        for s in range(1, 12):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += A[s, j] * K[j, i]
                ys[i] = y[i] + h * acc
            K[s] = rhs(t + Cn[s] * h, ys, args)
        for i in range(n):
            acc = 0.0
            for j in range(12):
                acc += B[j] * K[j, i]
            yn[i] = y[i] + h * acc
        K[12] = rhs(t + h, yn, args)

        e5 = 0.0
        e3 = 0.0
        for i in range(n):
            sc = atol + rtol * max(abs(y[i]), abs(yn[i]))
            a5 = 0.0
            a3 = 0.0
            for j in range(13):
                a5 += E5[j] * K[j, i]
                a3 += E3[j] * K[j, i]
            e5 += (a5 / sc) ** 2
            e3 += (a3 / sc) ** 2
        den = e5 + 0.01 * e3
        err = abs(h) * e5 / math.sqrt(den * n) if den > 0.0 else 0.0
        if not math.isfinite(err):
            # overflow inside the stages: retreat hard
            nrej += 1
            h *= 0.2
            continue

        if err <= 1.0:
            t = target if hit else t + h
            y[:] = yn
            K[0] = K[12]
            nacc += 1
            nrm = 0.0
            for i in range(n):
                if not math.isfinite(y[i]):
                    status = 3
                nrm += y[i] * y[i]
            if status == 3:
                break
            dr = abs(nrm - n0)
            if dr > maxdrift:
                maxdrift = dr
            if record_all:
                if nrec == cap:
                    cap *= 2
                    nt = np.empty(cap)
                    nt[:nrec] = times[:nrec]
                    ns = np.empty((cap, n))
                    ns[:nrec] = states[:nrec]
                    times = nt
                    states = ns
                times[nrec] = t
                states[nrec] = y
                nrec += 1
            else:
                while k_eval < t_eval.size and t_eval[k_eval] <= t:
                    times[nrec] = t_eval[k_eval]
                    states[nrec] = y
                    nrec += 1
                    k_eval += 1
            fac = 0.9 * err ** (-0.125) if err > 0.0 else 10.0
            h *= min(10.0, max(0.2, fac))
            if hit and h < h_nat:
                # the step was shortened to land on a target, not for accuracy
                h = h_nat
        else:
            nrej += 1
            h *= max(0.2, 0.9 * err ** (-0.125))
    return times[:nrec], states[:nrec], nacc, nrej, maxdrift, status


_dop853_jit = numba.njit(cache=True, nogil=True)(_dop853_core)


def _initial_step(f, y0, t0, t1, rtol, atol, args) -> float:
    sc = atol + rtol * np.abs(y0)
    f0 = np.asarray(f(t0, y0, args), dtype=float)
    d0 = float(np.sqrt(np.mean((y0 / sc) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / sc) ** 2)))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, t1 - t0)


def integrate_ode(
    rhs,
    y0,
    t0: float,
    t1: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    args=(),
    t_eval=None,
    h0: float | None = None,
    max_steps: int = 50_000_000,
) -> OdeSolution:
    """Integrate ``y' = rhs(t, y, args)`` from ``t0`` to ``t1``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y, args)`` returning dy/dt as a float64 array; may be a
        numba ``njit`` function.
    y0 : array_like
        Initial state.
    t0, t1 : float
        Integration interval, ``t1 > t0``.
    rtol, atol : float
        Local error tolerances of the embedded 8(5,3) pair.
    args : sequence of float
        Extra parameters passed to ``rhs`` as a float64 array.
    t_eval : array_like, optional
        Ascending output times inside ``[t0, t1]``.  The stepper lands on
        them exactly.  When omitted every accepted step is stored.
    h0 : float, optional
        First trial step.
    max_steps : int
        Budget on accepted plus rejected steps.

    Returns
    -------
    OdeSolution

    Raises
    ------
    StepUnderflow
        The controller asked for a step below the resolvable fraction of
        the interval.
    NoConvergence
        ``max_steps`` was exhausted.
    """
    if not t1 > t0:
        raise ParameterError(f"need t1 > t0, got t0={t0}, t1={t1}")
    if not (rtol > 0 and atol > 0):
        raise ParameterError("rtol and atol must be positive")
    y0 = np.ascontiguousarray(y0, dtype=np.float64).ravel()
    if not np.all(np.isfinite(y0)):
        raise ParameterError("initial state is not finite")
    args = np.ascontiguousarray(np.atleast_1d(np.asarray(args, dtype=np.float64)))
    if args.size == 0:
        args = np.zeros(1)

    record_all = t_eval is None
    if record_all:
        te = np.empty(0)
    else:
        te = np.ascontiguousarray(t_eval, dtype=np.float64).ravel()
        if te.size == 0:
            raise ParameterError("t_eval is empty")
        if np.any(np.diff(te) <= 0.0):
            raise ParameterError("t_eval must be strictly ascending")
        if te[0] < t0 or te[-1] > t1:
            raise ParameterError("t_eval must lie inside [t0, t1]")

    if is_jitted(rhs):
        core = _dop853_jit
        f_py = rhs.py_func
    else:
        def f_py(t, y, a, _f=rhs):
            return np.asarray(_f(t, y, a), dtype=np.float64)

        core = _dop853_core
        rhs = f_py

    if h0 is None:
        h0 = _initial_step(f_py, y0, t0, t1, rtol, atol, args)

    times, states, nacc, nrej, drift, status = core(
        rhs, y0, float(t0), float(t1), float(rtol), float(atol), args,
        float(h0), te, record_all, int(max_steps), _A, _B, _C, _E3, _E5,
    )
    if status == _UNDERFLOW:
        raise StepUnderflow(f"step size underflow after {nacc} steps")
    if status == _MAXSTEPS:
        raise NoConvergence(f"step budget {max_steps} exhausted")
    if status == _NONFINITE:
        raise NumericalError("solution became non-finite")
    return OdeSolution(np.array(times), np.array(states), int(nacc), int(nrej), float(drift))
