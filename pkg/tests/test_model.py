import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlz.classical import eom_rhs_real
from nlz.errors import ParameterError, PhaseUndefined, PoleState
from nlz.model import (
    Amplitudes,
    PhasePoint,
    SweepSpec,
    SystemParams,
    amplitudes_from_bloch,
    bec_doublewell_params,
    bloch_from_amplitudes,
    default_gamma_max,
    hamiltonian,
    schrodinger_rhs,
    schrodinger_rhs_real,
    wrap_angle,
)
from nlz.nonadiabatic import SWEEP_ATOL, SWEEP_RTOL
from nlz.numerics import integrate_ode

R2 = 1.0 / math.sqrt(2.0)


def test_params_validation():
    with pytest.raises(ParameterError):
        SystemParams(V=0.0, C=1.0)
    with pytest.raises(ParameterError):
        SystemParams(V=1.0, C=-0.1)
    with pytest.raises(ParameterError):
        SystemParams(V=math.nan)
    assert SystemParams.from_ratio(2.0, V=0.2).C == pytest.approx(0.4)


def test_amplitudes_enforce_norm():
    with pytest.raises(ParameterError):
        Amplitudes(1.0, 0.1)
    st_ = Amplitudes.normalized(3.0, 4.0j)
    assert abs(st_.a) ** 2 + abs(st_.b) ** 2 == pytest.approx(1.0)


def test_phase_point_range():
    with pytest.raises(ParameterError):
        PhasePoint(1.5, 0.0)


def test_sweep_spec_gamma_max_rule():
    p = SystemParams(V=1.0, C=2.0)
    assert SweepSpec.for_params(p, 0.1).gamma_max == default_gamma_max(p) == 40.0
    with pytest.raises(ParameterError):
        SweepSpec.for_params(p, 0.1, gamma_max=10.0)
    assert SweepSpec.for_params(p, 0.1, gamma_max=10.0, allow_short=True).gamma_max == 10.0
    with pytest.raises(ParameterError):
        SweepSpec(alpha=0.0, gamma_max=1.0)


# Schrodinger right-hand side -------------------------------------------------


def test_rhs_pure_coupling():
    da, db = schrodinger_rhs(SystemParams(V=1.0, C=0.0), 0.0, Amplitudes(1.0, 0.0))
    assert da == 0
    assert db == pytest.approx(-0.5j)


@pytest.mark.parametrize("C", [0.0, 0.7, 5.0])
def test_rhs_symmetric_state_kills_nonlinearity(C):
    V = 1.3
    da, db = schrodinger_rhs(SystemParams(V=V, C=C), 0.0, Amplitudes(R2, R2))
    expected = -1j * V / (2 * math.sqrt(2))
    assert da == pytest.approx(expected)
    assert db == pytest.approx(expected)


def test_rhs_hand_evaluation():
    # H = [[0.3/2 - 1, 1/2], [1/2, 1 - 0.3/2]] on (1, 0)
    da, db = schrodinger_rhs(SystemParams(V=1.0, C=2.0), 0.3, Amplitudes(1.0, 0.0))
    assert da == pytest.approx(-1j * (0.15 - 1.0))
    assert db == pytest.approx(-0.5j)


@given(
    st.floats(0.1, 3), st.floats(0, 5), st.floats(-5, 5), st.floats(-1, 1), st.floats(-math.pi, math.pi), st.floats(-10, 10)
)
def test_real_rhs_matches_complex(V, C, g, s, th, t):
    if abs(s) == 1.0:
        return
    psi = amplitudes_from_bloch(PhasePoint(s, th))
    da, db = schrodinger_rhs(SystemParams(V, C), g + 0.3 * t, psi)
    out = schrodinger_rhs_real(t, psi.to_real(), np.array([V, C, 0.3, g]))
    np.testing.assert_allclose(out, [da.real, da.imag, db.real, db.imag], atol=1e-12)


def test_hamiltonian_is_traceless_symmetric():
    H = hamiltonian(SystemParams(V=0.4, C=1.0), 0.2, 0.5)
    assert np.trace(H) == 0
    np.testing.assert_array_equal(H, H.T)


# Bloch map --------------------------------------------------------------------


def test_bloch_examples():
    p = bloch_from_amplitudes(Amplitudes(R2, R2))
    assert (p.s, p.theta) == pytest.approx((0.0, 0.0))
    p = bloch_from_amplitudes(Amplitudes(R2, 1j * R2))
    assert (p.s, p.theta) == pytest.approx((0.0, math.pi / 2))


def test_bloch_phase_undefined():
    with pytest.raises(PhaseUndefined):
        bloch_from_amplitudes(Amplitudes(1.0, 0.0))


def test_inverse_examples():
    psi = amplitudes_from_bloch(PhasePoint(0.0, 0.0))
    assert (psi.a, psi.b) == pytest.approx((R2, R2))
    psi = amplitudes_from_bloch(PhasePoint(0.6, math.pi))
    assert psi.a == pytest.approx(math.sqrt(0.2))
    assert psi.b == pytest.approx(-math.sqrt(0.8))


def test_inverse_pole():
    with pytest.raises(PoleState):
        amplitudes_from_bloch(PhasePoint(1.0, 0.0))


@given(st.floats(-0.999999, 0.999999), st.floats(-math.pi, math.pi))
def test_round_trip(s, th):
    q = bloch_from_amplitudes(amplitudes_from_bloch(PhasePoint(s, th)))
    assert q.s == pytest.approx(s, abs=1e-12)
    assert abs(wrap_angle(q.theta - th)) < 1e-9


@given(st.floats(-0.99, 0.99), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi))
def test_global_phase_gauge(s, th, chi):
    psi = amplitudes_from_bloch(PhasePoint(s, th))
    u = cmath.exp(1j * chi)
    p1 = bloch_from_amplitudes(psi)
    p2 = bloch_from_amplitudes(Amplitudes(u * psi.a, u * psi.b))
    assert p2.s == pytest.approx(p1.s, abs=1e-12)
    assert abs(wrap_angle(p2.theta - p1.theta)) < 1e-12


def test_wrap_angle_range():
    x = wrap_angle(np.array([-math.pi, math.pi, 3 * math.pi, -3 * math.pi + 1e-3, 0.0]))
    assert np.all(x > -math.pi) and np.all(x <= math.pi)
    assert x[0] == math.pi


# dynamics ---------------------------------------------------------------------


def _evolve_both(params, alpha, g0, p0, t1):
    args = (params.V, params.C, alpha, g0)
    psi0 = amplitudes_from_bloch(p0)
    t = np.linspace(0.0, t1, 41)
    q = integrate_ode(schrodinger_rhs_real, psi0.to_real(), 0.0, t1, args=args, t_eval=t)
    c = integrate_ode(eom_rhs_real, [p0.s, p0.theta], 0.0, t1, args=args, t_eval=t)
    return q, c


@given(
    st.floats(0.2, 2), st.floats(0, 4), st.floats(-2, 2), st.sampled_from([0.0, 0.05]),
    st.floats(-0.6, 0.6), st.floats(-math.pi, math.pi),
)
def test_classical_quantum_equivalence(V, C, g0, alpha, s0, th0):
    params = SystemParams(V, C)
    q, c = _evolve_both(params, alpha, g0, PhasePoint(s0, th0), 3.0)
    for yq, yc in zip(q.states, c.states):
        a, b = complex(yq[0], yq[1]), complex(yq[2], yq[3])
        if min(abs(a), abs(b)) < 0.05:
            continue  # the phase representation degrades near the poles
        s = abs(b) ** 2 - abs(a) ** 2
        th = cmath.phase(b * a.conjugate())
        assert abs(s - yc[0]) < 1e-6
        assert abs(wrap_angle(th - yc[1])) < 1e-6


def test_short_time_linear_evolution_matches_classical():
    params = SystemParams(V=1.0, C=0.0)
    q, c = _evolve_both(params, 0.0, 0.0, PhasePoint(-0.9, 0.3), 0.5)
    s_q = q.states[:, 2] ** 2 + q.states[:, 3] ** 2 - q.states[:, 0] ** 2 - q.states[:, 1] ** 2
    np.testing.assert_allclose(s_q, c.states[:, 0], atol=1e-8)


@settings(max_examples=25)
@given(st.floats(0.1, 1), st.floats(0, 3), st.floats(0.02, 1))
def test_norm_conserved_along_sweep(V, C, alpha):
    gm = 20.0 * max(V, C)
    t = np.linspace(-gm / alpha, gm / alpha, 501)
    sol = integrate_ode(
        schrodinger_rhs_real, [1.0, 0.0, 0.0, 0.0], t[0], t[-1],
        rtol=SWEEP_RTOL, atol=SWEEP_ATOL, args=(V, C, alpha, 0.0), t_eval=t,
    )
    n = np.sum(sol.states**2, axis=1)
    assert np.max(np.abs(n - 1.0)) < 1e-9
    # the solver also tracks the drift at every accepted step
    assert sol.max_norm_drift < 1e-9


# double well mapping -----------------------------------------------------------


def test_bec_symmetric_wells_unbiased():
    V, g, C = bec_doublewell_params(0.5, 1.0, 1.0, 0.02, 0.02, 100)
    assert (V, g, C) == pytest.approx((1.0, 0.0, 2.0))


def test_bec_mapping_formulas():
    V, g, C = bec_doublewell_params(K=0.3, E1_0=1.2, E2_0=0.7, U1=0.05, U2=0.01, N_T=40, hbar=2.0)
    assert V == pytest.approx(0.3)
    assert g == pytest.approx(-((1.2 - 0.7) - (0.05 - 0.01) * 40 / 2) / 2.0)
    assert C == pytest.approx((0.05 + 0.01) * 40 / 4.0)


def test_bec_validation():
    with pytest.raises(ParameterError):
        bec_doublewell_params(0.0, 1, 1, 0.1, 0.1, 10)
