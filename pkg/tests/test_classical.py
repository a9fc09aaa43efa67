import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlz.adiabatic import critical_energy, s_degenerate
from nlz.classical import (
    DEGENERATE,
    ELLIPTIC,
    HYPERBOLIC,
    enclosed_area,
    eom_rhs,
    eom_rhs_real,
    fixed_point_quartic_coeffs,
    fixed_points,
    jacobian,
    josephson_energy,
    level_pieces,
    omega_star,
    omega_zero_locus,
    orbit_trace,
    portrait,
)
from nlz.errors import HyperbolicPoint, NoIntersection, PoleState
from nlz.levels import adiabatic_levels, eigen_residual, gamma_c
from nlz.model import PhasePoint, SystemParams, amplitudes_from_bloch, wrap_angle
from nlz.numerics import integrate_ode

P2 = SystemParams(1.0, 2.0)
GC_2 = 0.4501964643745654


def test_energy_examples():
    for g in (-1.0, 0.0, 2.5):
        assert josephson_energy(P2, g, PhasePoint(0.0, 0.0)) == pytest.approx(-1.0)
        assert josephson_energy(P2, g, PhasePoint(0.0, math.pi)) == pytest.approx(1.0)
    assert josephson_energy(P2, 0.3, PhasePoint(0.5, math.pi)) == pytest.approx(0.25 + 0.15 + math.sqrt(0.75))


def test_eom_examples():
    assert eom_rhs(SystemParams(0.7, 1.0), 0.0, PhasePoint(0.0, math.pi / 2)) == pytest.approx((-0.7, 0.0))
    for fp in fixed_points(P2, 0.2):
        assert np.hypot(*eom_rhs(P2, 0.2, fp.point)) < 1e-8
    with pytest.raises(PoleState):
        eom_rhs(P2, 0.0, PhasePoint(1.0, 0.0))


@given(st.floats(0.1, 2), st.floats(0, 4), st.floats(-3, 3), st.floats(-0.95, 0.95), st.floats(-math.pi, math.pi))
def test_canonical_finite_differences(V, C, g, s, th):
    p, h = SystemParams(V, C), 1e-6
    H = lambda s_, t_: josephson_energy(p, g, PhasePoint(s_, t_))  # noqa: E731
    dH_ds = (H(s + h, th) - H(s - h, th)) / (2 * h)
    dH_dth = (H(s, th + h) - H(s, th - h)) / (2 * h)
    ds, dth = eom_rhs(p, g, PhasePoint(s, th))
    assert ds == pytest.approx(-dH_dth, abs=1e-6)
    assert dth == pytest.approx(dH_ds, abs=1e-6)


def test_canonical_hundred_random_points():
    rng = np.random.default_rng(3)
    for _ in range(100):
        V, C, g = rng.uniform(0.1, 2), rng.uniform(0, 4), rng.uniform(-3, 3)
        s, th = rng.uniform(-0.95, 0.95), rng.uniform(-math.pi, math.pi)
        p, h = SystemParams(V, C), 1e-6
        H = lambda s_, t_: josephson_energy(p, g, PhasePoint(s_, t_))  # noqa: E731
        ds, dth = eom_rhs(p, g, PhasePoint(s, th))
        assert abs(ds + (H(s, th + h) - H(s, th - h)) / (2 * h)) < 1e-6
        assert abs(dth - (H(s + h, th) - H(s - h, th)) / (2 * h)) < 1e-6


@given(st.floats(0.1, 2), st.floats(0, 4), st.floats(-3, 3), st.floats(-0.9, 0.9), st.floats(-math.pi, math.pi))
def test_jacobian_matches_finite_differences(V, C, g, s, th):
    p, h = SystemParams(V, C), 1e-6
    J = jacobian(p, g, PhasePoint(s, th))
    f = lambda s_, t_: np.array(eom_rhs(p, g, PhasePoint(s_, t_)))  # noqa: E731
    num = np.column_stack([(f(s + h, th) - f(s - h, th)) / (2 * h), (f(s, th + h) - f(s, th - h)) / (2 * h)])
    np.testing.assert_allclose(J, num, atol=1e-5 * (1 + np.abs(num).max()))


def test_energy_conserved_over_many_periods():
    p, g = P2, 0.2
    y0 = [0.3, 2.0]
    E0 = josephson_energy(p, g, PhasePoint(*y0))
    sol = integrate_ode(eom_rhs_real, y0, 0.0, 300.0, rtol=1e-12, atol=1e-14, args=(p.V, p.C, 0.0, g))
    E = np.array([josephson_energy(p, g, PhasePoint(s, t)) for s, t in sol.states])
    assert np.max(np.abs(E - E0)) / abs(E0) < 1e-6


# fixed points -----------------------------------------------------------------


@pytest.mark.parametrize("g", np.linspace(-3, 3, 13))
def test_subcritical_two_elliptic(g):
    fps = fixed_points(SystemParams(1.0, 0.5), float(g))
    assert len(fps) == 2
    assert {f.stability for f in fps} == {ELLIPTIC}
    by = {f.label: f for f in fps}
    assert by["P1"].theta_star == math.pi and by["P2"].theta_star == 0.0


def test_loop_fixed_points_at_zero_bias():
    fps = fixed_points(P2, 0.0)
    got = {(round(f.s_star, 5), f.theta_star): (f.stability, f.label) for f in fps}
    r = round(math.sqrt(1 - 0.25), 5)
    assert got == {
        (0.0, 0.0): (ELLIPTIC, "P2"),
        (-r, math.pi): (ELLIPTIC, "P1"),
        (0.0, math.pi): (HYPERBOLIC, "P3"),
        (r, math.pi): (ELLIPTIC, "P4"),
    }


def test_counts_across_window():
    gc = gamma_c(P2)
    counts = [len(fixed_points(P2, g)) for g in (-1.0, -gc, 0.0, gc, 1.0)]
    assert counts == [2, 3, 4, 3, 2]
    assert len(fixed_points(P2, gc * (1 + 1e-6))) == 2
    assert len(fixed_points(P2, gc * (1 - 1e-6))) == 4


def test_saddle_node_point():
    gc = gamma_c(P2)
    deg = [f for f in fixed_points(P2, gc) if f.stability == DEGENERATE]
    assert len(deg) == 1 and deg[0].label == "P1+P3"
    assert deg[0].s_star == pytest.approx(s_degenerate(P2), abs=1e-8)
    lam = np.linalg.eigvals(jacobian(P2, gc, deg[0].point))
    assert np.max(np.abs(lam)) < 1e-6
    # the squared quartic has a double root there
    c = np.array(fixed_point_quartic_coeffs(P2, gc))
    s_c = deg[0].s_star
    assert abs(np.polyval(c, s_c)) < 1e-12 and abs(np.polyval(np.polyder(c), s_c)) < 1e-7


@given(st.floats(0.1, 2), st.floats(0, 4), st.floats(-3, 3))
def test_fixed_points_are_stationary_and_quartic_roots(V, ratio, g):
    p = SystemParams(V, ratio * V)
    c = np.array(fixed_point_quartic_coeffs(p, g))
    for f in fixed_points(p, g):
        assert np.hypot(*eom_rhs(p, g, f.point)) < 1e-8 * (1 + V + p.C + abs(g))
        assert abs(np.polyval(c, f.s_star)) <= 1e-9 * (1 + np.abs(c).sum())


@given(st.floats(0.1, 2), st.floats(0, 4), st.floats(-3, 3))
def test_stability_matches_jacobian(V, ratio, g):
    p = SystemParams(V, ratio * V)
    for f in fixed_points(p, g):
        lam = np.linalg.eigvals(jacobian(p, g, f.point))
        if f.stability == ELLIPTIC:
            assert np.max(np.abs(lam.real)) < 1e-8 * (1 + np.abs(lam).max())
            assert f.omega_star == pytest.approx(np.abs(lam.imag).max(), rel=1e-8)
        elif f.stability == HYPERBOLIC:
            assert np.min(lam.real) < 0 < np.max(lam.real)
            assert f.omega_star == 0.0


@given(st.floats(0.1, 2), st.floats(0, 4), st.floats(-3, 3))
def test_fixed_points_are_eigenstates(V, ratio, g):
    p = SystemParams(V, ratio * V)
    ls = adiabatic_levels(p, g)
    for f in fixed_points(p, g):
        psi = amplitudes_from_bloch(f.point)
        assert eigen_residual(p, g, f.epsilon, psi) < 1e-6
        assert min(abs(f.epsilon - e) for e in ls.energies) < 1e-6


def test_p_labels_follow_continuation():
    p = SystemParams(1.0, 3.0)
    # far left: P1 near s = -1 on theta = pi and P2 near s = +1 on theta = 0
    fps = {f.label: f for f in fixed_points(p, -60.0)}
    assert fps["P1"].s_star < -0.99 and fps["P2"].s_star > 0.99
    assert set(fps) == {"P1", "P2"}
    # P3 and P4 are born at -gamma_c and P1, P3 merge at +gamma_c
    gc = gamma_c(p)
    assert {f.label for f in fixed_points(p, -gc)} == {"P1", "P2", "P3+P4"}
    assert {f.label for f in fixed_points(p, gc)} == {"P1+P3", "P2", "P4"}


# omega ------------------------------------------------------------------------


def test_omega_examples():
    assert omega_star(SystemParams(0.8, 0.0), 0.0) == pytest.approx(0.8)
    assert omega_star(SystemParams(0.8, 0.8), 0.0) == 0.0
    with pytest.raises(HyperbolicPoint):
        omega_star(P2, 0.0)
    s0 = omega_zero_locus(P2)
    assert s0 == pytest.approx(math.sqrt(1 - 0.5 ** (2 / 3)))
    assert omega_star(P2, s0) == pytest.approx(0.0, abs=1e-6)


# level sets -------------------------------------------------------------------


def test_minimum_energy_is_a_point():
    p = SystemParams(1.0, 0.5)
    tr = orbit_trace(p, 0.0, -1.0 + 1e-12, np.linspace(-0.2, 0.2, 41), seed=PhasePoint(0.0, 0.0))
    s, th = tr.arrays()
    assert np.max(np.abs(s)) < 1e-4 and np.max(np.abs(th)) < 1e-4


def test_homoclinic_pinch():
    gc = gamma_c(P2)
    E_c = critical_energy(P2)
    s_c = s_degenerate(P2)
    assert s_c == pytest.approx(-0.60831, abs=1e-5)
    grid = np.linspace(0.0, 2 * math.pi, 2001)
    tr = orbit_trace(P2, gc, E_c, grid, seed=PhasePoint(0.0, math.pi))
    s, th = tr.arrays()
    near = np.abs(wrap_angle(th - math.pi)) < 1e-9
    assert np.all(np.abs(s[near] - s_c) < 1e-6)
    assert np.min(s) == pytest.approx(s_c, abs=1e-6)


def test_orbit_energy_constant():
    p, g = P2, 0.2
    E = josephson_energy(p, g, PhasePoint(0.3, 2.5))
    tr = orbit_trace(p, g, E, np.linspace(-math.pi, math.pi, 721), seed=PhasePoint(0.3, 2.5))
    for q in tr.points:
        assert josephson_energy(p, g, q) == pytest.approx(E, rel=1e-6, abs=1e-9)


def test_small_ellipse_area_matches_harmonic_estimate():
    # near an elliptic point, area = 2 pi dE / omega*
    p, g = SystemParams(1.0, 0.5), 0.3
    f = next(f for f in fixed_points(p, g) if f.label == "P2")
    for dE in (1e-4, 1e-5):
        area = enclosed_area(p, g, josephson_energy(p, g, f.point) + dE, f.point)
        assert area == pytest.approx(2 * math.pi * dE / f.omega_star, rel=50 * dE + 1e-6)


def test_area_independent_of_theta_origin():
    """A shifted, wrapped phase grid traces the same curve and the same area."""
    p, g = P2, 0.1
    seed = PhasePoint(-0.7, math.pi)
    E = josephson_energy(p, g, PhasePoint(-0.7, 2.6))
    a = orbit_trace(p, g, E, np.linspace(0, 2 * math.pi, 4001), seed=seed)
    b = orbit_trace(p, g, E, np.linspace(-1.0, 2 * math.pi - 1.0, 4001), seed=seed)
    assert a.kind == b.kind == "libration_pi"

    def shoelace(tr):
        s, th = tr.arrays()
        th = math.pi + wrap_angle(th - math.pi)
        return 0.5 * abs(np.dot(th, np.roll(s, -1)) - np.dot(s, np.roll(th, -1)))

    assert shoelace(a) == pytest.approx(shoelace(b), rel=1e-3)
    assert shoelace(a) == pytest.approx(enclosed_area(p, g, E, seed), rel=1e-3)


def test_no_intersection():
    with pytest.raises(NoIntersection):
        orbit_trace(P2, 0.0, 50.0, np.linspace(0, 1, 5))


def test_level_pieces_kinds():
    kinds = {pc.kind for pc in level_pieces(P2, 0.0, 0.5)}
    assert kinds <= {"libration_pi", "libration_zero", "rotation", "open"}


def test_portrait_subcritical_no_collision():
    p = SystemParams(1.0, 0.5)
    for g in np.linspace(-2, 2, 21):
        pt = portrait(p, float(g), energy_levels=(0.0,))
        assert len(pt.fixed_points) == 2
        assert all(f.stability == ELLIPTIC for f in pt.fixed_points)
        assert pt.orbits
