"""Closed forms checked against each other, the secular C-frame generator and
the exact co-rotating solution."""
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geophase import analytic
from geophase.lindblad import DissipatorSet, integrate, secular_generator
from geophase.models import CollisionDensity, LaserModel

params = dict(delta=st.floats(-2, 2), omega=st.floats(0.1, 2), p=st.floats(-0.5, 0.5))


def test_mixing_and_constants():
    e, c, s, th = analytic.mixing(0.5, 1.0)
    assert e == pytest.approx(math.sqrt(1.0625), abs=1e-15)
    assert c * c - s * s == pytest.approx(0.25 / e, abs=1e-15)
    rc = analytic.reduced_constants(0.0, 1.0)
    assert rc.K == 0.5 and rc.G == 0.75 and rc.cos_theta == pytest.approx(0, abs=1e-16)
    with pytest.raises(ValueError):
        analytic.mixing(0.0, 0.0)


def test_emission_ab_limits():
    th, e = 0.8, 1.3
    a0, b0 = analytic.initial_ab(th, 0.4)
    assert analytic.emission_ab(0.0, th, 0.1, e, a0, b0) == (pytest.approx(a0), pytest.approx(b0))
    t = np.linspace(0, 10, 7)
    a, b = analytic.emission_ab(t, th, 0.0, e, a0, b0)
    np.testing.assert_allclose(a, a0)
    np.testing.assert_allclose(np.abs(b), abs(b0))
    np.testing.assert_allclose(np.angle(b * np.exp(2j * e * t) / b0), 0, atol=1e-12)
    a, b = analytic.emission_ab(1e6, th, 0.1, e, a0, b0)
    s4, c4 = math.sin(th / 2) ** 4, math.cos(th / 2) ** 4
    assert abs(a - s4 / (s4 + c4)) < 1e-12 and abs(b) < 1e-12


def test_emission_inversion_undamped_and_zero_detuning():
    T = np.linspace(10, 30, 5)
    rc = analytic.reduced_constants(0.5, 1.0)
    p = 0.5
    w = analytic.emission_inversion(T, 0.5, 1.0, 0.0, p)
    ref = 2 * p * (rc.cos_theta**2 + np.cos(2 * rc.E * T - 2 * np.pi * rc.cos_theta) * rc.sin_theta**2)
    np.testing.assert_allclose(w, ref, atol=1e-14)
    w0 = analytic.emission_inversion(T, 0.0, 1.0, 0.0, p)
    np.testing.assert_allclose(w0, 2 * p * np.cos(2 * T), atol=1e-13)


@given(**params, lam=st.floats(0, 0.05), T=st.floats(1, 800))
def test_emission_inversion_composition(delta, omega, p, lam, T):
    e, _, _, th = analytic.mixing(delta, omega)
    a0, b0 = analytic.initial_ab(th, p)
    a, b = analytic.emission_ab(T, th, lam, e, a0, b0)
    w = analytic.inversion_from_ab(a, b, th, 2 * np.pi)
    assert abs(w - analytic.emission_inversion(T, delta, omega, lam, p)) < 1e-12


@given(**params, f=st.floats(0, 0.05), g=st.floats(-0.05, 0.05), T=st.floats(1, 800))
def test_dephasing_inversion_composition(delta, omega, p, f, g, T):
    e, _, _, th = analytic.mixing(delta, omega)
    a0, b0 = analytic.initial_ab(th, p)
    a, b = analytic.dephasing_ab(T, th, f, g, e, a0, b0)
    w = analytic.inversion_from_ab(a, b, th, 2 * np.pi)
    assert abs(w - analytic.dephasing_inversion(T, delta, omega, f, g, p)) < 1e-12


def test_inversion_of_reconstructed_state():
    e, _, _, th = analytic.mixing(0.5, 1.0)
    for T in (10.0, 77.0):
        rho = analytic.emission_state(T, 0.5, 1.0, 0.01, 0.5)
        w = analytic.emission_inversion(T, 0.5, 1.0, 0.01, 0.5)
        assert abs((rho[0, 0] - rho[1, 1]).real - w) < 1e-13
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-15)


def test_dephasing_ab_limits():
    th, e = 1.1, 0.9
    a0, b0 = analytic.initial_ab(th, 0.5)
    a, b = analytic.dephasing_ab(0.0, th, 0.1, 0.05, e, a0, b0)
    assert a == pytest.approx(a0) and b == pytest.approx(b0)
    a, b = analytic.dephasing_ab(5.0, th, 0.0, 0.0, e, a0, b0)
    assert a == pytest.approx(a0) and b == pytest.approx(b0 * np.exp(-10j * e))
    a, _ = analytic.dephasing_ab(1e6, th, 0.1, 0.0, e, a0, b0)
    assert abs(a - 0.5) < 1e-12


def test_dephasing_shift_only_with_asymmetry():
    T = np.linspace(100, 140, 9)
    rc = analytic.reduced_constants(0.5, 1.0)
    w0 = analytic.dephasing_inversion(T, 0.5, 1.0, 0.0, 0.0, 0.5)
    ref = rc.cos_theta**2 + rc.sin_theta**2 * np.cos(2 * rc.E * T - 2 * np.pi * rc.cos_theta)
    np.testing.assert_allclose(w0, ref, atol=1e-14)
    shifted = analytic.dephasing_inversion(T, 0.5, 1.0, 0.0, 0.01, 0.5)
    ref = rc.cos_theta**2 + rc.sin_theta**2 * np.cos((2 * rc.E + 0.01 * rc.cos_theta) * T - 2 * np.pi * rc.cos_theta)
    np.testing.assert_allclose(shifted, ref, atol=1e-14)


def test_undamped_continuity():
    T = np.linspace(50, 600, 12)
    for fn, args in ((analytic.emission_inversion, ()), (analytic.dephasing_inversion, (0.0,))):
        w0 = fn(T, 0.5, 1.0, 0.0, *args, 0.3)
        w1 = fn(T, 0.5, 1.0, 1e-12, *args, 0.3)
        assert np.max(np.abs(w0 - w1)) < 1e-9
    assert np.isfinite(analytic.emission_inversion(500.0, 0.5, 1.0, 0.005, 0.0))


@pytest.mark.parametrize("kind", ["emission", "dephasing"])
def test_ab_solve_secular_equations(kind):
    """Integrate the secular C-frame equations and compare with (a, b)."""
    if kind == "emission":
        m = LaserModel(0.5, 1.0, 80.0, rate=0.02, p=0.5)
    else:
        m = LaserModel(0.5, 1.0, 80.0, density=CollisionDensity("shifted_sine", 0.02), p=0.5)
    e, th = m.energy, m.theta
    a0, b0 = analytic.initial_ab(th, m.p)
    rho0 = np.array([[a0, b0], [b0, 1 - a0]], dtype=complex)
    # the secular part sees only |Γ_ik| and diagonal entries, which do not move with t,
    # so the rotated operators frozen at t = 0 give the same generator
    rot = m.rotated_dissipators(64)
    frozen = DissipatorSet(np.ones(len(rot)), rot.operators(0.0))
    gen = secular_generator([e, -e], frozen)
    tr = integrate(gen, rho0, 0.0, m.T, 16_000, record_every=4000)
    if kind == "emission":
        a, b = analytic.emission_ab(tr.times, th, m.rate, e, a0, b0)
    else:
        f, g = analytic.reduced_fg(m.density)
        a, b = analytic.dephasing_ab(tr.times, th, f, g, e, a0, b0)
    np.testing.assert_allclose(tr.states[:, 0, 0].real, a, atol=1e-10)
    np.testing.assert_allclose(tr.states[:, 0, 1], b, atol=1e-10)


def test_corotating_exact_matches_integration():
    m = LaserModel(0.5, 1.0, 30.0, rate=0.05, p=0.3)
    ops = np.sqrt(m.rate) * np.array([[[0, 0], [1, 0]]], dtype=complex)
    exact = analytic.corotating_exact(m.T, m.delta, m.omega, ops, m.rho0())
    tr = integrate(m.lab_generator(), m.rho0(), 0.0, m.T, 6000)
    assert np.linalg.norm(tr.final - exact) < 1e-9


def test_spin_and_echo_coherence():
    T = np.array([1.0, 2.5])
    np.testing.assert_allclose(analytic.spin_coherence(T, 1.3, 0, 0, 0.0), np.exp(-2.6j * T))
    for phi in (-1.5707963, 0.3, 2.0):
        for f, g in ((0.0, 0.0), (0.01, 0.004)):
            via_legs = analytic.echo_by_legs(40.0, 1.7, f, g, phi, 0.4 + 0.1j)
            direct = analytic.echo_coherence(40.0, f, phi, 0.4 + 0.1j)
            assert abs(via_legs - direct) < 1e-12
