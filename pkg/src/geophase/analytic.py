"""Closed-form solutions used as oracles for the numerical pipeline.

Everything here is written out by hand from the mixing angle; nothing is
shared with the generator or integrator code. Units: hbar = 1, so
``cos(theta) = Delta / 2E`` and ``sin(theta) = Omega / E``.

Rotated-frame components: ``rho^C = [[a, b], [b*, 1 - a]]`` in the basis of
transported eigenstates ``|+>, |->``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _quad
from scipy.linalg import expm


@dataclass(frozen=True)
class ReducedConstants:
    K: float
    G: float
    f: float
    g: float
    theta: float
    E: float

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta)


def mixing(delta: float, omega: float):
    """``(E, cos(theta/2), sin(theta/2), theta)`` for detuning and coupling."""
    e = math.hypot(omega, 0.5 * delta)
    if e <= 0:
        raise ValueError("E must be positive")
    c = math.sqrt((e + 0.5 * delta) / (2 * e))
    s = math.sqrt(max(e - 0.5 * delta, 0.0) / (2 * e))
    return e, c, s, 2 * math.atan2(s, c)


def reduced_constants(delta: float, omega: float, f: float = 0.0, g: float = 0.0) -> ReducedConstants:
    e, _, _, th = mixing(delta, omega)
    o2, d2 = omega * omega, delta * delta
    return ReducedConstants(
        K=(2 * o2 + d2) / (4 * o2 + d2),
        G=(6 * o2 + d2) / (8 * o2 + 2 * d2),
        f=f,
        g=g,
        theta=th,
        E=e,
    )


def initial_ab(theta: float, p: float):
    """``(a0, b0)`` for ``rho(0) = 1/2 + p sigma_3``."""
    return 0.5 + p * math.cos(theta), -p * math.sin(theta)


def inversion_from_ab(a, b, theta: float, phi):
    """Population difference ``rho_ee - rho_gg`` from the rotated components."""
    return (2 * np.asarray(a) - 1) * math.cos(theta) - 2 * math.sin(theta) * np.real(
        np.asarray(b) * np.exp(1j * np.asarray(phi) * math.cos(theta))
    )


# ---------------------------------------------------------------------------
# spontaneous emission
# ---------------------------------------------------------------------------


def emission_ab(t, theta: float, lam: float, E: float, a0, b0):
    s2, c2 = math.sin(0.5 * theta) ** 2, math.cos(0.5 * theta) ** 2
    k = s2 * s2 + c2 * c2
    a_inf = s2 * s2 / k
    t = np.asarray(t, dtype=float)
    a = (a0 - a_inf) * np.exp(-lam * t * k) + a_inf
    b = b0 * np.exp(-2j * E * t) * np.exp(-lam * t * (s2 * c2 + 0.5))
    return a, b


def emission_inversion(T, delta: float, omega: float, lam: float, p: float):
    """Inversion after one full sweep of the laser phase.

    Written in the regrouped form
    ``(Delta/2E)^2 [2p e^{-K lam T} + (e^{-K lam T} - 1)/K]
    + 2p (Omega/E)^2 cos(2ET - 2pi Delta/2E) e^{-G lam T}``,
    which stays finite at ``p = 0``.
    """
    rc = reduced_constants(delta, omega)
    T = np.asarray(T, dtype=float)
    ct, st = rc.cos_theta, rc.sin_theta
    ek = np.exp(-rc.K * lam * T)
    return ct * ct * (2 * p * ek + (ek - 1) / rc.K) + 2 * p * st * st * np.cos(
        2 * rc.E * T - 2 * np.pi * ct
    ) * np.exp(-rc.G * lam * T)


# ---------------------------------------------------------------------------
# collisional dephasing
# ---------------------------------------------------------------------------


def dephasing_ab(t, theta: float, f: float, g: float, E: float, a0, b0):
    s2, c2 = math.sin(0.5 * theta) ** 2, math.cos(0.5 * theta) ** 2
    t = np.asarray(t, dtype=float)
    a = (a0 - 0.5) * np.exp(-4 * f * t * c2 * s2) + 0.5
    b = b0 * np.exp(1j * (-2 * E + g * (s2 * s2 - c2 * c2)) * t) * np.exp(-(s2 * s2 + c2 * c2) * f * t)
    return a, b


def dephasing_inversion(T, delta: float, omega: float, f: float, g: float, p: float):
    """Inversion after one full sweep with dephasing constants ``f, g``.

    ``2p [(Delta/2E)^2 e^{-(Omega/E)^2 f T}
    + (Omega/E)^2 e^{-K f T} cos((2E + g Delta/2E) T - 2pi Delta/2E)]``.
    """
    rc = reduced_constants(delta, omega)
    T = np.asarray(T, dtype=float)
    ct, st = rc.cos_theta, rc.sin_theta
    return 2 * p * (
        ct * ct * np.exp(-st * st * f * T)
        + st * st * np.exp(-rc.K * f * T) * np.cos((2 * rc.E + g * ct) * T - 2 * np.pi * ct)
    )


def rotating_matrix(phi, theta: float) -> np.ndarray:
    """Transported eigenbasis of the laser Hamiltonian at laser phase ``phi``."""
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    phi = np.asarray(phi, dtype=float)
    m = np.empty(phi.shape + (2, 2), dtype=np.complex128)
    m[..., 0, 0] = np.exp(-1j * phi * s * s) * c
    m[..., 0, 1] = -np.exp(-1j * phi * c * c) * s
    m[..., 1, 0] = np.exp(1j * phi * c * c) * s
    m[..., 1, 1] = np.exp(1j * phi * s * s) * c
    return m


def state_from_ab(a, b, phi, theta: float) -> np.ndarray:
    """``rho = C rho^C C†`` in the atomic basis."""
    c = rotating_matrix(phi, theta)
    rc = np.array([[a, b], [np.conj(b), 1 - a]], dtype=np.complex128)
    return c @ rc @ c.conj().T


def emission_state(T: float, delta: float, omega: float, lam: float, p: float, phi_T: float = 2 * np.pi):
    e, _, _, th = mixing(delta, omega)
    a0, b0 = initial_ab(th, p)
    a, b = emission_ab(T, th, lam, e, a0, b0)
    return state_from_ab(complex(a).real, complex(b), phi_T, th)


def dephasing_state(T: float, delta: float, omega: float, f: float, g: float, p: float, phi_T: float = 2 * np.pi):
    e, _, _, th = mixing(delta, omega)
    a0, b0 = initial_ab(th, p)
    a, b = dephasing_ab(T, th, f, g, e, a0, b0)
    return state_from_ab(complex(a).real, complex(b), phi_T, th)


def corotating_exact(T: float, delta: float, omega: float, ops, rho0) -> np.ndarray:
    """Exact state after a linear sweep ``phi = 2 pi t / T``.

    In the frame co-rotating with the laser phase the problem becomes
    time-independent with detuning ``Delta - 2pi/T``; this holds for
    dissipators that commute with ``sigma_z`` up to a phase (emission and
    diagonal dephasing). ``ops`` are the effective Lindblad operators.
    """
    dd = delta - 2 * np.pi / T
    h = np.array([[0.5 * dd, omega], [omega, -0.5 * dd]], dtype=np.complex128)
    eye = np.eye(2)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for g in np.asarray(ops, dtype=np.complex128).reshape(-1, 2, 2):
        gg = g.conj().T @ g
        gen += np.kron(g, g.conj()) - 0.5 * (np.kron(gg, eye) + np.kron(eye, gg.T))
    r = (expm(gen * T) @ np.asarray(rho0, dtype=np.complex128).reshape(-1)).reshape(2, 2)
    # frame rotation diag(e^{-i phi/2}, e^{i phi/2}) is the identity up to sign at phi = 2 pi
    return r


# ---------------------------------------------------------------------------
# spin in a steered field
# ---------------------------------------------------------------------------


def spin_coherence(T, E: float, f: float, g: float, phi: float, rho12_0: complex = 1.0):
    """Coherence after one loop: ``rho12(0) e^{-i(2ET + gT - 2 phi)} e^{-fT}``."""
    T = np.asarray(T, dtype=float)
    return rho12_0 * np.exp(-1j * (2 * E * T + g * T - 2 * phi)) * np.exp(-f * T)


def echo_coherence(T, f: float, phi: float, rho12_0: complex = 1.0):
    """Coherence after the two-leg echo: ``rho12(0) e^{4 i phi} e^{-2Tf}``."""
    return rho12_0 * np.exp(4j * phi) * np.exp(-2 * np.asarray(T, dtype=float) * f)


def echo_by_legs(T: float, E: float, f: float, g: float, phi: float, rho12_0: complex = 1.0):
    """Echo coherence composed leg by leg (forward, flip, reversed loop, flip)."""
    r12 = spin_coherence(T, E, f, g, phi, rho12_0)  # forward loop
    r12 = np.conj(r12)  # flip: new rho12 is old rho21
    # reversed loop: rotated-frame evolution then A'(2T) = diag(e^{-i phi}, e^{i phi})
    r12 = r12 * np.exp(-1j * (2 * E + g) * T) * np.exp(-f * T) * np.exp(-2j * phi)
    return np.conj(r12)  # second flip


# ---------------------------------------------------------------------------
# reduced dephasing constants
# ---------------------------------------------------------------------------


def reduced_fg(d) -> tuple[float, float]:
    """``f = ∫ lambda (1 - cos a) da`` and ``g = ∫ lambda sin a da`` over ``(-pi, pi]``."""
    lam0 = d.lambda0
    if d.kind == "constant":
        return lam0, 0.0
    if d.kind == "shifted_sine":
        return lam0, 0.5 * d.kappa * lam0
    if d.kind == "gaussian":
        damp = math.exp(-0.5 * d.sigma**2)
        return lam0 * (1 - math.cos(d.alpha0) * damp), lam0 * math.sin(d.alpha0) * damp
    breaks = np.unique(np.clip(np.asarray(d.table_alpha, dtype=float), -np.pi, np.pi))
    opts = dict(epsabs=1e-12, epsrel=1e-12, limit=500, points=breaks[1:-1] if len(breaks) > 2 else None)
    f = _quad.quad(lambda a: float(d(a)) * (1 - math.cos(a)), -np.pi, np.pi, **opts)[0]
    g = _quad.quad(lambda a: float(d(a)) * math.sin(a), -np.pi, np.pi, **opts)[0]
    return f, g


def density_total(d) -> float:
    """Zeroth moment ``∫ lambda da``."""
    if d.kind in ("constant", "shifted_sine", "gaussian"):
        return d.lambda0
    breaks = np.unique(np.clip(np.asarray(d.table_alpha, dtype=float), -np.pi, np.pi))
    return _quad.quad(lambda a: float(d(a)), -np.pi, np.pi, epsabs=1e-12, limit=500,
                      points=breaks[1:-1] if len(breaks) > 2 else None)[0]
