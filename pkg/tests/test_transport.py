import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geophase.errors import BandCrossing, DegeneracyDrift, NotCyclic
from geophase.matcore import PAULI_Z
from geophase.models import LaserModel, SpinModel
from geophase.transport import (
    HamiltonianPath,
    build_frame,
    holonomy,
    nonabelian_holonomy,
    pati_reference,
    solid_angle,
    wrap_phase,
)


def cone_path(theta, t0=0.0, t1=1.0, period=1.0):
    def h(t):
        t = np.asarray(t, dtype=float)
        az = 2 * np.pi * t / period
        out = np.empty(t.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = math.cos(theta)
        out[..., 1, 1] = -math.cos(theta)
        out[..., 0, 1] = math.sin(theta) * np.exp(-1j * az)
        out[..., 1, 0] = math.sin(theta) * np.exp(1j * az)
        return out

    return HamiltonianPath(h, t1, t0)


def static_path(h, T=3.0):
    h = np.asarray(h, dtype=complex)
    return HamiltonianPath(lambda t: h, T, cyclic=True)


def test_static_hamiltonian():
    h = np.diag([2.0, -0.5]).astype(complex)
    frame = build_frame(static_path(h), 50)
    for a in frame.unitaries:
        np.testing.assert_allclose(a, np.eye(2), atol=1e-15)
    ph = holonomy(frame)
    np.testing.assert_allclose(ph.geometric, 0, atol=1e-15)
    np.testing.assert_allclose(ph.dynamic, [0.5 * 3.0, -2.0 * 3.0], atol=1e-12)


def test_laser_loop_phase_difference():
    m = LaserModel(0.5, 1.0, 1.0)
    ph = holonomy(build_frame(m.path(), 10_000))
    e = math.sqrt(1.0625)
    # ascending order: index 1 is the upper state |+>
    assert abs(wrap_phase(ph.geometric[1] - ph.geometric[0] - 2 * np.pi * 0.5 / (2 * e))) < 1e-6


def test_laser_zero_detuning_has_no_offset():
    ph = holonomy(build_frame(LaserModel(0.0, 1.0, 1.0).path(), 2000))
    assert abs(wrap_phase(ph.geometric[1] - ph.geometric[0])) < 1e-9


@pytest.mark.parametrize("theta", [np.pi / 6, np.pi / 3, np.pi / 2])
def test_cone_half_solid_angle(theta):
    ph = holonomy(build_frame(cone_path(theta), 10_000))
    half = np.pi * (1 - math.cos(theta))
    assert abs(abs(ph.geometric[1]) - half) < 1e-5
    assert abs(wrap_phase(ph.geometric[0] + ph.geometric[1])) < 1e-8
    # implementation sign: counter-clockwise loop gives the upper level -Omega/2
    assert abs(wrap_phase(ph.geometric[1] + half)) < 1e-5


def test_transport_residuals_second_order():
    res = []
    for steps in (200, 400, 800):
        im, re = build_frame(cone_path(np.pi / 3), steps).transport_residuals()
        assert im < 1e-15
        res.append(re)
    assert 3.5 < res[0] / res[1] < 4.5
    assert 3.5 < res[1] / res[2] < 4.5


def test_frame_diagonalizes_hamiltonian():
    m = LaserModel(0.5, 1.0, 10.0)
    frame = build_frame(m.path(), 1000)
    for k in (0, 250, 999):
        ha = frame.unitaries[k].conj().T @ m.hamiltonian(frame.times[k]) @ frame.unitaries[k]
        b0 = frame.basis0
        np.testing.assert_allclose(ha, b0 @ np.diag(frame.energies[k]) @ b0.conj().T, atol=1e-12)


def test_laser_eigenstates_match_transport():
    m = LaserModel(0.5, 1.0, 1.0)
    frame = build_frame(m.path(), 4000, initial_basis=m.c_matrix(0.0)[:, ::-1])
    for k in (0, 1000, 2500, 4000):
        c = m.c_matrix(frame.times[k])[:, ::-1]  # columns |->, |+> in ascending order
        ov = np.einsum("in,in->n", c.conj(), frame.vectors[k])
        np.testing.assert_allclose(np.abs(ov), 1, atol=1e-9)
        assert np.max(np.abs(np.angle(ov))) < 1e-6


def test_off_grid_interpolation_unitary():
    frame = build_frame(cone_path(0.7), 100)
    a = frame.at(0.12345)
    np.testing.assert_allclose(a.conj().T @ a, np.eye(2), atol=1e-14)
    assert np.linalg.norm(a - frame.at(0.12)) < 0.05


def test_crossing_and_open_path_errors():
    with pytest.raises(BandCrossing):
        build_frame(HamiltonianPath(lambda t: (t - 0.5) * PAULI_Z + 0 * t, 1.0), 10)
    with pytest.raises(NotCyclic):
        holonomy(build_frame(cone_path(0.5, 0.0, 0.5), 100))


def test_pati_cyclic_equals_holonomy():
    frame = build_frame(cone_path(np.pi / 3), 10_000)
    np.testing.assert_allclose(pati_reference(frame).geometric, holonomy(frame).geometric, atol=1e-8)


def test_pati_half_loops_compose():
    theta = np.pi / 3
    full = holonomy(build_frame(cone_path(theta), 10_000))
    first = build_frame(cone_path(theta, 0.0, 0.5), 5000)
    second = build_frame(cone_path(theta, 0.5, 1.0), 5000, initial_basis=first.vectors[-1])
    pa, pb = pati_reference(first), pati_reference(second)
    assert np.all(np.isfinite(pa.geometric))
    np.testing.assert_allclose(wrap_phase(pa.geometric + pb.geometric), full.geometric, atol=1e-8)


def test_pati_static_zero():
    ph = pati_reference(build_frame(static_path(np.diag([1.0, 0.0, -1.0])), 20))
    np.testing.assert_allclose(ph.geometric, 0, atol=1e-15)


def test_nonabelian_reduces_to_abelian():
    path = cone_path(np.pi / 3)
    nh = nonabelian_holonomy(path, 4000)
    assert [len(c) for c in nh.clusters] == [1, 1]
    ph = holonomy(build_frame(path, 4000))
    np.testing.assert_allclose([np.angle(b[0, 0]) for b in nh.blocks], ph.geometric, atol=1e-10)


def _reflection(theta, T=1.0):
    def h(t):
        az = 2 * np.pi * t / T
        n = np.array([math.sin(theta) * math.cos(az), math.sin(theta) * math.sin(az), math.cos(theta)])
        return np.eye(3) - 2 * np.outer(n, n)

    return HamiltonianPath(h, T, cyclic=True)


def test_degenerate_block_unitary_and_doubled_loop():
    theta = np.pi / 4
    nh = nonabelian_holonomy(_reflection(theta), 4000)
    assert [len(c) for c in nh.clusters] == [1, 2]
    u = nh.blocks[1]
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-8)
    omega = 2 * np.pi * (1 - math.cos(theta))
    np.testing.assert_allclose(np.sort(np.angle(np.linalg.eigvals(u))), [-omega, omega], atol=1e-5)
    doubled = HamiltonianPath(_reflection(theta, 1.0).sampler, 2.0, cyclic=True)
    u2 = nonabelian_holonomy(doubled, 8000).blocks[1]
    np.testing.assert_allclose(u2, u @ u, atol=1e-6)


def test_static_degenerate_identity_blocks():
    nh = nonabelian_holonomy(static_path(np.diag([1.0, 1.0, 3.0])), 10)
    for b in nh.blocks:
        np.testing.assert_allclose(b, np.eye(len(b)), atol=1e-15)


def test_degeneracy_drift_detected():
    path = HamiltonianPath(lambda t: np.diag([0.0, math.sin(np.pi * t) ** 2, 3.0]), 1.0)
    with pytest.raises(DegeneracyDrift):
        nonabelian_holonomy(path, 20)


def test_solid_angle_examples():
    az = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    equator = np.stack([np.cos(az), np.sin(az), 0 * az], axis=1)
    assert abs(solid_angle(equator) - 2 * np.pi) < 1e-12
    assert solid_angle(np.tile([0.0, 0.0, 1.0], (5, 1))) == 0.0


@given(st.floats(min_value=0.05, max_value=3.0), st.integers(min_value=3, max_value=60))
def test_solid_angle_cone(theta, n):
    az = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
    pts = np.stack([math.sin(theta) * np.cos(az), math.sin(theta) * np.sin(az), math.cos(theta) + 0 * az], axis=1)
    cap = 2 * np.pi * (1 - math.cos(theta))
    expected = np.mod(cap + 2 * np.pi, 4 * np.pi) - 2 * np.pi
    assert abs(wrap_phase(solid_angle(pts) - expected)) < 1e-4
    # coarse polygons: area of the geodesic polygon, still bounded by the cap
    az = np.linspace(0, 2 * np.pi, n, endpoint=False)
    poly = np.stack([math.sin(theta) * np.cos(az), math.sin(theta) * np.sin(az), math.cos(theta) + 0 * az], axis=1)
    assert np.isfinite(solid_angle(poly))


def test_spin_model_solid_angle_matches_transport():
    m = SpinModel(1.0, np.pi / 4, 1.0)
    ph = holonomy(build_frame(m.path(), 10_000))
    assert abs(wrap_phase(ph.geometric[1] + 0.5 * m.solid_angle())) < 1e-5
