"""The numba kernels and the numpy fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from geophase import kernels
from geophase.lindblad import superoperator

from .conftest import random_density, random_hermitian


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**32 - 1))
def test_jacobi_equivalence(n, seed):
    rng = np.random.default_rng(seed)
    ms = np.stack([random_hermitian(rng, n) for _ in range(3)])
    thresh = 1e-12 * np.sqrt(np.sum(np.abs(ms) ** 2, axis=(1, 2)))
    w1, v1, s1 = kernels.jacobi_batch_nb(ms.copy(), thresh, 100)
    w2, v2, s2 = kernels.jacobi_batch_np(ms.copy(), thresh, 100)
    assert np.all(s1 >= 0) and np.all(s2 >= 0)
    np.testing.assert_allclose(np.sort(w1, axis=1), np.sort(w2, axis=1), atol=1e-12)
    for k in range(3):
        for v, w in ((v1[k], w1[k]), (v2[k], w2[k])):
            assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - ms[k]) < 1e-11


def test_transport_equivalence():
    rng = np.random.default_rng(11)
    th = np.linspace(0, 2 * np.pi, 200)
    vecs = np.zeros((200, 2, 2), dtype=complex)
    vecs[:, 0, 0] = np.cos(0.5) * np.exp(1j * rng.uniform(0, 6, 200))
    vecs[:, 1, 0] = np.sin(0.5) * np.exp(1j * th)
    vecs[:, 0, 1] = -np.sin(0.5) * np.exp(-1j * th)
    vecs[:, 1, 1] = np.cos(0.5)
    a, ma = kernels.transport_abelian_nb(vecs.copy())
    b, mb = kernels.transport_abelian_np(vecs.copy())
    np.testing.assert_allclose(a, b, atol=1e-13)
    assert abs(ma - mb) < 1e-14
    ov = np.einsum("kin,kin->kn", a[:-1].conj(), a[1:])
    assert np.max(np.abs(ov.imag)) < 1e-15


def test_rk4_equivalence():
    rng = np.random.default_rng(12)
    steps = 400
    hs = np.stack([random_hermitian(rng, 2, 0.5)] * (2 * steps + 1))
    hs += 0.1 * np.sin(np.linspace(0, 3, 2 * steps + 1))[:, None, None] * np.array([[0, 1], [1, 0]])
    g = 0.2 * (rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2)))
    ds = superoperator(g)[None]
    rho0 = random_density(rng, 2)
    rec = np.array([100, 200, 400])
    out_nb = kernels.rk4_sampled_nb(hs, ds, rho0.copy(), 0.01, steps, rec, 1e-6)
    out_np = kernels.rk4_sampled_np(hs, ds, rho0.copy(), 0.01, steps, rec, 1e-6)
    np.testing.assert_allclose(out_nb[0], out_np[0], atol=1e-13)
    assert out_nb[5] == out_np[5] == 0


def test_env_flag_selects_fallback():
    code = "import geophase.kernels as k; print(k.USE_NUMBA, k.rk4_sampled is k.rk4_sampled_np)"
    env = dict(os.environ, GEOPHASE_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]
