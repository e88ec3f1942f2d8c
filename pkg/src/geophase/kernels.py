"""Inner loops: batched complex Jacobi, discrete parallel transport, RK4.

Each kernel exists twice. ``*_nb`` functions are numba-compiled loops;
``*_np`` functions are the numpy fallback. The public names at the bottom
dispatch on :data:`geophase._accel.USE_NUMBA`.  Both versions are always
importable so they can be compared directly (tests, benchmarks).
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit, pick

# ---------------------------------------------------------------------------
# Cyclic Jacobi for complex Hermitian matrices
# ---------------------------------------------------------------------------


@njit
def _jacobi_one_nb(a, v, thresh, max_sweeps):
    n = a.shape[0]
    polished = False
    for sweep in range(max_sweeps + 1):
        if polished:
            return sweep
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        if np.sqrt(off) <= thresh:
            # one extra sweep: convergence is quadratic, so this reaches rounding level
            if off == 0.0:
                return sweep
            polished = True
        elif sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = abs(apq)
                if g == 0.0:
                    continue
                e = apq / g
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * g)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                se = s * e
                sec = s * np.conj(e)
                for i in range(n):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - sec * aiq
                    a[i, q] = se * aip + c * aiq
                for j in range(n):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - se * aqj
                    a[q, j] = sec * apj + c * aqj
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - sec * viq
                    v[i, q] = se * vip + c * viq
    return -1


@njit
def jacobi_batch_nb(mats, thresh, max_sweeps):
    b, n, _ = mats.shape
    w = np.empty((b, n))
    vecs = np.empty((b, n, n), dtype=np.complex128)
    sweeps = np.empty(b, dtype=np.int64)
    for k in range(b):
        a = mats[k].copy()
        v = np.eye(n, dtype=np.complex128)
        sweeps[k] = _jacobi_one_nb(a, v, thresh[k], max_sweeps)
        for i in range(n):
            w[k, i] = a[i, i].real
        vecs[k] = v
    return w, vecs, sweeps


def jacobi_batch_np(mats, thresh, max_sweeps):
    """Same cyclic sweep as the compiled kernel, vectorized over the batch."""
    a = np.array(mats, dtype=np.complex128, copy=True)
    b, n, _ = a.shape
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape).copy()
    sweeps = np.full(b, -1, dtype=np.int64)
    offmask = ~np.eye(n, dtype=bool)
    active = np.ones(b, dtype=bool)
    polishing = np.zeros(b, dtype=bool)
    for sweep in range(max_sweeps + 1):
        sweeps[polishing] = sweep
        active &= ~polishing
        off = np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))
        conv = active & (off <= thresh)
        exact = conv & (off == 0.0)
        sweeps[exact] = sweep
        active &= ~exact
        polishing = conv & ~exact
        if not active.any() or (sweep == max_sweeps and not polishing.any()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                g = np.abs(apq)
                rot = active & (g > 0.0)
                gs = np.where(rot, g, 1.0)
                e = np.where(rot, apq / gs, 1.0)
                tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * gs)
                t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(rot, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                se = (s * e)[:, None]
                sec = (s * np.conj(e))[:, None]
                cc = c[:, None]
                cp, cq = a[:, :, p].copy(), a[:, :, q].copy()
                a[:, :, p] = cc * cp - sec * cq
                a[:, :, q] = se * cp + cc * cq
                rp, rq = a[:, p, :].copy(), a[:, q, :].copy()
                a[:, p, :] = cc * rp - se * rq
                a[:, q, :] = sec * rp + cc * rq
                a[rot, p, q] = 0.0
                a[rot, q, p] = 0.0
                a[:, p, p] = a[:, p, p].real
                a[:, q, q] = a[:, q, q].real
                vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
                v[:, :, p] = cc * vp - sec * vq
                v[:, :, q] = se * vp + cc * vq
    w = np.real(np.diagonal(a, axis1=1, axis2=2)).copy()
    return w, v, sweeps


# ---------------------------------------------------------------------------
# Abelian discrete parallel transport
# ---------------------------------------------------------------------------


@njit
def transport_abelian_nb(vecs):
    m, n, _ = vecs.shape
    out = np.empty_like(vecs)
    out[0] = vecs[0]
    min_overlap = np.inf
    for k in range(m - 1):
        for col in range(n):
            o = 0.0 + 0.0j
            for i in range(n):
                o += np.conj(out[k, i, col]) * vecs[k + 1, i, col]
            r = abs(o)
            if r < min_overlap:
                min_overlap = r
            ph = np.conj(o) / r if r > 0.0 else 1.0 + 0.0j
            for i in range(n):
                out[k + 1, i, col] = vecs[k + 1, i, col] * ph
    return out, min_overlap


def transport_abelian_np(vecs):
    vecs = np.asarray(vecs, dtype=np.complex128)
    o = np.einsum("kin,kin->kn", vecs[:-1].conj(), vecs[1:])
    r = np.abs(o)
    min_overlap = float(r.min()) if r.size else np.inf
    chi = np.zeros((vecs.shape[0], vecs.shape[2]))
    chi[1:] = -np.cumsum(np.angle(o), axis=0)
    return vecs * np.exp(1j * chi)[:, None, :], min_overlap


# ---------------------------------------------------------------------------
# Fixed-step RK4 on a sampled Lindblad generator
#
#   drho/dt = -i [H(t), rho] + unvec(D(t) vec(rho))      (row-major vec)
#
# hs holds H on the half-step grid t0 + j h/2, j = 0..2*steps; ds holds the
# dissipator superoperator either once (constant) or on the same grid.
# Status codes: 0 ok, 1 positivity breach, 2 non-finite state.
# ---------------------------------------------------------------------------


@njit
def _rhs_nb(rho, hm, dm, out):
    n = rho.shape[0]
    for i in range(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += hm[i, k] * rho[k, j] - rho[i, k] * hm[k, j]
            acc = -1j * acc
            row = i * n + j
            for k in range(n):
                for l in range(n):
                    acc += dm[row, k * n + l] * rho[k, l]
            out[i, j] = acc


@njit
def _min_eig_nb(rho):
    n = rho.shape[0]
    if n == 1:
        return rho[0, 0].real
    if n == 2:
        a = rho[0, 0].real
        d = rho[1, 1].real
        b = abs(rho[0, 1])
        return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b * b)
    return np.linalg.eigvalsh(rho)[0]


@njit
def rk4_sampled_nb(hs, ds, rho0, h, steps, rec_steps, pos_tol):
    n = rho0.shape[0]
    nrec = rec_steps.shape[0]
    states = np.empty((nrec, n, n), dtype=np.complex128)
    tr_err = np.zeros(nrec)
    herm_err = np.zeros(nrec)
    min_eig = np.zeros(nrec)
    stats = np.zeros(3)  # max trace error, max hermiticity residual, min eigenvalue
    stats[2] = np.inf
    rho = rho0.copy()
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    const_d = ds.shape[0] == 1
    r = 0
    for step in range(steps):
        j = 2 * step
        d0 = ds[0] if const_d else ds[j]
        d1 = ds[0] if const_d else ds[j + 1]
        d2 = ds[0] if const_d else ds[j + 2]
        _rhs_nb(rho, hs[j], d0, k1)
        for a in range(n):
            for b in range(n):
                tmp[a, b] = rho[a, b] + 0.5 * h * k1[a, b]
        _rhs_nb(tmp, hs[j + 1], d1, k2)
        for a in range(n):
            for b in range(n):
                tmp[a, b] = rho[a, b] + 0.5 * h * k2[a, b]
        _rhs_nb(tmp, hs[j + 1], d1, k3)
        for a in range(n):
            for b in range(n):
                tmp[a, b] = rho[a, b] + h * k3[a, b]
        _rhs_nb(tmp, hs[j + 2], d2, k4)
        tr = 0.0 + 0.0j
        for a in range(n):
            for b in range(n):
                rho[a, b] += (h / 6.0) * (k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b])
            tr += rho[a, a]
        terr = abs(tr - 1.0)
        herr = 0.0
        for a in range(n):
            for b in range(a, n):
                dev = abs(rho[a, b] - np.conj(rho[b, a]))
                if dev > herr:
                    herr = dev
        if not np.isfinite(terr) or not np.isfinite(herr):
            return states, tr_err, herm_err, min_eig, stats, 2, step
        for a in range(n):
            for b in range(a, n):
                avg = 0.5 * (rho[a, b] + np.conj(rho[b, a]))
                rho[a, b] = avg
                rho[b, a] = np.conj(avg)
        trr = 0.0
        for a in range(n):
            trr += rho[a, a].real
        for a in range(n):
            for b in range(n):
                rho[a, b] /= trr
        lam = _min_eig_nb(rho)
        if terr > stats[0]:
            stats[0] = terr
        if herr > stats[1]:
            stats[1] = herr
        if lam < stats[2]:
            stats[2] = lam
        if r < nrec and rec_steps[r] == step + 1:
            states[r] = rho
            tr_err[r] = terr
            herm_err[r] = herr
            min_eig[r] = lam
            r += 1
        if lam < -pos_tol:
            return states, tr_err, herm_err, min_eig, stats, 1, step
    return states, tr_err, herm_err, min_eig, stats, 0, steps


def _min_eig_np(rho):
    if rho.shape[0] == 2:
        a, d = rho[0, 0].real, rho[1, 1].real
        return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + abs(rho[0, 1]) ** 2)
    return float(np.linalg.eigvalsh(rho)[0])


def rk4_sampled_np(hs, ds, rho0, h, steps, rec_steps, pos_tol):
    n = rho0.shape[0]
    nrec = rec_steps.shape[0]
    states = np.empty((nrec, n, n), dtype=np.complex128)
    tr_err = np.zeros(nrec)
    herm_err = np.zeros(nrec)
    min_eig = np.zeros(nrec)
    stats = np.array([0.0, 0.0, np.inf])
    const_d = ds.shape[0] == 1

    def f(x, hm, dm):
        return -1j * (hm @ x - x @ hm) + (dm @ x.reshape(-1)).reshape(n, n)

    rho = np.array(rho0, dtype=np.complex128)
    r = 0
    for step in range(steps):
        j = 2 * step
        d0, d1, d2 = (ds[0], ds[0], ds[0]) if const_d else (ds[j], ds[j + 1], ds[j + 2])
        k1 = f(rho, hs[j], d0)
        k2 = f(rho + 0.5 * h * k1, hs[j + 1], d1)
        k3 = f(rho + 0.5 * h * k2, hs[j + 1], d1)
        k4 = f(rho + h * k3, hs[j + 2], d2)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        terr = abs(np.trace(rho) - 1.0)
        herr = float(np.max(np.abs(rho - rho.conj().T)))
        if not (np.isfinite(terr) and np.isfinite(herr)):
            return states, tr_err, herm_err, min_eig, stats, 2, step
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        lam = _min_eig_np(rho)
        stats[0] = max(stats[0], terr)
        stats[1] = max(stats[1], herr)
        stats[2] = min(stats[2], lam)
        if r < nrec and rec_steps[r] == step + 1:
            states[r] = rho
            tr_err[r], herm_err[r], min_eig[r] = terr, herr, lam
            r += 1
        if lam < -pos_tol:
            return states, tr_err, herm_err, min_eig, stats, 1, step
    return states, tr_err, herm_err, min_eig, stats, 0, steps


jacobi_batch = pick(jacobi_batch_nb, jacobi_batch_np)
transport_abelian = pick(transport_abelian_nb, transport_abelian_np)
rk4_sampled = pick(rk4_sampled_nb, rk4_sampled_np)

__all__ = [
    "USE_NUMBA",
    "jacobi_batch",
    "jacobi_batch_nb",
    "jacobi_batch_np",
    "transport_abelian",
    "transport_abelian_nb",
    "transport_abelian_np",
    "rk4_sampled",
    "rk4_sampled_nb",
    "rk4_sampled_np",
]
