"""Rotating-axis frames built from parallel-transported eigenvectors.

A frame samples the unitary ``A(t) = sum_n |n(t)><n(0)|`` on a uniform time
grid, where the ``|n(t)>`` are eigenvectors of ``H(t)`` whose phases are
fixed step by step so that ``<n(t_k)|n(t_{k+1})>`` is real and positive.

Sign convention: the geometric phase of level ``n`` is
``arg <n(0)|A(T)|n(0)> = arg <n(0)|n(T)>``. For ``H = E n.sigma`` with the
field sweeping a cone counter-clockwise about +z this gives
``phi_upper = -Omega/2`` (Omega the enclosed solid angle) and
``phi_lower = +Omega/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import (
    AntipodalStep,
    BandCrossing,
    DegeneracyDrift,
    DimMismatch,
    ExcessLeakage,
    NotCyclic,
    OrthogonalEndpoint,
    OutOfFrameRange,
)
from .matcore import dagger, degenerate_clusters, eig_hermitian_batch, fnorm, polar_unitary

CYCLIC_TOL = 1e-10
LEAKAGE_TOL = 1e-4


def wrap_phase(x):
    """Principal value in (-pi, pi]."""
    y = np.angle(np.exp(1j * np.asarray(x, dtype=float)))
    y = np.where(np.isclose(y, -np.pi, rtol=0.0, atol=1e-15), np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def sample_matrices(fn: Callable, times) -> np.ndarray:
    """Evaluate ``fn`` on a 1-D time array, returning ``(M, N, N)``.

    Vectorized samplers (returning a stack for an array argument) are used
    as-is; scalar-only samplers are called point by point.
    """
    times = np.asarray(times, dtype=float)
    try:
        out = np.asarray(fn(times), dtype=np.complex128)
        if out.ndim == 3 and out.shape[0] == times.shape[0]:
            return out
    except (TypeError, ValueError):
        pass
    return np.stack([np.asarray(fn(float(t)), dtype=np.complex128) for t in times])


@dataclass(frozen=True)
class HamiltonianPath:
    """Hermitian ``H(t)`` on ``[t0, t1]`` (hbar = 1)."""

    sampler: Callable
    t1: float
    t0: float = 0.0
    cyclic: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("path needs t1 > t0")
        if self.cyclic:
            h0, h1 = self.sample([self.t0, self.t1])
            if fnorm(h0 - h1) >= CYCLIC_TOL * max(fnorm(h0), 1e-300):
                raise NotCyclic(f"H(t1) differs from H(t0) by {fnorm(h0 - h1):.3e}")

    @property
    def period(self) -> float:
        return self.t1 - self.t0

    @property
    def dim(self) -> int:
        return self(self.t0).shape[0]

    def __call__(self, t) -> np.ndarray:
        return np.asarray(self.sampler(t), dtype=np.complex128)

    def sample(self, times) -> np.ndarray:
        return sample_matrices(self.sampler, times)

    def closes(self) -> bool:
        h0, h1 = self.sample([self.t0, self.t1])
        return fnorm(h0 - h1) < CYCLIC_TOL * max(fnorm(h0), 1e-300)


@dataclass(frozen=True)
class PhaseDecomposition:
    geometric: np.ndarray  # radians, principal values
    dynamic: np.ndarray  # -int E_n dt
    holonomy: np.ndarray  # A(T), or the generalized holonomy for open paths
    basis: np.ndarray  # initial eigenbasis (columns)
    leakage: float = 0.0

    def phase_factors(self) -> np.ndarray:
        return np.exp(1j * self.geometric)


@dataclass(frozen=True, eq=False)
class TransportFrame:
    times: np.ndarray
    unitaries: np.ndarray  # A(t_k), (M, N, N)
    energies: np.ndarray  # E_n(t_k), (M, N)
    vectors: np.ndarray  # transported |n(t_k)> as columns, (M, N, N)
    path: HamiltonianPath = field(repr=False)

    @property
    def basis0(self) -> np.ndarray:
        return self.vectors[0]

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dim(self) -> int:
        return self.unitaries.shape[1]

    def index_of(self, t: float) -> int | None:
        """Grid index for ``t`` if it lies on the grid, else ``None``."""
        t0, t1 = self.times[0], self.times[-1]
        dt = (t1 - t0) / self.steps
        if t < t0 - 1e-9 * dt or t > t1 + 1e-9 * dt:
            raise OutOfFrameRange(f"t={t} outside [{t0}, {t1}]")
        x = (t - t0) / dt
        k = int(round(x))
        return k if abs(x - k) < 1e-6 else None

    def at(self, t: float) -> np.ndarray:
        """``A(t)``; off-grid times use linear interpolation re-unitarized."""
        k = self.index_of(t)
        if k is not None:
            return self.unitaries[k]
        t0 = self.times[0]
        dt = (self.times[-1] - t0) / self.steps
        x = (t - t0) / dt
        k = min(int(np.floor(x)), self.steps - 1)
        s = x - k
        return polar_unitary((1 - s) * self.unitaries[k] + s * self.unitaries[k + 1])

    def energies_at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.energies[:, n]) for n in range(self.dim)])

    def gauge_generators(self) -> np.ndarray:
        """``A†(t) dA/dt`` on the grid (anti-Hermitian, second order)."""
        a = self.unitaries
        h = (self.times[-1] - self.times[0]) / self.steps
        da = np.empty_like(a)
        if self.steps >= 2:
            da[1:-1] = (a[2:] - a[:-2]) / (2 * h)
            da[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
            da[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
        else:
            da[:] = (a[1] - a[0]) / h
        k = dagger(a) @ da
        return 0.5 * (k - dagger(k))

    def gauge_generator_at(self, t: float) -> np.ndarray:
        k = self.index_of(t)
        gens = self.gauge_generators()
        if k is not None:
            return gens[k]
        t0 = self.times[0]
        dt = (self.times[-1] - t0) / self.steps
        x = (t - t0) / dt
        k = min(int(np.floor(x)), self.steps - 1)
        s = x - k
        return (1 - s) * gens[k] + s * gens[k + 1]

    def transport_residuals(self) -> tuple[float, float]:
        """Max ``|Im <n_k|n_k+1>|`` and max ``1 - Re <n_k|n_k+1>``."""
        v = self.vectors
        o = np.einsum("kin,kin->kn", v[:-1].conj(), v[1:])
        return float(np.max(np.abs(o.imag))), float(np.max(1.0 - o.real))

    def rows(self):
        n = self.dim
        cols = ["t"]
        for i in range(n):
            for j in range(n):
                cols += [f"A{i}{j}_re", f"A{i}{j}_im"]
        cols += [f"E{k}" for k in range(n)]
        flat = self.unitaries.reshape(len(self.times), -1)
        data = np.empty((len(self.times), 1 + 2 * n * n + n))
        data[:, 0] = self.times
        data[:, 1 : 1 + 2 * n * n : 2] = flat.real
        data[:, 2 : 2 + 2 * n * n : 2] = flat.imag
        data[:, 1 + 2 * n * n :] = self.energies
        return cols, data


def _match_columns(ref: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Permutation ``p`` with ``cand[:, p[n]]`` best overlapping ``ref[:, n]``."""
    ov = np.abs(dagger(ref) @ cand)
    p = np.argmax(ov, axis=1)
    if len(set(p.tolist())) != len(p):
        raise BandCrossing("eigenvector matching between steps is ambiguous")
    return p


def build_frame(
    path: HamiltonianPath,
    steps: int,
    *,
    initial_basis: np.ndarray | None = None,
    gap_floor: float | None = None,
    tol: float = 1e-12,
    require_cyclic: bool = False,
) -> TransportFrame:
    """Sample ``H`` on ``steps + 1`` points and parallel-transport its eigenvectors.

    ``initial_basis`` (columns) replaces the canonical-gauge eigenvectors of
    ``H(t0)``; it must consist of eigenvectors of ``H(t0)`` in any phase.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if require_cyclic and not path.closes():
        raise NotCyclic("path does not close")
    times = np.linspace(path.t0, path.t1, steps + 1)
    hs = path.sample(times)
    w, v = eig_hermitian_batch(hs, tol)
    hnorm = float(np.max(np.sqrt(np.sum(np.abs(hs) ** 2, axis=(1, 2)))))
    floor = 1e-6 * hnorm if gap_floor is None else gap_floor
    if w.shape[1] > 1:
        gap = float(np.min(np.diff(w, axis=1)))
        if gap <= floor:
            raise BandCrossing(f"spectral gap {gap:.3e} below floor {floor:.3e}")

    # band continuity by maximal overlap; only reorder when labels actually swap
    ov = np.abs(np.einsum("kin,kim->knm", v[:-1].conj(), v[1:]))
    if not np.all(np.argmax(ov, axis=2) == np.arange(w.shape[1])):
        for k in range(steps):
            p = _match_columns(v[k], v[k + 1])
            v[k + 1] = v[k + 1][:, p]
            w[k + 1] = w[k + 1][p]

    if initial_basis is not None:
        b = np.asarray(initial_basis, dtype=np.complex128)
        if b.shape != v[0].shape:
            raise DimMismatch(f"initial basis shape {b.shape} != {v[0].shape}")
        v[0] = b[:, _match_columns(v[0], b)]

    vecs, min_ov = kernels.transport_abelian(np.ascontiguousarray(v))
    if min_ov < 0.5:
        raise BandCrossing(f"successive eigenvectors overlap only {min_ov:.3f}; increase steps")
    a = vecs @ dagger(vecs[0])[None]
    return TransportFrame(times=times, unitaries=a, energies=w, vectors=vecs, path=path)


def _dynamic_phases(frame: TransportFrame) -> np.ndarray:
    return -np.trapezoid(frame.energies, frame.times, axis=0)


def holonomy(frame: TransportFrame) -> PhaseDecomposition:
    """Geometric and dynamic phases at loop closure."""
    if not frame.path.closes():
        raise NotCyclic("holonomy needs a closed path; use pati_reference")
    b0 = frame.basis0
    m = dagger(b0) @ frame.vectors[-1]
    off = m - np.diag(np.diag(m))
    leak = float(np.max(np.abs(off))) if m.shape[0] > 1 else 0.0
    if leak > LEAKAGE_TOL:
        raise ExcessLeakage(f"off-diagonal holonomy {leak:.3e}; step size too coarse")
    return PhaseDecomposition(
        geometric=wrap_phase(np.angle(np.diag(m))),
        dynamic=_dynamic_phases(frame),
        holonomy=frame.unitaries[-1],
        basis=b0,
        leakage=leak,
    )


def pati_reference(frame: TransportFrame, endpoint_basis: np.ndarray | None = None) -> PhaseDecomposition:
    """Generalized (non-cyclic) phases relative to the Pancharatnam reference section.

    The reference eigenvector of ``H(T)`` for level ``n`` is the one whose
    overlap with ``|n(0)>`` is real and positive.
    """
    b0 = frame.basis0
    end = frame.vectors[-1]
    if endpoint_basis is None:
        endpoint_basis = end
    e = np.asarray(endpoint_basis, dtype=np.complex128)
    e = e[:, _match_columns(end, e)]
    ov = np.einsum("in,in->n", b0.conj(), e)
    if np.min(np.abs(ov)) < 1e-12:
        raise OrthogonalEndpoint("initial and final eigenvectors are orthogonal")
    ref = e * (np.conj(ov) / np.abs(ov))[None, :]
    a_ref = ref @ dagger(b0)
    gen = dagger(a_ref) @ frame.unitaries[-1]
    phases = np.angle(np.einsum("in,ij,jn->n", b0.conj(), gen, b0))
    m = dagger(b0) @ gen @ b0
    off = m - np.diag(np.diag(m))
    return PhaseDecomposition(
        geometric=wrap_phase(phases),
        dynamic=_dynamic_phases(frame),
        holonomy=gen,
        basis=b0,
        leakage=float(np.max(np.abs(off))) if m.shape[0] > 1 else 0.0,
    )


@dataclass(frozen=True)
class NonAbelianHolonomy:
    clusters: list  # eigenvalue index groups, ascending energy
    blocks: list  # one unitary (M_n x M_n) per cluster
    basis: np.ndarray  # initial transported basis (columns, cluster order)

    def eigenphases(self, n: int) -> np.ndarray:
        return np.sort(np.angle(np.linalg.eigvals(self.blocks[n])))


def nonabelian_holonomy(
    path: HamiltonianPath,
    steps: int,
    cluster_tol: float | None = None,
    *,
    tol: float = 1e-12,
) -> NonAbelianHolonomy:
    """Holonomy of each degenerate eigenspace over a closed loop.

    Successive subspace bases are aligned with the unitary polar factor of
    their overlap matrix, the discrete form of ``<n_m|d/dt n_m'> = 0``.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if not path.closes():
        raise NotCyclic("non-Abelian holonomy needs a closed path")
    times = np.linspace(path.t0, path.t1, steps + 1)
    hs = path.sample(times)
    w, v = eig_hermitian_batch(hs, tol)
    hnorm = float(np.max(np.sqrt(np.sum(np.abs(hs) ** 2, axis=(1, 2)))))
    ctol = 1e-9 * hnorm if cluster_tol is None else cluster_tol
    clusters = degenerate_clusters(w[0], ctol)
    for k in range(1, len(times)):
        if degenerate_clusters(w[k], ctol) != clusters:
            raise DegeneracyDrift(f"degeneracy pattern changes at t={times[k]:.6g}")
    blocks = []
    basis = np.empty_like(v[0])
    for idx in clusters:
        cur = v[0][:, idx]
        start = cur
        for k in range(1, len(times)):
            nxt = v[k][:, idx]
            s = dagger(cur) @ nxt
            if np.min(np.linalg.svd(s, compute_uv=False)) < 0.5:
                raise BandCrossing(f"subspace overlap collapsed at step {k}; increase steps")
            cur = nxt @ dagger(polar_unitary(s))
        blocks.append(dagger(start) @ cur)
        basis[:, idx] = start
    return NonAbelianHolonomy(clusters=clusters, blocks=blocks, basis=basis)


def solid_angle(axis_path: Sequence, closed: bool = True) -> float:
    """Signed solid angle (steradians) enclosed by a loop of unit vectors.

    Counter-clockwise loops seen from outside the enclosed cap are positive.
    The result is reduced modulo 4 pi into (-2 pi, 2 pi]; the Berry phase
    only needs it modulo 4 pi.
    """
    v = np.asarray(axis_path, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise DimMismatch("axis path must have shape (M, 3)")
    v = v / np.linalg.norm(v, axis=1)[:, None]
    if not closed:
        raise ValueError("solid angle needs a closed path")
    if np.allclose(v[0], v[-1], atol=1e-12):
        v = v[:-1]
    if len(v) < 3:
        return 0.0
    nxt = np.roll(v, -1, axis=0)
    if np.min(np.einsum("ij,ij->i", v, nxt)) < -1 + 1e-12:
        raise AntipodalStep("consecutive axes are antipodal")

    c = v.sum(axis=0)
    if np.linalg.norm(c) > 0.1 * len(v):
        ref = c / np.linalg.norm(c)
    else:
        ref = np.linalg.svd(v - 0.0)[2][-1]
        ref = ref if ref @ np.cross(v[0], v[1]) >= 0 else -ref
    if np.min(v @ ref) < -1 + 1e-6:
        rng = np.random.default_rng(0)
        ref = ref + 1e-3 * rng.normal(size=3)
        ref /= np.linalg.norm(ref)
    num = np.einsum("j,ij->i", ref, np.cross(v, nxt))
    den = 1.0 + v @ ref + nxt @ ref + np.einsum("ij,ij->i", v, nxt)
    total = float(2.0 * np.sum(np.arctan2(num, den)))
    total = np.mod(total + 2 * np.pi, 4 * np.pi) - 2 * np.pi
    if np.isclose(total, -2 * np.pi, atol=1e-12):
        total = 2 * np.pi
    return float(total)
