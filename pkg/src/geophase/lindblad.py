"""Lindblad generators and a fixed-step RK4 integrator for density matrices.

Conventions: hbar = 1, row-major vectorization ``vec(A X B) = (A ⊗ B^T) vec(X)``.
A Lindblad member with weight ``w`` and operator ``G`` contributes
``w (G rho G† - {G†G, rho}/2)``, i.e. ``(1/2) L_Γ`` with ``Γ = sqrt(w) G``.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import kernels
from .errors import (
    DimMismatch,
    GridMismatch,
    InvalidState,
    NonFinite,
    NotUnitary,
    PositivityBreach,
    SecularResonance,
)
from .matcore import dagger, eig_hermitian, is_unitary
from .transport import TransportFrame, sample_matrices

log = logging.getLogger(__name__)

POSITIVITY_BREACH = 1e-6

_observers: list = []


@contextmanager
def record_trajectories():
    """Collect every trajectory produced by :func:`integrate` inside the block."""
    seen: list = []
    _observers.append(seen.append)
    try:
        yield seen
    finally:
        _observers.remove(seen.append)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def as_density(rho, herm_tol: float = 1e-10, trace_tol: float = 1e-10, pos_tol: float = 1e-8) -> np.ndarray:
    """Validate a density matrix and return it as complex128."""
    r = np.asarray(rho, dtype=np.complex128)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimMismatch(f"density matrix must be square, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidState("density matrix has non-finite entries")
    if np.max(np.abs(r - dagger(r))) > herm_tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(r) - 1.0) > trace_tol:
        raise InvalidState(f"trace {np.trace(r).real:.12g} != 1")
    if np.linalg.eigvalsh(0.5 * (r + dagger(r)))[0] < -pos_tol:
        raise InvalidState("density matrix has a negative eigenvalue")
    return r


def to_frame(rho, a) -> np.ndarray:
    """``A† rho A``."""
    a = np.asarray(a, dtype=np.complex128)
    if not is_unitary(a, 1e-10):
        raise NotUnitary("frame matrix is not unitary")
    return dagger(a) @ np.asarray(rho) @ a


def from_frame(rho_rot, a) -> np.ndarray:
    """``A rho_rot A†``."""
    a = np.asarray(a, dtype=np.complex128)
    if not is_unitary(a, 1e-10):
        raise NotUnitary("frame matrix is not unitary")
    return a @ np.asarray(rho_rot) @ dagger(a)


# ---------------------------------------------------------------------------
# dissipators
# ---------------------------------------------------------------------------


def superoperator(ops) -> np.ndarray:
    """Row-major superoperator of ``sum_k (G rho G† - {G†G, rho}/2)``.

    ``ops`` has shape ``(..., K, N, N)`` and holds effective operators.
    """
    g = np.asarray(ops, dtype=np.complex128)
    n = g.shape[-1]
    eye = np.eye(n)
    jump = np.einsum("...kij,...kab->...iajb", g, g.conj()).reshape(*g.shape[:-3], n * n, n * n)
    gg = np.einsum("...kji,...kjl->...il", g.conj(), g)
    left = np.einsum("...ij,ab->...iajb", gg, eye).reshape(jump.shape)
    right = np.einsum("ij,...ba->...iajb", eye, gg).reshape(jump.shape)
    return jump - 0.5 * (left + right)


def _kron_conj(w: np.ndarray) -> np.ndarray:
    n = w.shape[-1]
    return np.einsum("...ij,...ab->...iajb", w, w.conj()).reshape(*w.shape[:-2], n * n, n * n)


@dataclass(frozen=True, eq=False)
class DissipatorSet:
    """Weighted Lindblad operators, optionally carried by a moving basis.

    Effective operator ``k`` at time ``t`` is
    ``sqrt(weights[k]) * W(t) @ ops[k] @ W(t)†``, with ``W`` the identity
    when ``basis`` is None. ``alphas`` records quadrature nodes for sets
    that discretize a continuum.
    """

    weights: np.ndarray
    ops: np.ndarray
    basis: Callable | None = None
    alphas: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        ops = np.asarray(self.ops, dtype=np.complex128)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] != w.shape[0] or ops.shape[1] != ops.shape[2]:
            raise DimMismatch(f"weights {w.shape} and operators {ops.shape} do not line up")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("dissipator weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "ops", ops)

    @classmethod
    def empty(cls, dim: int) -> "DissipatorSet":
        return cls(np.zeros(0), np.zeros((0, dim, dim)))

    @property
    def dim(self) -> int:
        return self.ops.shape[-1]

    @property
    def time_dependent(self) -> bool:
        return self.basis is not None

    def __len__(self):
        return len(self.weights)

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def operators(self, t: float) -> np.ndarray:
        g = np.sqrt(self.weights)[:, None, None] * self.ops
        if self.basis is None:
            return g
        w = np.asarray(self.basis(t), dtype=np.complex128)
        return w[None] @ g @ dagger(w)[None]

    def base_superoperator(self) -> np.ndarray:
        n = self.dim
        if len(self) == 0:
            return np.zeros((n * n, n * n), dtype=np.complex128)
        return superoperator(np.sqrt(self.weights)[:, None, None] * self.ops)

    def superoperators(self, times) -> np.ndarray:
        """``(1, N², N²)`` when constant, else ``(M, N², N²)``."""
        d0 = self.base_superoperator()
        if self.basis is None:
            return d0[None]
        s = _kron_conj(sample_matrices(self.basis, times))
        return s @ d0[None] @ dagger(s)

    def rotated(self, frame: TransportFrame) -> "DissipatorSet":
        """The set seen in the rotating frame: ``A† Γ A``."""
        inner = self.basis

        def basis(t):
            a = frame_unitaries(frame, t)
            if inner is None:
                return dagger(a)
            return dagger(a) @ np.asarray(inner(t), dtype=np.complex128)

        return replace(self, basis=basis)

    def conjugated(self, u) -> "DissipatorSet":
        """Constant change of basis ``u† Γ u``."""
        u = np.asarray(u, dtype=np.complex128)
        if self.basis is None:
            return replace(self, ops=dagger(u)[None] @ self.ops @ u[None])
        inner = self.basis
        return replace(self, basis=lambda t: dagger(u) @ np.asarray(inner(t)))


def frame_unitaries(frame: TransportFrame, times) -> np.ndarray:
    """``A(t)`` for scalar or array ``t``; grid points are looked up exactly."""
    t = np.asarray(times, dtype=float)
    if t.ndim == 0:
        return frame.at(float(t))
    t0 = frame.times[0]
    dt = (frame.times[-1] - t0) / frame.steps
    x = (t - t0) / dt
    k = np.rint(x).astype(int)
    if np.all(np.abs(x - k) < 1e-6) and k.min() >= 0 and k.max() <= frame.steps:
        return frame.unitaries[k]
    return np.stack([frame.at(float(s)) for s in t])


def _frame_gauge(frame: TransportFrame, times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    gens = frame.gauge_generators()
    if t.ndim == 0:
        return frame.gauge_generator_at(float(t))
    t0 = frame.times[0]
    dt = (frame.times[-1] - t0) / frame.steps
    x = (t - t0) / dt
    k = np.rint(x).astype(int)
    if np.all(np.abs(x - k) < 1e-6) and k.min() >= 0 and k.max() <= frame.steps:
        return gens[k]
    return np.stack([frame.gauge_generator_at(float(s)) for s in t])


# ---------------------------------------------------------------------------
# right-hand sides (direct matrix algebra; independent of the superoperator path)
# ---------------------------------------------------------------------------


def _dissipative_part(ops, rho) -> np.ndarray:
    out = np.zeros_like(rho, dtype=np.complex128)
    for g in ops:
        gd = g.conj().T
        gg = gd @ g
        out += g @ rho @ gd - 0.5 * (gg @ rho + rho @ gg)
    return out


def lindblad_rhs(h, diss: DissipatorSet, rho, t: float) -> np.ndarray:
    """``-i[H, rho] + (1/2) sum_a L_{Γ_a}[rho]``."""
    h = np.asarray(h, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128)
    if h.shape != rho.shape or (len(diss) and diss.dim != rho.shape[0]):
        raise DimMismatch("Hamiltonian, dissipators and state dimensions differ")
    return -1j * (h @ rho - rho @ h) + _dissipative_part(diss.operators(t), rho)


def _rotated_hamiltonian(frame: TransportFrame, t: float) -> np.ndarray:
    a = frame.at(t)
    return dagger(a) @ frame.path(t) @ a


def rotated_rhs_full(frame: TransportFrame, diss: DissipatorSet, rho_rot, t: float) -> np.ndarray:
    """Rotated master equation keeping the ``A†Ȧ`` terms."""
    a = frame.at(t)
    k = frame.gauge_generator_at(t)
    rho_rot = np.asarray(rho_rot, dtype=np.complex128)
    ha = dagger(a) @ frame.path(t) @ a
    rot = diss.rotated(frame)
    return lindblad_rhs(ha, rot, rho_rot, t) + rho_rot @ k - k @ rho_rot


def rotated_rhs_adiabatic(frame: TransportFrame, diss: DissipatorSet, rho_rot, t: float) -> np.ndarray:
    """Rotated master equation with the ``A†Ȧ`` terms dropped."""
    return lindblad_rhs(_rotated_hamiltonian(frame, t), diss.rotated(frame), rho_rot, t)


def _check_secular(energies, ops, rho_dim):
    e = np.asarray(energies, dtype=float)
    n = len(e)
    if n != rho_dim:
        raise DimMismatch("energy list and state dimension differ")
    if n == 2 or len(ops) == 0:
        return
    omega = e[:, None] - e[None, :]
    mag = np.sum(np.abs(ops), axis=0)
    scale = float(np.sum(np.abs(ops) ** 2))
    for i in range(n):
        for k in range(n):
            for j in range(n):
                for l in range(n):
                    if (i == k and j == l) or (i == j and k == l):
                        continue
                    if mag[i, k] * mag[j, l] <= 1e-14 * max(scale, 1e-300):
                        continue
                    if abs(omega[i, k] - omega[j, l]) < 10.0 * scale:
                        raise SecularResonance(
                            f"Bohr frequency difference {omega[i, k] - omega[j, l]:.3e} "
                            f"for ({i}{k},{j}{l}) is not large against damping {scale:.3e}"
                        )


def secular_dissipative_part(ops, rho) -> np.ndarray:
    """Dissipator with only the terms surviving oscillation averaging.

    Populations follow rate equations with rates ``|Γ_ik|²``; each coherence
    ``rho_ij`` decays on its own with ``Γ_ii Γ*_jj - (sum_k |Γ_ki|² + sum_k |Γ_kj|²)/2``.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    out = np.zeros_like(rho)
    pops = np.real(np.diag(rho))
    for g in ops:
        p = np.abs(g) ** 2
        d = np.diag(g)
        col = p.sum(axis=0)  # sum_k |Γ_ki|^2
        coh = np.outer(d, d.conj()) - 0.5 * (col[:, None] + col[None, :])
        gain = p @ pops - np.diag(p) * pops
        off = coh * rho
        np.fill_diagonal(off, 0.0)
        out += off + np.diag(gain - (col - np.diag(p)) * pops)
    return out


def secular_rhs(h_diag, diss_rotated: DissipatorSet, rho, t: float) -> np.ndarray:
    e = np.asarray(h_diag, dtype=float)
    rho = np.asarray(rho, dtype=np.complex128)
    ops = diss_rotated.operators(t)
    _check_secular(e, ops, rho.shape[0])
    return -1j * (e[:, None] - e[None, :]) * rho + secular_dissipative_part(ops, rho)


def phase_averaged_ops(beta_samples: int, builder: Callable) -> np.ndarray:
    """Operators ``Γ_β / sqrt(n)`` on the equal-spaced grid ``β_k = 2πk/n``."""
    if beta_samples < 4:
        raise ValueError("beta_samples must be >= 4")
    betas = 2 * np.pi * np.arange(beta_samples) / beta_samples
    return np.stack([np.asarray(builder(b), dtype=np.complex128) for b in betas]) / np.sqrt(beta_samples)


def phase_averaged_rhs(beta_samples: int, builder: Callable, rho, t: float, hamiltonian) -> np.ndarray:
    """Hamiltonian term plus the β-averaged dissipator ``(1/4π) ∫ L_{Γ_β} dβ``."""
    h = np.asarray(hamiltonian, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128)
    return -1j * (h @ rho - rho @ h) + _dissipative_part(phase_averaged_ops(beta_samples, builder), rho)


# ---------------------------------------------------------------------------
# sampled generators: what the RK4 kernel consumes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Generator:
    """A master equation in sampled form.

    ``hamiltonian(times)`` returns the effective Hamiltonian stack (gauge
    terms folded in as ``-i A†Ȧ``); ``superops(times)`` the dissipator
    superoperators; ``rhs(t, rho)`` the same generator by direct algebra.
    """

    hamiltonian: Callable
    superops: Callable
    rhs: Callable
    dim: int
    label: str = ""

    def __call__(self, t, rho):
        return self.rhs(t, rho)

    def sample(self, times):
        return sample_matrices(self.hamiltonian, times), self.superops(times)

    def matrix(self, t: float) -> np.ndarray:
        """Full Liouvillian at ``t`` (row-major)."""
        h, d = self.sample(np.array([t]))
        n = self.dim
        eye = np.eye(n)
        return -1j * (np.kron(h[0], eye) - np.kron(eye, h[0].T)) + d[0]


def lab_generator(hamiltonian: Callable, diss: DissipatorSet, label: str = "lab") -> Generator:
    dim = diss.dim if len(diss) else np.asarray(hamiltonian(0.0)).shape[0]
    return Generator(
        hamiltonian=hamiltonian,
        superops=diss.superoperators,
        rhs=lambda t, rho: lindblad_rhs(hamiltonian(t), diss, rho, t),
        dim=dim,
        label=label,
    )


def rotated_generator(frame: TransportFrame, diss: DissipatorSet, gauge: bool = True) -> Generator:
    """Rotating-frame generator with (``gauge=True``) or without the ``A†Ȧ`` terms."""
    rot = diss.rotated(frame)

    def ham(times):
        a = frame_unitaries(frame, times)
        h = sample_matrices(frame.path.sampler, np.atleast_1d(times)) if np.ndim(times) else frame.path(times)
        ha = dagger(a) @ h @ a
        if gauge:
            ha = ha - 1j * _frame_gauge(frame, times)
        return ha

    def rhs(t, rho):
        if gauge:
            return rotated_rhs_full(frame, diss, rho, t)
        return rotated_rhs_adiabatic(frame, diss, rho, t)

    return Generator(ham, rot.superoperators, rhs, frame.dim, "rotated-full" if gauge else "rotated-adiabatic")


def _superop_of(fn: Callable, n: int) -> np.ndarray:
    """Superoperator of a linear map on N×N matrices, column by column."""
    cols = []
    for k in range(n * n):
        e = np.zeros(n * n, dtype=np.complex128)
        e[k] = 1.0
        cols.append(fn(e.reshape(n, n)).reshape(-1))
    return np.stack(cols, axis=1)


def secular_superoperator(ops) -> np.ndarray:
    """Row-major superoperator of :func:`secular_dissipative_part`; ``ops`` is ``(..., K, N, N)``."""
    g = np.asarray(ops, dtype=np.complex128)
    n = g.shape[-1]
    p = np.abs(g) ** 2
    d = np.diagonal(g, axis1=-2, axis2=-1)
    col = p.sum(axis=-2)  # sum_k |Γ_ki|^2
    coh = np.einsum("...ki,...kj->...ij", d, d.conj()) - 0.5 * (col[..., :, None] + col[..., None, :]).sum(axis=-3)
    out = np.zeros(g.shape[:-3] + (n * n, n * n), dtype=np.complex128)
    idx = np.arange(n * n)
    out[..., idx, idx] = coh.reshape(g.shape[:-3] + (n * n,))
    diag = np.arange(n) * (n + 1)
    rates = p.sum(axis=-3)  # rates[i, j]: j -> i
    loss = rates.sum(axis=-2) - np.diagonal(rates, axis1=-2, axis2=-1)
    pop = rates - np.einsum("...i,ij->...ij", np.diagonal(rates, axis1=-2, axis2=-1) + loss, np.eye(n))
    out[..., diag[:, None], diag[None, :]] = pop
    return out


def secular_generator(energies, diss_rotated: DissipatorSet) -> Generator:
    e = np.asarray(energies, dtype=float)
    n = len(e)
    h = np.diag(e).astype(np.complex128)
    _check_secular(e, diss_rotated.operators(0.0), n)

    def superops(times):
        if not diss_rotated.time_dependent:
            return secular_superoperator(diss_rotated.operators(0.0))[None]
        return secular_superoperator(np.stack([diss_rotated.operators(t) for t in np.atleast_1d(times)]))

    return Generator(
        hamiltonian=lambda t: np.broadcast_to(h, (len(np.atleast_1d(t)), n, n)) if np.ndim(t) else h,
        superops=superops,
        rhs=lambda t, rho: secular_rhs(e, diss_rotated, rho, t),
        dim=n,
        label="secular",
    )


def phase_averaged_generator(hamiltonian, builder: Callable, beta_samples: int = 16) -> Generator:
    h = np.asarray(hamiltonian, dtype=np.complex128)
    n = h.shape[0]
    d = superoperator(phase_averaged_ops(beta_samples, builder))[None]
    return Generator(
        hamiltonian=lambda t: np.broadcast_to(h, (len(np.atleast_1d(t)), n, n)) if np.ndim(t) else h,
        superops=lambda times: d,
        rhs=lambda t, rho: phase_averaged_rhs(beta_samples, builder, rho, t, h),
        dim=n,
        label=f"beta-averaged({beta_samples})",
    )


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    trace_drift: np.ndarray  # |tr rho - 1| before renormalization, per recorded step
    herm_residual: np.ndarray  # max |rho - rho†| before re-Hermitization
    min_eig: np.ndarray
    max_trace_drift: float
    max_herm_residual: float
    min_eigenvalue: float
    steps: int
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def rows(self):
        n = self.states.shape[1]
        iu = np.triu_indices(n)
        cols = ["t"]
        for i, j in zip(*iu):
            cols += [f"rho{i}{j}_re", f"rho{i}{j}_im"]
        cols += ["trace_drift", "min_eig"]
        vals = self.states[:, iu[0], iu[1]]
        data = np.empty((len(self.times), 1 + 2 * vals.shape[1] + 2))
        data[:, 0] = self.times
        data[:, 1 : 1 + 2 * vals.shape[1] : 2] = vals.real
        data[:, 2 : 2 + 2 * vals.shape[1] : 2] = vals.imag
        data[:, -2] = self.trace_drift
        data[:, -1] = self.min_eig
        return cols, data


def _record_steps(steps: int, record_every: int) -> np.ndarray:
    rec = np.arange(record_every, steps + 1, record_every, dtype=np.int64)
    if rec.size == 0 or rec[-1] != steps:
        rec = np.append(rec, steps)
    return rec


def _rk4_generic(rhs, rho0, t0, h, steps, rec_steps, pos_tol):
    n = rho0.shape[0]
    nrec = len(rec_steps)
    states = np.empty((nrec, n, n), dtype=np.complex128)
    tr_err, herm_err, min_eig = np.zeros(nrec), np.zeros(nrec), np.zeros(nrec)
    stats = np.array([0.0, 0.0, np.inf])
    rho = rho0.copy()
    r = 0
    for step in range(steps):
        t = t0 + step * h
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        terr = abs(np.trace(rho) - 1.0)
        herr = float(np.max(np.abs(rho - rho.conj().T)))
        if not (np.isfinite(terr) and np.isfinite(herr)):
            return states, tr_err, herm_err, min_eig, stats, 2, step
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        lam = float(np.linalg.eigvalsh(rho)[0])
        stats[0], stats[1], stats[2] = max(stats[0], terr), max(stats[1], herr), min(stats[2], lam)
        if r < nrec and rec_steps[r] == step + 1:
            states[r], tr_err[r], herm_err[r], min_eig[r] = rho, terr, herr, lam
            r += 1
        if lam < -pos_tol:
            return states, tr_err, herm_err, min_eig, stats, 1, step
    return states, tr_err, herm_err, min_eig, stats, 0, steps


def integrate(
    rhs,
    rho0,
    t0: float,
    t1: float,
    steps: int,
    *,
    record_every: int = 1,
    pos_tol: float = POSITIVITY_BREACH,
) -> Trajectory:
    """Classical RK4 with step ``(t1 - t0) / steps``.

    ``rhs`` is either a :class:`Generator` (sampled on the half-step grid and
    handed to the compiled kernel) or any callable ``rhs(t, rho)``. After
    every step the state is re-Hermitized and trace-normalized; the
    pre-correction drift is kept in the returned trajectory.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rho0 = as_density(rho0)
    h = (t1 - t0) / steps
    rec = _record_steps(steps, max(1, int(record_every)))
    if isinstance(rhs, Generator):
        if rhs.dim != rho0.shape[0]:
            raise DimMismatch(f"generator dim {rhs.dim} != state dim {rho0.shape[0]}")
        grid = t0 + 0.5 * h * np.arange(2 * steps + 1)
        hs, ds = rhs.sample(grid)
        if hs.shape[0] != grid.size or ds.shape[0] not in (1, grid.size):
            raise GridMismatch("sampled generator does not match the half-step grid")
        out = kernels.rk4_sampled(
            np.ascontiguousarray(hs), np.ascontiguousarray(ds), rho0.copy(), h, steps, rec, pos_tol
        )
    else:
        out = _rk4_generic(rhs, rho0, t0, h, steps, rec, pos_tol)
    states, tr_err, herm_err, min_eig, stats, status, at = out
    if status == 1:
        raise PositivityBreach(f"min eigenvalue below -{pos_tol:g} at step {at + 1}; reduce the step size")
    if status == 2:
        raise NonFinite(f"state became non-finite at step {at + 1}")
    times = np.concatenate([[t0], t0 + h * rec])
    log.debug("integrated %d steps, max trace drift %.3e", steps, stats[0])
    traj = Trajectory(
        times=times,
        states=np.concatenate([rho0[None], states]),
        trace_drift=np.concatenate([[0.0], tr_err]),
        herm_residual=np.concatenate([[0.0], herm_err]),
        min_eig=np.concatenate([[float(np.linalg.eigvalsh(rho0)[0])], min_eig]),
        max_trace_drift=float(stats[0]),
        max_herm_residual=float(stats[1]),
        min_eigenvalue=float(min(stats[2], np.linalg.eigvalsh(rho0)[0])),
        steps=steps,
    )
    for fn in _observers:
        fn(traj)
    return traj


def eigenbasis(h) -> np.ndarray:
    """Eigenvectors of ``h`` ordered by descending energy (excited first)."""
    _, v = eig_hermitian(h)
    return v[:, ::-1]
