"""The ten acceptance criteria as runnable checks.

Each ``criterion_*`` function returns a :class:`CriterionResult` with the
measured numbers next to the tolerance. Trajectory diagnostics gathered
along the way feed the solver-invariant criterion.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .experiments import (
    adiabatic_scan,
    beta_average_check,
    compare_pipelines,
    frequency_shift_scan,
    laser_secular_cases,
    phase_difference,
    secular_structure_check,
    spin_cone_phases,
)
from .lindblad import record_trajectories
from .matcore import dagger, is_unitary
from .models import CollisionDensity, LaserModel, SpinModel, echo_protocol
from .transport import (
    HamiltonianPath,
    build_frame,
    holonomy,
    nonabelian_holonomy,
    pati_reference,
    wrap_phase,
)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    values: dict = field(default_factory=dict)
    summary: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"AC{self.number:<2d} {'PASS' if self.passed else 'FAIL'}  {self.title}: {self.summary}"


class DriftLog:
    """Solver diagnostics of every trajectory integrated while it is active."""

    def __init__(self):
        self.rows = []
        self._ctx = None

    def __enter__(self):
        self._ctx = record_trajectories()
        self._seen = self._ctx.__enter__()
        return self

    def __exit__(self, *exc):
        self._ctx.__exit__(*exc)
        self.rows.extend((t.steps, t.max_trace_drift, t.max_herm_residual, t.min_eigenvalue) for t in self._seen)
        self._seen = []

    def snapshot(self):
        return self.rows + [(t.steps, t.max_trace_drift, t.max_herm_residual, t.min_eigenvalue)
                            for t in getattr(self, "_seen", [])]


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------


@_timed
def criterion_emission() -> CriterionResult:
    """Lab-frame integration vs the closed-form inversion, emission damping."""
    m = LaserModel(0.5, 1.0, 500.0, rate=0.005, p=0.5)
    t = time.perf_counter()
    rep = compare_pipelines(m, 200_000, rotated=False, record_every=1000)
    runtime = time.perf_counter() - t
    dw = rep.metrics["dw"]
    exact = analytic.corotating_exact(m.T, m.delta, m.omega, [math.sqrt(m.rate) * np.array([[0, 0], [1, 0]])],
                                      m.rho0())
    dw_exact = rep.metrics["w_numeric"] - float(np.real(exact[0, 0] - exact[1, 1]))
    ok = abs(dw) < 5e-3 and runtime < 30.0
    return CriterionResult(
        1, "emission inversion", ok,
        {"w_numeric": rep.metrics["w_numeric"], "w_closed_form": rep.metrics["w_analytic"], "dw": dw,
         "dw_vs_exact_sweep": dw_exact, "runtime_s": runtime},
        f"|dw|={abs(dw):.3e} (tol 5e-3), runtime {runtime:.1f}s (tol 30s), vs exact sweep {abs(dw_exact):.1e}",
    )


@_timed
def criterion_dephasing() -> CriterionResult:
    """Lab-frame integration vs the closed-form inversion, collisional dephasing,
    plus the Rabi-frequency shift of an asymmetric density."""
    dens = CollisionDensity("shifted_sine", 0.005)
    m = LaserModel(0.5, 1.0, 500.0, density=dens, p=0.5)
    rep = compare_pipelines(m, 200_000, rotated=False)
    dw = rep.metrics["dw"]
    scan = frequency_shift_scan(0.5, 1.0, 0.005)
    rel = (scan.metrics["shift"] - scan.metrics["expected_shift"]) / scan.metrics["expected_shift"]
    ok = abs(dw) < 5e-3 and abs(rel) < 0.1
    return CriterionResult(
        2, "dephasing inversion", ok,
        {"dw": dw, "shift": scan.metrics["shift"], "expected_shift": scan.metrics["expected_shift"], "rel": rel},
        f"|dw|={abs(dw):.3e} (tol 5e-3), shift {scan.metrics['shift']:.4e} vs {scan.metrics['expected_shift']:.4e} "
        f"(rel {rel:+.2%}, tol 10%)",
    )


@_timed
def criterion_solid_angle() -> CriterionResult:
    vals = {}
    ok = True
    worst_mag, worst_sym = 0.0, 0.0
    for name, th in (("pi/6", np.pi / 6), ("pi/3", np.pi / 3), ("pi/2", np.pi / 2)):
        lo, up = spin_cone_phases(th, 10_000)
        target = np.pi * (1 - math.cos(th))
        mag = max(abs(abs(lo) - target), abs(abs(up) - target))
        sym = abs(phase_difference(lo, -up))
        worst_mag, worst_sym = max(worst_mag, mag), max(worst_sym, sym)
        vals[name] = {"lower": lo, "upper": up, "target": target, "mag_err": mag, "sym_err": sym}
        ok &= mag < 1e-5 and sym < 1e-8
    return CriterionResult(3, "Berry phase = half solid angle", ok, vals,
                           f"max magnitude error {worst_mag:.2e} (tol 1e-5), max asymmetry {worst_sym:.1e} (tol 1e-8)")


ECHO_T = 1600.0


@_timed
def criterion_echo() -> CriterionResult:
    rho0 = 0.5 * np.ones((2, 2), dtype=np.complex128)
    vals = {}
    ok = True
    worst_arg = worst_mod = worst_inv = 0.0
    for name, th in (("pi/3", np.pi / 3), ("pi/4", np.pi / 4), ("pi/6", np.pi / 6)):
        phi = float(holonomy(build_frame(SpinModel(1.0, th, ECHO_T).path(), 10_000)).geometric[1])
        args = []
        for E in (1.0, 2.0):
            for lam0 in (0.0, 1.0 / (4 * ECHO_T)):
                m = SpinModel(E, th, ECHO_T, density=CollisionDensity("constant", lam0))
                r, _ = echo_protocol(m, rho0, int(50 * E * ECHO_T))
                ratio = r[0, 1] / rho0[0, 1]
                f = analytic.reduced_fg(m.density)[0]
                arg_err = abs(phase_difference(np.angle(ratio), 4 * phi))
                mod_err = abs(abs(ratio) / math.exp(-2 * ECHO_T * f) - 1)
                args.append(np.angle(ratio))
                vals[f"{name} E={E} lambda0={lam0:.3g}"] = {"arg": float(np.angle(ratio)), "four_phi": 4 * phi,
                                                            "arg_err": arg_err, "mod_err": mod_err}
                worst_arg, worst_mod = max(worst_arg, arg_err), max(worst_mod, mod_err)
                ok &= arg_err < 1e-4 and mod_err < 1e-3
        spread = max(abs(phase_difference(a, args[0])) for a in args)
        worst_inv = max(worst_inv, spread)
        ok &= spread < 1e-4
    return CriterionResult(4, "echo protocol", ok, vals,
                           f"max arg error {worst_arg:.1e} (tol 1e-4), spread over E/dephasing {worst_inv:.1e} "
                           f"(tol 1e-4), max modulus error {worst_mod:.1e} (tol 1e-3)")


@_timed
def criterion_adiabatic() -> CriterionResult:
    rep = adiabatic_scan(LaserModel(0.5, 1.0, 500.0, rate=0.005, p=0.5), [100, 200, 400, 800])
    fit = rep.fits["distance"]
    ok = rep.passed
    return CriterionResult(5, "adiabatic suppression of gauge terms", ok,
                           {"distance": rep.metrics["distance"], "fit": fit,
                            "refinement_change": rep.metrics["refinement_change"]},
                           f"slope {fit['exponent']:.3f} (tol -1 +/- 0.15, residual {fit['residual']:.3f}), "
                           f"step refinement change {rep.metrics['refinement_change']:.1e} (tol 5%)")


@_timed
def criterion_secular() -> CriterionResult:
    rep = secular_structure_check(laser_secular_cases())
    worst = max((c.value for c in rep.checks if "phase" in c.name), default=0.0)
    cross = max((c.value for c in rep.checks if "block" in c.name), default=0.0)
    return CriterionResult(6, "secular block structure", rep.passed, rep.metrics,
                           f"{len(rep.checks) // 2} generators, max cross-block entry {cross:.1e} (exact 0), "
                           f"max change under |off-diagonal| {worst:.1e}")


@_timed
def criterion_beta_average() -> CriterionResult:
    rep = beta_average_check(LaserModel(0.5, 1.0, 500.0, rate=0.005, p=0.5), [100, 200, 400, 800])
    fit = rep.fits["distance"]
    gd = max(rep.metrics["generator_difference"].values())
    return CriterionResult(7, "beta averaging", rep.passed,
                           {"generator_difference": gd, "distance": rep.metrics["distance"], "fit": fit},
                           f"quadrature difference {gd:.1e} (tol 1e-13), slope {fit['exponent']:.3f} at fixed "
                           f"rate*T (tol -1 +/- 0.15)")


def criterion_invariants(log: DriftLog) -> CriterionResult:
    """Worst per-step drift scaled to 1e4 steps, over every recorded trajectory."""
    rows = log.snapshot()
    if not rows:
        return CriterionResult(8, "solver invariants", False, {}, "no trajectories recorded")
    per_1e4 = max(r[1] * min(r[0], 10_000) for r in rows)
    herm = max(r[2] for r in rows)
    lam = min(r[3] for r in rows)
    ok = per_1e4 < 1e-8 and herm < 1e-10 and lam >= -1e-8
    return CriterionResult(8, "solver invariants", ok, {"trajectories": len(rows), "trace_drift_per_1e4": per_1e4,
                                                        "herm_residual": herm, "min_eigenvalue": lam},
                           f"{len(rows)} trajectories: trace drift per 1e4 steps <= {per_1e4:.1e} (tol 1e-8), "
                           f"Hermiticity {herm:.1e} (tol 1e-10), min eigenvalue {lam:.1e} (tol -1e-8)")


@_timed
def criterion_pati() -> CriterionResult:
    worst = 0.0
    vals = {}
    for name, th in (("pi/6", np.pi / 6), ("pi/3", np.pi / 3), ("pi/4", np.pi / 4)):
        frame = build_frame(SpinModel(1.0, th, 1.0).path(), 10_000)
        cyc = holonomy(frame).geometric
        gen = pati_reference(frame).geometric
        d = float(np.max(np.abs(wrap_phase(gen - cyc))))
        vals[name] = d
        worst = max(worst, d)
    return CriterionResult(9, "non-cyclic phase on a closed loop", worst < 1e-8, vals,
                           f"max |generalized - cyclic| {worst:.1e} (tol 1e-8)")


def reflection_path(theta: float, T: float = 1.0) -> HamiltonianPath:
    """``H = 1 - 2 n n^T`` with ``n`` on a cone: a doubly degenerate level."""
    def h(t):
        ph = 2 * np.pi * np.asarray(t, dtype=float) / T
        n = np.stack([math.sin(theta) * np.cos(ph), math.sin(theta) * np.sin(ph),
                      np.full_like(ph, math.cos(theta))], axis=-1)
        return (np.eye(3) - 2 * n[..., :, None] * n[..., None, :]).astype(np.complex128)

    return HamiltonianPath(h, T, cyclic=True, name="reflection")


SPIN1 = (
    np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128) / math.sqrt(2),
    np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=np.complex128) / math.sqrt(2),
    np.diag([1.0, 0.0, -1.0]).astype(np.complex128),
)


def spin1_path(theta: float, T: float = 1.0) -> HamiltonianPath:
    def h(t):
        ph = 2 * np.pi * np.asarray(t, dtype=float) / T
        n = (math.sin(theta) * np.cos(ph), math.sin(theta) * np.sin(ph), np.full_like(ph, math.cos(theta)))
        return sum(c[..., None, None] * s for c, s in zip(n, SPIN1))

    return HamiltonianPath(h, T, cyclic=True, name="spin-1")


@_timed
def criterion_nonabelian() -> CriterionResult:
    na = nonabelian_holonomy(reflection_path(np.pi / 4), 10_000)
    unit = max(float(np.linalg.norm(dagger(b) @ b - np.eye(len(b)))) for b in na.blocks)
    p = spin1_path(np.pi / 5)
    blocks = nonabelian_holonomy(p, 10_000).blocks
    ab = holonomy(build_frame(p, 10_000)).geometric
    red = max(abs(phase_difference(np.angle(b[0, 0]), a)) for b, a in zip(blocks, ab))
    sizes = [len(b) for b in blocks]
    ok = unit < 1e-8 and red < 1e-8 and sizes == [1, 1, 1] and all(is_unitary(b, 1e-8) for b in na.blocks)
    return CriterionResult(10, "non-Abelian reduction", ok, {"unitarity": unit, "abelian_difference": red,
                                                            "block_sizes": [len(b) for b in na.blocks]},
                           f"block unitarity {unit:.1e} (tol 1e-8), non-degenerate blocks vs Abelian phases "
                           f"{red:.1e} (tol 1e-8)")


def run_all(selected=None, echo=print) -> list[CriterionResult]:
    """Run the criteria in order; the invariant check uses every trajectory recorded before it."""
    log = DriftLog()
    steps = [
        (1, criterion_emission),
        (2, criterion_dephasing),
        (3, criterion_solid_angle),
        (4, criterion_echo),
        (5, criterion_adiabatic),
        (6, criterion_secular),
        (7, criterion_beta_average),
        (8, lambda: criterion_invariants(log)),
        (9, criterion_pati),
        (10, criterion_nonabelian),
    ]
    out = []
    with log:
        for n, fn in steps:
            if selected and n not in selected:
                continue
            res = fn()
            out.append(res)
            if echo:
                echo(res.line())
    return out


__all__ = ["CriterionResult", "DriftLog", "run_all", "reflection_path", "spin1_path"]
