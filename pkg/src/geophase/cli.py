"""Command-line front end.

Exit status: 0 when every declared tolerance passes, 1 when one fails,
2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import analytic
from .errors import ConfigError, GeophaseError
from .experiments import (
    ComparisonReport,
    adiabatic_scan,
    beta_average_check,
    compare_pipelines,
    frequency_shift_scan,
    inversion,
)
from .lindblad import integrate
from .models import (
    LaserModel,
    SpinModel,
    apply_overrides,
    build_model,
    format_config,
    parse_config,
    resolve_config,
)
from .transport import build_frame, holonomy, pati_reference

log = logging.getLogger("geophase")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2


class OutputExists(GeophaseError):
    pass


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def csv_text(cols, data, cfg: dict) -> str:
    """CSV with the resolved config as leading ``#`` lines; 17 significant digits."""
    head = "".join(f"# {line}\n" for line in format_config(cfg).splitlines())
    body = "\n".join(",".join("%.17g" % v for v in row) for row in np.atleast_2d(data))
    return head + ",".join(cols) + "\n" + body + "\n"


def read_csv(path) -> tuple[list, np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    cols = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return cols, data


class Writer:
    """Creates files under one directory, refusing to overwrite unless forced."""

    def __init__(self, out: str | None, force: bool):
        self.dir = Path(out or "geophase_out")
        self.force = force
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        if path.exists() and not self.force:
            raise OutputExists(f"{path} exists; pass --force to overwrite")
        self.dir.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written.append(path)
        return path

    def report(self, stem: str, rep: ComparisonReport, fmt: str, cfg: dict):
        rep.config = dict(cfg) | {k: v for k, v in rep.config.items() if k not in cfg}
        if fmt == "json":
            return self.write(f"{stem}.json", rep.to_json())
        head = "".join(f"# {line}\n" for line in format_config(cfg).splitlines())
        return self.write(f"{stem}.csv", head + rep.to_csv())


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def load_config(args, model: str | None) -> dict:
    raw = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        raw = parse_config(text)
    raw = apply_overrides(raw, args.set)
    if args.steps is not None:
        raw["steps"] = args.steps
    cfg = resolve_config(raw, model)
    build_model(cfg)  # validates physical parameters before any computation
    return cfg


def _strip(rep: ComparisonReport):
    rep.metrics.pop("trajectory", None)
    states = rep.metrics.pop("states", None)
    if states:
        rep.metrics["final_states"] = {k: [[v.real, v.imag] for v in np.asarray(s).ravel()] for k, s in states.items()}
    return rep


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _phase_offset(model: LaserModel, half_width: float = 5.0, spacing: float = 0.25, steps_per_time: float = 100):
    """Fit the cosine phase of ``w(T)`` at its known frequency over a short T-grid."""
    rc = analytic.reduced_constants(model.delta, model.omega)
    f, g = analytic.reduced_fg(model.density) if model.density is not None else (0.0, 0.0)
    ts = np.arange(model.T - half_width, model.T + half_width + 1e-9, spacing)
    ws = []
    for T in ts:
        m = LaserModel(model.delta, model.omega, float(T), rate=model.rate, density=model.density, p=model.p)
        tr = integrate(m.lab_generator(), m.rho0(), 0.0, T, int(round(steps_per_time * T)), record_every=10**9)
        ws.append(inversion(tr.final))
    if model.density is not None and model.rate == 0:
        d_static, d_osc = rc.sin_theta**2 * f, rc.K * f
        cols = [np.exp(-d_static * ts)]
    else:
        d_osc = rc.G * model.rate
        cols = [np.exp(-rc.K * model.rate * ts), np.ones_like(ts)]
    w = 2 * rc.E + g * rc.cos_theta  # collisional shift of the oscillation frequency
    cols += [np.exp(-d_osc * ts) * np.cos(w * ts), np.exp(-d_osc * ts) * np.sin(w * ts)]
    x, *_ = np.linalg.lstsq(np.column_stack(cols), np.array(ws), rcond=None)
    b, c = x[-2], x[-1]
    # b cos wT + c sin wT = R cos(wT - psi); the geometric offset enters as cos(wT - 2pi cos(theta))
    psi = float(np.arctan2(c, b))
    if b * np.cos(psi) + c * np.sin(psi) < 0:
        psi += np.pi
    return psi, 2 * np.pi * rc.cos_theta


def _damping_factors(model: LaserModel) -> dict:
    """Decay of the static and oscillating parts of ``w`` over one sweep."""
    rc = analytic.reduced_constants(model.delta, model.omega)
    if model.density is not None and model.rate == 0:
        f = analytic.reduced_fg(model.density)[0]
        return {"static": math.exp(-rc.sin_theta**2 * f * model.T), "oscillating": math.exp(-rc.K * f * model.T)}
    return {"static": math.exp(-rc.K * model.rate * model.T), "oscillating": math.exp(-rc.G * model.rate * model.T)}


def cmd_laser(args, kind: str) -> int:
    cfg = load_config(args, kind)
    model = build_model(cfg)
    steps = cfg["steps"]
    rep = compare_pipelines(model, steps, nodes=cfg.get("nodes", 64), record_every=max(1, steps // 2000))
    traj = rep.metrics["trajectory"]
    psi, expected = _phase_offset(model)
    dpsi = float(np.angle(np.exp(1j * (psi - expected))))
    rep.metrics.update(fitted_phase_offset=psi, geometric_offset=expected, offset_difference=dpsi,
                       damping_factors=_damping_factors(model))
    rep.notes.append("phase offset fitted at frequency 2E + g Delta/2E over T +/- 5; differences of order 1/(E T) are "
                     "non-adiabatic corrections")
    rep.seed = args.seed
    out = Writer(args.out, args.force)
    out.write(f"{kind}_trajectory.csv", csv_text(*traj.rows(), cfg))
    out.report(f"{kind}_report", _strip(rep), args.format, cfg)
    _print_report(rep)
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def cmd_spinecho(args) -> int:
    cfg = load_config(args, "spin")
    model = build_model(cfg)
    rep = compare_pipelines(model, cfg["steps"], nodes=cfg.get("nodes", 64))
    rep.seed = args.seed
    out = Writer(args.out, args.force)
    out.report("spinecho_report", _strip(rep), args.format, cfg)
    _print_report(rep)
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def cmd_frame(args) -> int:
    raw = parse_config(Path(args.config).read_text()) if args.config else {}
    raw = apply_overrides(raw, args.set)
    if args.steps is not None:
        raw["steps"] = args.steps
    raw.setdefault("steps", 10_000)
    cfg = resolve_config(raw, None if "model" in raw else "spin")
    model = build_model(cfg)
    frame = build_frame(model.path(), cfg["steps"])
    ph = holonomy(frame)
    pati = pati_reference(frame)
    rep = ComparisonReport("frame", config=cfg, seed=args.seed)
    rep.metrics.update(geometric=ph.geometric, dynamic=ph.dynamic, leakage=ph.leakage,
                       pati_geometric=pati.geometric, transport_residuals=frame.transport_residuals())
    if isinstance(model, SpinModel):
        target = 0.5 * model.solid_angle()
        rep.check("upper phase = -half solid angle", np.angle(np.exp(1j * (ph.geometric[1] + target))), 1e-5)
    out = Writer(args.out, args.force)
    out.write("frame.csv", csv_text(*frame.rows(), cfg))
    out.report("frame_report", rep, args.format, cfg)
    _print_report(rep)
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def _grid(text: str | None, default):
    if not text:
        return default
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot read grid {text!r}") from None


def cmd_scan(args) -> int:
    raw = parse_config(Path(args.config).read_text()) if args.config else {}
    raw = apply_overrides(raw, args.set)
    raw.setdefault("model", "dephasing" if args.kind == "frequency" else "emission")
    cfg = resolve_config(raw)
    if cfg["model"] == "spin":
        raise ConfigError("scans run on the laser models")
    model = build_model(cfg)
    if args.kind == "adiabatic":
        rep = adiabatic_scan(model, _grid(args.grid, [100, 200, 400, 800]))
    elif args.kind == "beta":
        rep = beta_average_check(model, _grid(args.grid, [100, 200, 400, 800]))
    else:
        grid = _grid(args.grid, None)
        rep = frequency_shift_scan(cfg["delta"], cfg["omega"], cfg["lambda0"], grid, kappa=cfg.get("kappa", 1.0))
    rep.seed = args.seed
    out = Writer(args.out, args.force)
    out.report(f"scan_{args.kind}", rep, args.format, cfg)
    _print_report(rep)
    if rep.fits:
        print(f"{'T':>10} {'distance':>14}")
        for t, d in zip(rep.grid, rep.metrics.get("distance", [])):
            print(f"{t:10.4g} {d:14.6e}")
        for k, fit in rep.fits.items():
            print(f"slope[{k}] = {fit['exponent']:.4f}  residual {fit['residual']:.3g}"
                  + ("  (inconclusive)" if fit["inconclusive"] else ""))
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


def cmd_verify(args) -> int:
    from .acceptance import run_all

    selected = [int(x) for x in args.only.split(",")] if args.only else None
    results = run_all(selected)
    if args.out:
        out = Writer(args.out, args.force)
        payload = [{"criterion": r.number, "title": r.title, "passed": r.passed, "summary": r.summary,
                    "seconds": r.seconds} for r in results]
        out.write("verify.json", json.dumps({"seed": args.seed, "results": payload}, indent=2))
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_TOLERANCE


def _print_report(rep: ComparisonReport):
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.6g} (tol {c.tolerance:g})")
    for k in ("w_numeric", "w_analytic", "dw", "fitted_phase_offset", "geometric_offset", "shift", "expected_shift"):
        if k in rep.metrics:
            print(f"{k} = {rep.metrics[k]:.10g}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value model configuration")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    common.add_argument("--out", metavar="PATH", help="output directory (default geophase_out)")
    common.add_argument("--format", choices=("csv", "json"), default="json", help="report format")
    common.add_argument("--steps", type=int, help="RK4 steps (per leg for the echo)")
    common.add_argument("--seed", type=int, default=0, help="recorded in reports")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="geophase", description="Geometric phases in damped two-level systems.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("emission", parents=[common], help="driven atom with spontaneous emission")
    sub.add_parser("dephasing", parents=[common], help="driven atom with collisional dephasing")
    sub.add_parser("spinecho", parents=[common], help="spin echo around a field cone")
    sub.add_parser("frame", parents=[common], help="export a transport frame and its phases")
    sc = sub.add_parser("scan", parents=[common], help="convergence scans")
    sc.add_argument("kind", choices=("adiabatic", "beta", "frequency"))
    sc.add_argument("--grid", help="comma-separated T values")
    vf = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    vf.add_argument("--only", help="comma-separated criterion numbers")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handlers = {
        "emission": lambda: cmd_laser(args, "emission"),
        "dephasing": lambda: cmd_laser(args, "dephasing"),
        "spinecho": lambda: cmd_spinecho(args),
        "frame": lambda: cmd_frame(args),
        "scan": lambda: cmd_scan(args),
        "verify": lambda: cmd_verify(args),
    }
    try:
        return handlers[args.command]()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputExists as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, GeophaseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
