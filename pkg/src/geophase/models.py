"""Ready-made physical scenarios.

* :class:`LaserModel` -- a driven two-level atom (basis order ``(e, g)``)
  whose laser phase is swept once around the circle, damped either by
  spontaneous emission or by phase-changing collisions.
* :class:`SpinModel` -- a spin-1/2 in a field of constant strength whose
  direction sweeps a cone, with dephasing defined in the instantaneous
  eigenbasis; :func:`echo_protocol` runs the forward/flip/backward/flip
  sequence.

Both are immutable; samplers accept scalar or array times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, NegativeDensity, NegativeRate
from .lindblad import (
    DissipatorSet,
    Generator,
    from_frame,
    integrate,
    lab_generator,
    lindblad_rhs,
    phase_averaged_generator,
    rotated_generator,
    to_frame,
)
from .matcore import PAULI_X, PAULI_Y, PAULI_Z, SIGMA_MINUS, dagger
from .transport import HamiltonianPath, build_frame

DEFAULT_NODES = 64

# ---------------------------------------------------------------------------
# collision densities
# ---------------------------------------------------------------------------

DENSITY_KINDS = ("constant", "shifted_sine", "gaussian", "tabulated")


@dataclass(frozen=True, eq=False)
class CollisionDensity:
    """Rate density ``lambda(alpha)`` on ``(-pi, pi]``.

    * ``constant``: ``lambda0 / 2pi``
    * ``shifted_sine``: ``lambda0 (1 + kappa sin alpha) / 2pi``, needs ``|kappa| <= 1``
    * ``gaussian``: weight ``lambda0`` in a wrapped normal at ``alpha0`` of width ``sigma``
    * ``tabulated``: periodic linear interpolation of ``(table_alpha, table_value)``
    """

    kind: str = "constant"
    lambda0: float = 0.0
    kappa: float = 1.0
    alpha0: float = 0.0
    sigma: float = 0.3
    table_alpha: np.ndarray | None = None
    table_value: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in DENSITY_KINDS:
            raise ValueError(f"unknown density kind {self.kind!r}")
        if not math.isfinite(self.lambda0) or self.lambda0 < 0:
            raise NegativeDensity(f"lambda0 must be finite and >= 0, got {self.lambda0}")
        if self.kind == "shifted_sine" and abs(self.kappa) > 1:
            raise NegativeDensity("shifted-sine density needs |kappa| <= 1")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian density needs sigma > 0")
        if self.kind == "tabulated":
            a = np.asarray(self.table_alpha, dtype=float)
            v = np.asarray(self.table_value, dtype=float)
            if a.ndim != 1 or a.shape != v.shape or a.size < 2 or np.any(np.diff(a) <= 0):
                raise ValueError("tabulated density needs increasing alphas and matching values")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise NegativeDensity("tabulated density has negative or non-finite values")
            object.__setattr__(self, "table_alpha", a)
            object.__setattr__(self, "table_value", v)

    def __call__(self, alpha):
        a = np.asarray(alpha, dtype=float)
        if self.kind == "constant":
            out = np.full_like(a, self.lambda0 / (2 * np.pi))
        elif self.kind == "shifted_sine":
            out = self.lambda0 * (1 + self.kappa * np.sin(a)) / (2 * np.pi)
        elif self.kind == "gaussian":
            m = np.arange(-4, 5)
            d = a[..., None] - self.alpha0 + 2 * np.pi * m
            out = self.lambda0 * np.sum(np.exp(-0.5 * (d / self.sigma) ** 2), axis=-1) / (
                self.sigma * np.sqrt(2 * np.pi)
            )
        else:
            out = np.interp(a, self.table_alpha, self.table_value, period=2 * np.pi)
        return out

    @property
    def symmetric(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind == "shifted_sine":
            return self.kappa == 0
        if self.kind == "gaussian":
            return self.alpha0 == 0 or abs(self.alpha0) == np.pi
        return False


def dephasing_dissipators(d: CollisionDensity, nodes: int = DEFAULT_NODES) -> DissipatorSet:
    """Midpoint quadrature of ``diag(1, e^{i alpha})`` weighted by ``lambda(alpha) d alpha``."""
    if nodes < 8:
        raise ValueError("need at least 8 quadrature nodes")
    da = 2 * np.pi / nodes
    alphas = -np.pi + da * (np.arange(nodes) + 0.5)
    lam = d(alphas)
    if np.any(lam < 0):
        raise NegativeDensity("density is negative at a quadrature node")
    ops = np.zeros((nodes, 2, 2), dtype=np.complex128)
    ops[:, 0, 0] = 1.0
    ops[:, 1, 1] = np.exp(1j * alphas)
    return DissipatorSet(lam * da, ops, alphas=alphas, label=f"dephasing:{d.kind}")


def emission_dissipator(rate: float) -> DissipatorSet:
    """``sqrt(rate) sigma_-`` in the fixed atomic basis."""
    if not math.isfinite(rate) or rate < 0:
        raise NegativeRate(f"emission rate must be >= 0, got {rate}")
    if rate == 0:
        return DissipatorSet.empty(2)
    return DissipatorSet([rate], SIGMA_MINUS[None], label="emission")


# ---------------------------------------------------------------------------
# laser-driven two-level atom
# ---------------------------------------------------------------------------


def linear_sweep(T: float) -> Callable:
    return lambda t: 2 * np.pi * np.asarray(t, dtype=float) / T


@dataclass(frozen=True, eq=False)
class LaserModel:
    """``H = [[Delta/2, Omega e^{-i phi}], [Omega e^{i phi}, -Delta/2]]`` with ``phi`` swept over ``[0, T]``."""

    delta: float
    omega: float
    T: float
    rate: float = 0.0
    density: CollisionDensity | None = None
    p: float = 0.5
    phase: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.omega)):
            raise ValueError("detuning and coupling must be finite")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.energy <= 0:
            raise ValueError("E = sqrt(Omega^2 + Delta^2/4) must be positive")
        if self.rate < 0:
            raise NegativeRate(f"emission rate must be >= 0, got {self.rate}")
        if abs(self.p) > 0.5:
            raise ValueError("p must lie in [-1/2, 1/2]")

    @property
    def energy(self) -> float:
        return math.sqrt(self.omega**2 + 0.25 * self.delta**2)

    @property
    def sin_half(self) -> float:
        return math.sqrt((self.energy - 0.5 * self.delta) / (2 * self.energy))

    @property
    def cos_half(self) -> float:
        return math.sqrt((self.energy + 0.5 * self.delta) / (2 * self.energy))

    @property
    def theta(self) -> float:
        return 2 * math.atan2(self.sin_half, self.cos_half)

    def phi(self, t):
        return (self.phase or linear_sweep(self.T))(t)

    def hamiltonian(self, t) -> np.ndarray:
        ph = np.asarray(self.phi(t), dtype=float)
        h = np.empty(ph.shape + (2, 2), dtype=np.complex128)
        h[..., 0, 0] = 0.5 * self.delta
        h[..., 1, 1] = -0.5 * self.delta
        h[..., 0, 1] = self.omega * np.exp(-1j * ph)
        h[..., 1, 0] = self.omega * np.exp(1j * ph)
        return h

    def c_matrix(self, t) -> np.ndarray:
        """Columns ``|+(t)>, |-(t)>`` in the parallel-transported gauge."""
        ph = np.asarray(self.phi(t), dtype=float)
        c, s = self.cos_half, self.sin_half
        m = np.empty(ph.shape + (2, 2), dtype=np.complex128)
        m[..., 0, 0] = np.exp(-1j * ph * s * s) * c
        m[..., 1, 0] = np.exp(1j * ph * c * c) * s
        m[..., 0, 1] = -np.exp(-1j * ph * c * c) * s
        m[..., 1, 1] = np.exp(1j * ph * s * s) * c
        return m

    def eigenstates(self, t):
        m = self.c_matrix(t)
        return m[..., :, 0], m[..., :, 1]

    def path(self) -> HamiltonianPath:
        cyclic = self.phase is None
        return HamiltonianPath(self.hamiltonian, self.T, cyclic=cyclic, name="laser")

    def rho0(self) -> np.ndarray:
        return 0.5 * np.eye(2, dtype=np.complex128) + self.p * PAULI_Z

    def dissipators(self, nodes: int = DEFAULT_NODES) -> DissipatorSet:
        parts = []
        if self.rate > 0:
            parts.append(emission_dissipator(self.rate))
        if self.density is not None and self.density.lambda0 > 0:
            parts.append(dephasing_dissipators(self.density, nodes))
        if not parts:
            return DissipatorSet.empty(2)
        if len(parts) == 1:
            return parts[0]
        return DissipatorSet(
            np.concatenate([d.weights for d in parts]), np.concatenate([d.ops for d in parts]), label="mixed"
        )

    def rotated_dissipators(self, nodes: int = DEFAULT_NODES) -> DissipatorSet:
        """``C† Γ C`` for every member."""
        return replace(self.dissipators(nodes), basis=lambda t: dagger(self.c_matrix(t)))

    def lab_generator(self, nodes: int = DEFAULT_NODES) -> Generator:
        return lab_generator(self.hamiltonian, self.dissipators(nodes), "laser-lab")

    def c_frame_generator(self, nodes: int = DEFAULT_NODES) -> Generator:
        """Rotated generator in the analytic ``C`` frame, gauge terms dropped."""
        h = np.diag([self.energy, -self.energy]).astype(np.complex128)

        def ham(t):
            return np.broadcast_to(h, (len(np.atleast_1d(t)), 2, 2)) if np.ndim(t) else h

        rot = self.rotated_dissipators(nodes)
        return Generator(ham, rot.superoperators, lambda t, rho: lindblad_rhs(h, rot, rho, t), 2, "laser-C")

    def beta_operator(self, beta: float) -> np.ndarray:
        c, s = self.cos_half, self.sin_half
        return math.sqrt(self.rate) * np.array(
            [[c * s, s * s * np.exp(-1j * beta)], [c * c * np.exp(1j * beta), -c * s]], dtype=np.complex128
        )

    def beta_averaged_generator(self, beta_samples: int = 16) -> Generator:
        h = np.diag([self.energy, -self.energy])
        return phase_averaged_generator(h, self.beta_operator, beta_samples)


def laser_hamiltonian(m: LaserModel, t) -> np.ndarray:
    return m.hamiltonian(t)


def laser_eigenstates(m: LaserModel, t):
    return m.eigenstates(t)


# ---------------------------------------------------------------------------
# spin in a steered field
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpinModel:
    """``H = E n(t).sigma`` with ``n`` on a cone of polar angle ``theta_b``.

    The azimuth runs 0 -> 2pi over ``[0, T]``. Dephasing acts as
    ``diag(1, e^{i alpha})`` in the instantaneous ``(e, g)`` eigenbasis.
    """

    E: float
    theta_b: float
    T: float
    density: CollisionDensity | None = None

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 <= self.theta_b <= np.pi:
            raise ValueError("theta_b must lie in [0, pi]")

    def azimuth(self, t):
        return 2 * np.pi * np.asarray(t, dtype=float) / self.T

    def direction(self, t) -> np.ndarray:
        ph = self.azimuth(t)
        st = math.sin(self.theta_b)
        return np.stack(
            [st * np.cos(ph), st * np.sin(ph), np.full_like(ph, math.cos(self.theta_b))], axis=-1
        )

    def hamiltonian(self, t) -> np.ndarray:
        n = self.direction(t)
        return self.E * (
            n[..., 0, None, None] * PAULI_X + n[..., 1, None, None] * PAULI_Y + n[..., 2, None, None] * PAULI_Z
        )

    def eigenbasis(self, t) -> np.ndarray:
        """Columns ``|e(t)>`` (energy +E) and ``|g(t)>`` in a smooth gauge."""
        ph = self.azimuth(t)
        c, s = math.cos(0.5 * self.theta_b), math.sin(0.5 * self.theta_b)
        u = np.empty(ph.shape + (2, 2), dtype=np.complex128)
        u[..., 0, 0] = c
        u[..., 1, 0] = s * np.exp(1j * ph)
        u[..., 0, 1] = -s * np.exp(-1j * ph)
        u[..., 1, 1] = c
        return u

    def path(self) -> HamiltonianPath:
        return HamiltonianPath(self.hamiltonian, self.T, cyclic=True, name="spin")

    def reversed(self) -> "SpinModel":
        """Same loop driven backwards over ``[T, 2T]``: ``n(T + s) = n(T - s)``."""
        return _ReversedSpin(self.E, self.theta_b, self.T, self.density)

    def dissipators(self, nodes: int = DEFAULT_NODES) -> DissipatorSet:
        if self.density is None or self.density.lambda0 == 0:
            return DissipatorSet.empty(2)
        return replace(dephasing_dissipators(self.density, nodes), basis=self.eigenbasis)

    def generator(self, nodes: int = DEFAULT_NODES) -> Generator:
        return lab_generator(self.hamiltonian, self.dissipators(nodes), "spin-lab")

    def solid_angle(self) -> float:
        return 2 * np.pi * (1 - math.cos(self.theta_b))


class _ReversedSpin(SpinModel):
    def azimuth(self, t):
        return 2 * np.pi * (2 * self.T - np.asarray(t, dtype=float)) / self.T

    def path(self) -> HamiltonianPath:
        return HamiltonianPath(self.hamiltonian, 2 * self.T, t0=self.T, cyclic=True, name="spin-reversed")


def spin_model_generator(m: SpinModel, t, nodes: int = DEFAULT_NODES):
    """``(H(t), dissipators)``; the dissipator set carries its own time dependence."""
    return m.hamiltonian(t), m.dissipators(nodes)


def echo_protocol(m: SpinModel, rho0, steps: int, *, method: str = "lab", nodes: int = DEFAULT_NODES):
    """Forward loop, flip, backward loop, flip.

    ``rho0`` and the result are written in the eigenbasis ``(e, g)`` of
    ``H(0)``; the flip swaps those two states. ``steps`` RK4 steps are used
    per leg. ``method="rotated"`` integrates each leg in its transport frame
    with the gauge terms dropped.
    """
    u0 = m.eigenbasis(0.0)
    flip = u0 @ PAULI_X @ dagger(u0)
    rho = u0 @ np.asarray(rho0, dtype=np.complex128) @ dagger(u0)
    back = m.reversed()
    diags = []
    for leg in (m, back):
        t0, t1 = (0.0, m.T) if leg is m else (m.T, 2 * m.T)
        if method == "lab":
            traj = integrate(leg.generator(nodes), rho, t0, t1, steps, record_every=steps)
            rho = traj.final
        elif method == "rotated":
            frame = build_frame(leg.path(), 2 * steps)
            gen = rotated_generator(frame, leg.dissipators(nodes), gauge=False)
            traj = integrate(gen, to_frame(rho, frame.unitaries[0]), t0, t1, steps, record_every=steps)
            rho = from_frame(traj.final, frame.unitaries[-1])
        else:
            raise ValueError(f"unknown method {method!r}")
        diags.append(traj)
        rho = flip @ rho @ flip
    return dagger(u0) @ rho @ u0, diags


# ---------------------------------------------------------------------------
# flat key-value configuration
# ---------------------------------------------------------------------------

MODEL_KINDS = ("emission", "dephasing", "spin")

CONFIG_KEYS: dict[str, type] = {
    "model": str,
    "delta": float,
    "omega": float,
    "lambda0": float,
    "density": str,
    "kappa": float,
    "alpha0": float,
    "sigma": float,
    "nodes": int,
    "theta_b": float,
    "E": float,
    "T": float,
    "steps": int,
    "p": float,
}

CONFIG_DEFAULTS = {
    "emission": {"delta": 0.5, "omega": 1.0, "lambda0": 0.005, "T": 500.0, "steps": 200_000, "p": 0.5},
    "dephasing": {
        "delta": 0.5,
        "omega": 1.0,
        "lambda0": 0.005,
        "density": "shifted_sine",
        "kappa": 1.0,
        "T": 500.0,
        "steps": 200_000,
        "p": 0.5,
        "nodes": DEFAULT_NODES,
    },
    "spin": {
        "E": 1.0,
        "theta_b": math.pi / 3,
        "T": 1600.0,
        "steps": 80_000,
        "lambda0": 0.0,
        "density": "constant",
        "nodes": DEFAULT_NODES,
    },
}


def _coerce(key: str, raw: str, line: int | None):
    typ = CONFIG_KEYS.get(key)
    if typ is None:
        raise ConfigError(f"unknown key {key!r}", line)
    try:
        if typ is int:
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {typ.__name__}", line) from None
    return raw.strip()


def parse_config(text: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, val = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", n)
        out[key] = _coerce(key, val, n)
    return out


def apply_overrides(cfg: dict, pairs) -> dict:
    out = dict(cfg)
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, val = (s.strip() for s in item.split("=", 1))
        out[key] = _coerce(key, val, None)
    return out


def resolve_config(cfg: dict, model: str | None = None) -> dict:
    """Fill defaults and validate physical parameters; raises ConfigError."""
    kind = cfg.get("model", model)
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {', '.join(MODEL_KINDS)}, got {kind!r}")
    if model is not None and kind != model:
        raise ConfigError(f"config is for model {kind!r}, command needs {model!r}")
    out = {"model": kind, **CONFIG_DEFAULTS[kind]}
    out.update(cfg)
    for k, v in out.items():
        if k not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {k!r}")
    if out.get("T", 1) <= 0:
        raise ConfigError("T must be positive")
    if out.get("steps", 1) < 1:
        raise ConfigError("steps must be >= 1")
    if out.get("lambda0", 0) < 0:
        raise ConfigError("lambda0 must be >= 0")
    if "p" in out and abs(out["p"]) > 0.5:
        raise ConfigError("p must lie in [-1/2, 1/2]")
    if "nodes" in out and out["nodes"] < 8:
        raise ConfigError("nodes must be >= 8")
    if kind == "spin":
        if out["E"] <= 0:
            raise ConfigError("E must be positive")
        if not 0 <= out["theta_b"] <= math.pi:
            raise ConfigError("theta_b must lie in [0, pi]")
    else:
        if math.hypot(out["omega"], 0.5 * out["delta"]) <= 0:
            raise ConfigError("omega and delta cannot both vanish")
    if "density" in out and out["density"] not in DENSITY_KINDS[:3]:
        raise ConfigError(f"density must be constant, shifted_sine or gaussian, got {out['density']!r}")
    if out.get("density") == "shifted_sine" and abs(out.get("kappa", 1.0)) > 1:
        raise ConfigError("kappa must satisfy |kappa| <= 1")
    return out


def format_config(cfg: dict) -> str:
    lines = []
    for k in CONFIG_KEYS:
        if k in cfg:
            v = cfg[k]
            lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines) + "\n"


def density_from_config(cfg: dict) -> CollisionDensity:
    return CollisionDensity(
        kind=cfg.get("density", "constant"),
        lambda0=cfg.get("lambda0", 0.0),
        kappa=cfg.get("kappa", 1.0),
        alpha0=cfg.get("alpha0", 0.0),
        sigma=cfg.get("sigma", 0.3),
    )


def build_model(cfg: dict):
    """Model object from a resolved config."""
    kind = cfg["model"]
    if kind == "emission":
        return LaserModel(cfg["delta"], cfg["omega"], cfg["T"], rate=cfg["lambda0"], p=cfg["p"])
    if kind == "dephasing":
        return LaserModel(cfg["delta"], cfg["omega"], cfg["T"], density=density_from_config(cfg), p=cfg["p"])
    return SpinModel(cfg["E"], cfg["theta_b"], cfg["T"], density=density_from_config(cfg))


__all__ = [
    "CollisionDensity",
    "LaserModel",
    "SpinModel",
    "dephasing_dissipators",
    "emission_dissipator",
    "laser_hamiltonian",
    "laser_eigenstates",
    "spin_model_generator",
    "echo_protocol",
    "parse_config",
    "format_config",
    "resolve_config",
    "apply_overrides",
    "build_model",
]
