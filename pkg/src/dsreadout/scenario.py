"""Scenario records and the ``key = value`` configuration format."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

import numpy as np

from .fock import BothExcited, DSExcited, Ground, InitialStateSpec, SiteExcited, Stationary, Superposition
from .lindblad import Sweep
from .model import ChainParams, ModelParams

ENGINES = ("full", "correlators", "direct", "sweep", "chain")

KEYS = (
    "engine", "omega21", "j", "jd", "gamma", "delta", "eps_d_detuning", "initial",
    "theta_deg", "phi_deg", "t_max", "n_points", "spacing", "rel_tol", "site_energies",
    "measured_site", "sweep_start", "sweep_end", "sweep_duration", "out",
)

_FLOAT_KEYS = {
    "omega21", "j", "jd", "gamma", "delta", "eps_d_detuning", "theta_deg", "phi_deg",
    "t_max", "rel_tol", "sweep_start", "sweep_end", "sweep_duration",
}
_INT_KEYS = {"n_points", "measured_site"}

_ENGINE_KEYS = {
    "chain": {"site_energies", "measured_site"},
    "sweep": {"sweep_start", "sweep_end", "sweep_duration"},
}
_TWO_QUBIT_KEYS = {"omega21"}

_INITIAL_RE = re.compile(r"^(ground|both|ds|superposition|site(\d+)|stationary(\d+))$")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Scenario:
    engine: str
    initial: str
    t_max: float
    n_points: int
    j: float
    jd: float
    omega21: float | None = None
    gamma: float = 1.0
    delta: float = 0.0
    eps_d_detuning: float = 0.0
    theta_deg: float | None = None
    phi_deg: float | None = None
    spacing: str = "linear"
    rel_tol: float = 1e-9
    site_energies: tuple[float, ...] | None = None
    measured_site: int | None = None  # 1-based, as in the config file
    sweep_start: float | None = None
    sweep_end: float | None = None
    sweep_duration: float | None = None
    out: str | None = None

    @property
    def params(self) -> ModelParams:
        if self.engine == "chain":
            raise ValueError("chain scenarios have no two-qubit parameters")
        return ModelParams(
            omega21=self.omega21, j=self.j, jd=self.jd, gamma=self.gamma,
            delta=self.delta, eps_d_detuning=self.eps_d_detuning,
        )

    @property
    def chain(self) -> ChainParams:
        return ChainParams(
            site_energies=self.site_energies, j=self.j, jd=self.jd,
            measured_site=self.measured_site - 1, gamma=self.gamma,
            delta=self.delta, eps_d_detuning=self.eps_d_detuning,
        )

    @property
    def sweep(self) -> Sweep:
        return Sweep(self.sweep_start, self.sweep_end, self.sweep_duration)

    @property
    def initial_spec(self) -> InitialStateSpec:
        """Two-qubit initial state (not defined for the chain engine)."""
        m = _INITIAL_RE.match(self.initial)
        kind = m.group(1)
        if kind == "ground":
            return Ground()
        if kind == "both":
            return BothExcited()
        if kind == "ds":
            return DSExcited()
        if kind == "superposition":
            return Superposition(math.radians(self.theta_deg), math.radians(self.phi_deg or 0.0))
        if m.group(2):
            return SiteExcited(int(m.group(2)))
        return Stationary(int(m.group(3)))

    def times(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(0.0, self.t_max, self.n_points)
        # log grid: t = 0 followed by six decades ending at t_max
        return np.concatenate([[0.0], np.logspace(math.log10(self.t_max) - 6, math.log10(self.t_max), self.n_points - 1)])


def _parse_value(key: str, raw: str, line: int):
    try:
        if key in _FLOAT_KEYS:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        if key in _INT_KEYS:
            return int(raw)
        if key == "site_energies":
            return tuple(float(x) for x in raw.split(","))
    except ValueError:
        raise ConfigError(f"malformed number '{raw}'", key, line) from None
    return raw


def parse_config(text: str) -> Scenario:
    """Parse ``key = value`` lines (``#`` starts a comment) into a validated Scenario."""
    values: dict = {}
    lines: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got '{stripped}'", None, lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key, lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", key, lineno)
        values[key] = _parse_value(key, raw, lineno)
        lines[key] = lineno
    return _build(values, lines)


def _build(values: dict, lines: dict) -> Scenario:
    def need(key):
        if key not in values:
            raise ConfigError("missing required key", key)

    def bad(message, key):
        raise ConfigError(message, key, lines.get(key))

    need("engine")
    engine = values["engine"]
    if engine not in ENGINES:
        bad(f"engine must be one of {', '.join(ENGINES)}", "engine")
    for key in ("initial", "t_max", "n_points", "j", "jd"):
        need(key)
    required = set(_ENGINE_KEYS.get(engine, ()))
    if engine != "chain":
        required |= _TWO_QUBIT_KEYS
    for key in sorted(required):
        need(key)
    for key, allowed in list(_ENGINE_KEYS.items()) + [("non-chain", _TWO_QUBIT_KEYS)]:
        applies = engine != "chain" if key == "non-chain" else engine == key
        if not applies:
            for k in allowed & values.keys():
                bad(f"not used by engine '{engine}'", k)

    if values["n_points"] < 2:
        bad("n_points must be >= 2", "n_points")
    if not values["t_max"] > 0:
        bad("t_max must be positive", "t_max")
    if values.get("spacing", "linear") not in ("linear", "log"):
        bad("spacing must be 'linear' or 'log'", "spacing")
    if "gamma" in values and not values["gamma"] > 0:
        bad("gamma must be positive", "gamma")
    if "omega21" in values and not values["omega21"] > 0:
        bad("omega21 must be positive", "omega21")
    if "rel_tol" in values and not 1e-12 <= values["rel_tol"] <= 1e-4:
        bad("rel_tol must lie in [1e-12, 1e-4]", "rel_tol")
    if engine == "sweep" and not values["sweep_duration"] > 0:
        bad("sweep_duration must be positive", "sweep_duration")

    m = _INITIAL_RE.match(values["initial"])
    if not m:
        bad("unknown initial state", "initial")
    kind = m.group(1)
    if kind == "superposition":
        need("theta_deg")
    elif "theta_deg" in values or "phi_deg" in values:
        bad("only used with initial = superposition", "theta_deg" if "theta_deg" in values else "phi_deg")
    if engine == "chain":
        n_sites = len(values["site_energies"])
        if n_sites < 2:
            bad("need at least 2 sites", "site_energies")
        if not 1 <= values["measured_site"] <= n_sites:
            bad(f"measured_site must be in 1..{n_sites}", "measured_site")
        site = m.group(2) or m.group(3)
        if kind != "ground" and (site is None or not 1 <= int(site) <= n_sites):
            bad("chain initial must be ground, site<k> or stationary<k> with k a site", "initial")
    else:
        site = m.group(2) or m.group(3)
        if site is not None and int(site) not in (1, 2):
            bad("two-qubit initial states use site 1 or 2", "initial")
        if engine == "direct" and kind == "ds":
            bad("direct engine has no DS", "initial")
        if engine == "correlators" and kind == "ds":
            bad("correlator engine starts with the DS empty", "initial")
    return Scenario(**values)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    return str(value)


def render_config(s: Scenario) -> str:
    """Inverse of ``parse_config``: only explicitly set (non-None) fields are written."""
    out = []
    for f in fields(s):
        value = getattr(s, f.name)
        if value is None:
            continue
        out.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(out) + "\n"
