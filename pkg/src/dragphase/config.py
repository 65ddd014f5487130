"""Physical constants and scenario parameters, loaded from a JSON config file.

Every key except ``scenario.n_sats`` has a default; see ``docs/config.md``
for the schema. Internal units are km, s and rad. Drag areas stay in m² and
are converted exactly once, through :data:`M2_TO_KM2`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dragphase.atmosphere import HarrisPriesterTable, load_table

#: m² -> km², the only area unit conversion in the package.
M2_TO_KM2 = 1.0e-6

SECONDS_PER_DAY = 86400.0


class ConfigError(ValueError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """The config file is missing or is not valid JSON."""


class ConfigValidationError(ConfigError):
    """A config value violates an invariant. ``key`` names the offender."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SatelliteParams:
    """Drag actuation envelope of one (representative) satellite."""

    c_d: float = 2.2
    mass: float = 5.0  # kg
    area_min: float = 0.01  # m²
    area_max: float = 0.03  # m²

    def __post_init__(self):
        _require(self.c_d > 0, "satellite.c_d", "must be > 0")
        _require(self.mass > 0, "satellite.mass", "must be > 0")
        _require(self.area_min > 0, "satellite.area_min", "must be > 0")
        _require(
            self.area_min < self.area_max,
            "satellite.area_min",
            f"must be < area_max ({self.area_min} >= {self.area_max})",
        )

    def ballistic(self, area):
        """½·C_D·A/m in km²/kg, so that a_drag = -ballistic·ρ·v²."""
        return 0.5 * self.c_d / self.mass * area * M2_TO_KM2


@dataclass(frozen=True)
class Environment:
    mu_earth: float = 398600.4418  # km³/s²
    omega_earth: float = 7.2921159e-5  # rad/s
    r_earth: float = 6378.137  # km
    inclination: float = 97.2  # deg
    atmosphere: HarrisPriesterTable = field(default_factory=load_table)

    def __post_init__(self):
        _require(self.mu_earth > 0, "environment.mu_earth", "must be > 0")
        _require(self.omega_earth >= 0, "environment.omega_earth", "must be >= 0")
        _require(self.r_earth > 0, "environment.r_earth", "must be > 0")
        _require(
            0.0 <= self.inclination <= 180.0,
            "environment.inclination",
            "must lie in [0, 180] degrees",
        )

    @property
    def atmosphere_rate(self) -> float:
        """Component of Earth's spin along the orbit normal, rad/s."""
        return self.omega_earth * math.cos(math.radians(self.inclination))


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_iters: int | None = None  # None -> scaled with problem size
    bland_after: int = 50
    refactor_every: int = 100

    def __post_init__(self):
        _require(self.feas_tol > 0, "solver.feas_tol", "must be > 0")
        _require(self.opt_tol > 0, "solver.opt_tol", "must be > 0")
        _require(
            self.max_iters is None or self.max_iters > 0,
            "solver.max_iters",
            "must be > 0 or null",
        )
        _require(self.bland_after > 0, "solver.bland_after", "must be > 0")
        _require(self.refactor_every > 0, "solver.refactor_every", "must be > 0")


@dataclass(frozen=True)
class Scenario:
    n_sats: int
    altitude0: float = 475.0  # km
    eps_theta: float = 0.1  # deg
    eps_omega: float = 1e-18  # rad/s
    dt_command: float = SECONDS_PER_DAY  # s
    dt_fine: float = 10.0  # s
    horizon_max: int = 365  # days
    reentry_altitude: float = 200.0  # km
    maintenance_threshold: float | None = None  # deg; None -> eps_theta
    lifetime_max_days: int | None = None  # cap for run_lifetime; None -> until reentry
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        _require(
            isinstance(self.n_sats, int) and self.n_sats >= 2,
            "scenario.n_sats",
            "must be an integer >= 2",
        )
        _require(self.eps_theta > 0, "scenario.eps_theta", "must be > 0")
        _require(self.eps_omega > 0, "scenario.eps_omega", "must be > 0")
        _require(self.dt_fine > 0, "scenario.dt_fine", "must be > 0")
        _require(
            self.dt_fine <= self.dt_command,
            "scenario.dt_fine",
            "must be <= dt_command",
        )
        ratio = self.dt_command / self.dt_fine
        _require(
            abs(ratio - round(ratio)) <= 1e-9 * ratio,
            "scenario.dt_command",
            "must be an integer multiple of dt_fine",
        )
        _require(
            isinstance(self.horizon_max, int) and self.horizon_max >= 1,
            "scenario.horizon_max",
            "must be an integer >= 1",
        )
        _require(
            self.reentry_altitude < self.altitude0,
            "scenario.reentry_altitude",
            "must be below altitude0",
        )
        if self.maintenance_threshold is not None:
            _require(
                self.maintenance_threshold > 0,
                "scenario.maintenance_threshold",
                "must be > 0",
            )
        if self.lifetime_max_days is not None:
            _require(
                isinstance(self.lifetime_max_days, int) and self.lifetime_max_days >= 1,
                "scenario.lifetime_max_days",
                "must be an integer >= 1 or null",
            )

    @property
    def eps_theta_rad(self) -> float:
        return math.radians(self.eps_theta)

    @property
    def maintenance_threshold_deg(self) -> float:
        if self.maintenance_threshold is None:
            return self.eps_theta
        return self.maintenance_threshold

    @property
    def fine_steps(self) -> int:
        return int(round(self.dt_command / self.dt_fine))


def _require(ok: bool, key: str, message: str) -> None:
    if not ok:
        raise ConfigValidationError(key, message)


_SECTIONS = {
    "satellite": ("c_d", "mass", "area_min", "area_max"),
    "environment": ("mu_earth", "omega_earth", "r_earth", "inclination", "atmosphere"),
    "scenario": (
        "n_sats",
        "altitude0",
        "eps_theta",
        "eps_omega",
        "dt_command",
        "dt_fine",
        "horizon_max",
        "reentry_altitude",
        "maintenance_threshold",
        "lifetime_max_days",
    ),
    "solver": ("feas_tol", "opt_tol", "max_iters", "bland_after", "refactor_every"),
}
_INT_KEYS = {"n_sats", "horizon_max", "lifetime_max_days", "max_iters", "bland_after", "refactor_every"}
_NULLABLE = {"maintenance_threshold", "lifetime_max_days", "max_iters"}


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigValidationError(name, "must be a JSON object")
    for key in sec:
        if key not in _SECTIONS[name]:
            raise ConfigValidationError(f"{name}.{key}", "unknown key")
    out = {}
    for key, value in sec.items():
        if key == "atmosphere":
            continue
        qualified = f"{name}.{key}"
        if value is None:
            if key not in _NULLABLE:
                raise ConfigValidationError(qualified, "must not be null")
            out[key] = None
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigValidationError(qualified, f"must be a number, got {value!r}")
        elif key in _INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ConfigValidationError(qualified, "must be an integer")
            out[key] = int(value)
        else:
            if not math.isfinite(value):
                raise ConfigValidationError(qualified, "must be finite")
            out[key] = float(value)
    return out


def _atmosphere(env_doc: dict, base: Path) -> HarrisPriesterTable:
    spec = env_doc.get("atmosphere", {})
    if not isinstance(spec, dict):
        raise ConfigValidationError("environment.atmosphere", "must be a JSON object")
    for key in spec:
        if key not in ("table", "mode"):
            raise ConfigValidationError(f"environment.atmosphere.{key}", "unknown key")
    table = spec.get("table")
    mode = spec.get("mode", "geometric-mean")
    path = None
    if table is not None:
        path = Path(table)
        if not path.is_absolute():
            path = base / path
    try:
        return load_table(path, mode=mode)
    except (OSError, ValueError) as exc:
        raise ConfigValidationError("environment.atmosphere", str(exc)) from exc


def config_from_dict(doc: dict, base: Path | None = None):
    """Build ``(SatelliteParams, Environment, Scenario)`` from a parsed document."""
    if not isinstance(doc, dict):
        raise ConfigValidationError("<root>", "must be a JSON object")
    for key in doc:
        if key not in _SECTIONS:
            raise ConfigValidationError(key, "unknown section")
    base = base or Path.cwd()
    sat = SatelliteParams(**_section(doc, "satellite"))
    env_doc = doc.get("environment", {})
    env = Environment(**_section(doc, "environment"), atmosphere=_atmosphere(env_doc, base))
    scn_kw = _section(doc, "scenario")
    if "n_sats" not in scn_kw:
        raise ConfigValidationError("scenario.n_sats", "is required")
    solver = SolverOptions(**_section(doc, "solver"))
    scn = Scenario(**scn_kw, solver=solver)
    return sat, env, scn


def load_config(path) -> tuple[SatelliteParams, Environment, Scenario]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc
    return config_from_dict(doc, base=path.parent)


def config_to_dict(sat: SatelliteParams, env: Environment, scn: Scenario) -> dict[str, Any]:
    """Inverse of :func:`config_from_dict`; floats survive a JSON round trip exactly."""
    atm = env.atmosphere
    return {
        "satellite": {
            "c_d": sat.c_d,
            "mass": sat.mass,
            "area_min": sat.area_min,
            "area_max": sat.area_max,
        },
        "environment": {
            "mu_earth": env.mu_earth,
            "omega_earth": env.omega_earth,
            "r_earth": env.r_earth,
            "inclination": env.inclination,
            "atmosphere": {
                "table": None if atm.source is None else str(atm.source),
                "mode": atm.mode,
            },
        },
        "scenario": {
            "n_sats": scn.n_sats,
            "altitude0": scn.altitude0,
            "eps_theta": scn.eps_theta,
            "eps_omega": scn.eps_omega,
            "dt_command": scn.dt_command,
            "dt_fine": scn.dt_fine,
            "horizon_max": scn.horizon_max,
            "reentry_altitude": scn.reentry_altitude,
            "maintenance_threshold": scn.maintenance_threshold,
            "lifetime_max_days": scn.lifetime_max_days,
        },
        "solver": {
            "feas_tol": scn.solver.feas_tol,
            "opt_tol": scn.solver.opt_tol,
            "max_iters": scn.solver.max_iters,
            "bland_after": scn.solver.bland_after,
            "refactor_every": scn.solver.refactor_every,
        },
    }


def dump_config(sat, env, scn) -> str:
    return json.dumps(config_to_dict(sat, env, scn), indent=2) + "\n"
