"""Scenario configuration: sectioned ``key = value`` text, strictly validated.

Example::

    [scenario]
    name = fig3b
    n0 = 40
    delta_n = 1.5

    [bohm]
    r0 = 1, 2, 6, 10

    [time]
    t_stop = 3.0      # in units of the classical period

Unknown sections or keys are rejected. Times in ``[time]``, ``[snapshot]``
and ``[ensemble]`` are in units of ``T_cl``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .basis import outer_turning_point
from .kepler import SLACK, ClassicalError, turning_points
from .grid import MAPPINGS, MIN_POINTS, default_r_max
from .packet import PULSE_MODES, WEIGHT_MODES, fourier_limited_tau, gaussian_coefficients


class ConfigError(ValueError):
    """Invalid, unknown or inconsistent configuration."""


TASKS = ("eigen", "autocorr", "snapshot", "bohm", "classical", "ensemble", "comparison")


@dataclass
class ScenarioSection:
    name: str = "custom"
    task: str = "autocorr"
    n0: int = 40
    delta_n: float = 1.5
    l: int = 1
    weight_mode: str = "uniform"
    seed: int = 0
    out_dir: str = "out"
    plots: bool = True


@dataclass
class PulseSection:
    mode: str = "post-pulse"
    tau_p: float = 0.0  # 0: Fourier-limited duration for (n0, delta_n)


@dataclass
class GridSection:
    r_max: float = 0.0  # 0: sized from the coefficient window
    point_count: int = 20000
    mapping: str = "sqrt"


@dataclass
class IntegratorSection:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 1000.0
    density_floor: float = 1e-12
    max_step_near_node: float = 10.0


@dataclass
class TimeSection:
    t_start: float = 0.0
    t_stop: float = 1.0
    samples: int = 501


@dataclass
class BohmSection:
    r0: list = field(default_factory=lambda: [2.0])


@dataclass
class ClassicalSection:
    r0: float = 2.0
    l_squared: float = 2.0
    direction: str = "outward"


@dataclass
class EnsembleSection:
    count: int = 2000
    method: str = "stratified"
    check_times: list = field(default_factory=lambda: [0.25, 0.5])


@dataclass
class SnapshotSection:
    times: list = field(default_factory=lambda: [0.0, 0.125, 0.25, 0.375, 0.5])


@dataclass
class EigenSection:
    n: list = field(default_factory=lambda: [40])


SECTIONS = {
    "scenario": ScenarioSection,
    "pulse": PulseSection,
    "grid": GridSection,
    "integrator": IntegratorSection,
    "time": TimeSection,
    "bohm": BohmSection,
    "classical": ClassicalSection,
    "ensemble": EnsembleSection,
    "snapshot": SnapshotSection,
    "eigen": EigenSection,
}


@dataclass
class ScenarioConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    pulse: PulseSection = field(default_factory=PulseSection)
    grid: GridSection = field(default_factory=GridSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    time: TimeSection = field(default_factory=TimeSection)
    bohm: BohmSection = field(default_factory=BohmSection)
    classical: ClassicalSection = field(default_factory=ClassicalSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    snapshot: SnapshotSection = field(default_factory=SnapshotSection)
    eigen: EigenSection = field(default_factory=EigenSection)

    # --- mutation -------------------------------------------------------

    def set(self, dotted: str, raw) -> None:
        """Set ``section.key`` from a string (or an already typed value)."""
        section, _, key = dotted.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        obj = getattr(self, section)
        types = {f.name: f for f in dataclasses.fields(obj)}
        if key not in types:
            raise ConfigError(f"unknown config key '{key}' in [{section}]")
        setattr(obj, key, _coerce(raw, types[key], dotted))

    def update(self, overrides: dict) -> "ScenarioConfig":
        for k, v in overrides.items():
            self.set(k, v)
        return self

    def as_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}

    def copy(self) -> "ScenarioConfig":
        out = ScenarioConfig()
        for sec, values in self.as_dict().items():
            for key, val in values.items():
                out.set(f"{sec}.{key}", val)
        return out

    # --- derived quantities --------------------------------------------

    def coefficients(self):
        s = self.scenario
        return gaussian_coefficients(s.n0, s.delta_n, s.weight_mode, s.l)

    def resolved_r_max(self) -> float:
        if self.grid.r_max > 0:
            return float(self.grid.r_max)
        _, n_max = self.coefficients().window
        return default_r_max(n_max)

    def resolved_tau_p(self) -> float:
        if self.pulse.tau_p > 0:
            return float(self.pulse.tau_p)
        return fourier_limited_tau(self.scenario.n0, self.scenario.delta_n)

    def resolved(self) -> dict:
        """Full configuration with automatic values filled in."""
        d = self.as_dict()
        d["grid"]["r_max"] = self.resolved_r_max()
        d["pulse"]["tau_p"] = self.resolved_tau_p()
        d["coefficients"] = {"window": list(self.coefficients().window)}
        return d

    # --- validation -----------------------------------------------------

    def validate(self) -> "ScenarioConfig":
        """Check every precondition the modules will impose, before any work."""
        s = self.scenario
        if s.task not in TASKS:
            raise ConfigError(f"scenario.task must be one of {TASKS}")
        if s.seed < 0:
            raise ConfigError("scenario.seed must be >= 0")
        if not s.out_dir:
            raise ConfigError("scenario.out_dir must not be empty")
        if s.n0 < 2:
            raise ConfigError("scenario.n0 must be >= 2")
        if not s.delta_n > 0:
            raise ConfigError("scenario.delta_n must be positive")
        if s.l < 0 or s.n0 < s.l + 1:
            raise ConfigError("scenario.l must satisfy 0 <= l < n0")
        if s.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"scenario.weight_mode must be one of {WEIGHT_MODES}")
        if self.pulse.mode not in PULSE_MODES:
            raise ConfigError(f"pulse.mode must be one of {PULSE_MODES}")
        if self.pulse.tau_p < 0:
            raise ConfigError("pulse.tau_p must be >= 0 (0 selects the Fourier-limited value)")
        g = self.grid
        if g.mapping not in MAPPINGS:
            raise ConfigError(f"grid.mapping must be one of {MAPPINGS}")
        if g.point_count < MIN_POINTS:
            raise ConfigError(f"grid.point_count below minimum {MIN_POINTS}")
        if g.r_max < 0:
            raise ConfigError("grid.r_max must be positive (or 0 for automatic)")
        _, n_max = self.coefficients().window
        r_max = self.resolved_r_max()
        tp = outer_turning_point(n_max, s.l)
        if r_max <= tp:
            raise ConfigError(
                f"grid.r_max={r_max:g} lies inside the classically allowed region of n={n_max} "
                f"(turning point {tp:.1f} au)"
            )
        for name in ("rel_tol", "abs_tol", "max_step", "density_floor", "max_step_near_node"):
            if not getattr(self.integrator, name) > 0:
                raise ConfigError(f"integrator.{name} must be positive")
        t = self.time
        if not t.t_stop > t.t_start:
            raise ConfigError("time.t_stop must exceed time.t_start")
        if t.samples < 2:
            raise ConfigError("time.samples must be >= 2")
        r_lo = (r_max**0.5 / g.point_count) ** 2 if g.mapping == "sqrt" else r_max / g.point_count
        for r0 in self.bohm.r0:
            if not r_lo <= r0 <= r_max:
                raise ConfigError(f"bohm.r0={r0} outside the grid [{r_lo:.3g}, {r_max:g}]")
        if self.classical.direction not in ("outward", "inward"):
            raise ConfigError("classical.direction must be 'outward' or 'inward'")
        if self.classical.l_squared < 0:
            raise ConfigError("classical.l_squared must be >= 0")
        try:
            r_in, r_out = turning_points(-0.5 / s.n0**2, self.classical.l_squared)
        except ClassicalError as exc:
            raise ConfigError(f"classical: {exc}") from exc
        if not r_in - SLACK <= self.classical.r0 <= r_out + SLACK:
            raise ConfigError(
                f"classical.r0={self.classical.r0} outside the allowed region "
                f"[{r_in:.6g}, {r_out:.6g}] at E_0"
            )
        if self.ensemble.count < 1:
            raise ConfigError("ensemble.count must be >= 1")
        if self.ensemble.method not in ("stratified", "iid"):
            raise ConfigError("ensemble.method must be 'stratified' or 'iid'")
        if any(c <= t.t_start for c in self.ensemble.check_times):
            raise ConfigError("ensemble.check_times must lie after time.t_start")
        if any(n < s.l + 1 for n in self.eigen.n):
            raise ConfigError("eigen.n entries must be >= l + 1")
        for n in self.eigen.n:
            if outer_turning_point(n, s.l) >= r_max:
                raise ConfigError(f"eigen.n={n} does not fit inside r_max={r_max:g}")
        return self


def _coerce(raw, f: dataclasses.Field, where: str):
    typ = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if typ == "list":
            if isinstance(raw, str):
                items = [x for x in raw.replace(";", ",").split(",") if x.strip()]
            else:
                items = list(raw)
            conv = int if where.endswith("eigen.n") else float
            return [conv(float(x)) if conv is int else conv(x) for x in items]
        if typ == "bool":
            if isinstance(raw, str):
                low = raw.strip().lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(raw)
            return bool(raw)
        if typ == "int":
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        if typ == "float":
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {where}: {raw!r} (expected {typ})") from exc


def load_config(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a sectioned ``key = value`` file on top of ``base`` (defaults if omitted)."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, default_section="__none__"
    )
    parser.optionxform = str
    try:
        with open(Path(path), encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = base.copy() if base is not None else ScenarioConfig()
    for section in parser.sections():
        for key, val in parser.items(section):
            cfg.set(f"{section}.{key}", val)
    return cfg


def dump_config(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` in the same sectioned format :func:`load_config` reads."""
    out = []
    for sec, values in cfg.as_dict().items():
        out.append(f"[{sec}]")
        for key, val in values.items():
            if isinstance(val, list):
                val = ", ".join(repr(v) if not isinstance(v, str) else v for v in val)
            out.append(f"{key} = {val}")
        out.append("")
    return "\n".join(out)
