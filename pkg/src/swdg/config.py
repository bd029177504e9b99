"""Run configuration: `key = value` text files with `#` comments.

Unknown keys, type mismatches, and inconsistent combinations are rejected
with the offending line number.  ``emit_config``/``parse_config`` round-trip
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

SCENARIOS = ("dam_break_static", "dam_break_dynamic", "still_water")
MODES = ("lane_A", "lane_B", "heterogeneous", "measure_then_optimize")


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    scenario: str = "still_water"
    # mesh
    nx: int = 8
    perturbation: float = 0.2
    seed: int = 0
    # orders
    base_order: int = 0
    order: int = 1
    separated: bool = True
    # adaptivity
    fraction: int = 0            # static: every k-th element high; 0 = none
    theta_refine: float = 5e-2
    theta_coarsen: float = 1e-2
    # time loop
    dt: float = 1e-5
    steps: int = 100
    # physics
    g: float = 1.0
    f_c: float = 0.0
    friction_law: str = "linear"
    friction_coeff: float = 0.0
    h_min: float = 1e-3
    body_force_x: float = 0.0
    body_force_y: float = 0.0
    # execution
    mode: str = "lane_A"
    warmup_substeps: int = 2
    measured_substeps: int = 20
    # output
    output_dir: str = "out"
    figures: bool = True

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.order != self.base_order + 1:
            raise ConfigError("order must equal base_order + 1")
        if self.fraction and self.scenario == "dam_break_dynamic":
            raise ConfigError("fraction applies to static adaptivity only")
        if self.fraction < 0:
            raise ConfigError("fraction must be >= 0")
        if self.theta_coarsen >= self.theta_refine:
            raise ConfigError("theta_coarsen must be below theta_refine")
        if not self.separated and self.scenario == "dam_break_dynamic":
            raise ConfigError("dynamic adaptivity requires the separated scheme")
        if not self.separated and self.fraction not in (0, 1):
            raise ConfigError("unseparated execution requires a uniform order "
                              "(fraction 0 or 1)")
        if self.dt <= 0.0 or self.steps < 1:
            raise ConfigError("dt must be positive and steps >= 1")
        if self.nx < 1 or not (0.0 <= self.perturbation < 0.5):
            raise ConfigError("invalid mesh parameters")


_PARSERS = {int: int, float: float, str: str, bool: _parse_bool}
_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_TYPES = {"int": int, "float": float, "str": str, "bool": bool}


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        ftype = _TYPES[_FIELDS[key]] if isinstance(_FIELDS[key], str) else _FIELDS[key]
        try:
            setattr(cfg, key, _PARSERS[ftype](value))
        except ValueError:
            raise ConfigError(
                f"line {lineno}: cannot parse {value!r} as {ftype.__name__} "
                f"for key {key!r}") from None
    # Scenario-dependent defaults for keys not set explicitly.
    if cfg.scenario.startswith("dam_break"):
        explicit = {ln.split("=")[0].strip()
                    for ln in text.splitlines()
                    if "=" in ln.split("#", 1)[0]}
        if "friction_coeff" not in explicit:
            cfg.friction_coeff = 1e-4
        if "f_c" not in explicit:
            cfg.f_c = 1e-5
        if "fraction" not in explicit and cfg.scenario == "dam_break_static":
            cfg.fraction = 32
    try:
        cfg.validate()
    except ConfigError as err:
        raise ConfigError(f"invalid configuration: {err}") from None
    return cfg


def parse_config_file(path) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())


def emit_config(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"
