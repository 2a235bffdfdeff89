"""Experiment configuration: flat key-value files, overrides and validation.

The on-disk format is one ``section.key = value`` assignment per line, with
``#`` comments and blank lines ignored. The same dotted keys work as command
line overrides. Defaults reproduce the reference simulated setup: 15 agents
at unit density, 60000 steps of 0.1 s, 2 Hz observation/communication/filter
schedules, drift -1e-5 and diffusion 1e-4 per step, window sensitivity 0.02
with a 500-sample derivative window and a 1000-observation queue.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Iterable, List, Tuple

from . import agent, cc, kernels, oqa, sae, world
from .swarm import ArenaConfig, MotionParams

MODES = ("bayescpf", "ablation", "both")


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field(s)."""


@dataclass
class SimSection:
    n_agents: int = 15
    max_steps: int = 60000
    trials: int = 10
    seed: int = 1234
    mode: str = "bayescpf"
    record_every: int = 0  # 0 = every filter period


@dataclass
class EnvSection:
    fill_ratio: float = 0.75
    tile_size: float = 0.1


@dataclass
class ArenaSection:
    comm_radius: float = 0.7
    density: float = 1.0
    speed: float = 0.1
    robot_diameter: float = 0.14
    step_duration: float = 0.1
    turn_probability: float = 0.01
    avoidance_factor: float = 1.5


@dataclass
class SensorSection:
    drift: float = -1e-5
    diffusion: float = 1e-4
    initial: float = 1.0
    lower_saturation: float = 0.5
    upper_saturation: float = 1.0


@dataclass
class FilterSection:
    drift: float = -1e-5
    diffusion: float = 1e-4
    initial: float = 1.0
    initial_variance: float = 1e-4
    lower_bound: float = 0.5
    upper_bound: float = 1.0
    literal_confidence: bool = False


@dataclass
class OqaSection:
    sensitivity: float = 0.02
    derivative_window: int = 500
    queue_capacity: int = 1000
    literal_derivative: bool = False


@dataclass
class ScheduleSection:
    observation_period: int = 5
    comms_period: int = 5
    filter_period: int = 5


@dataclass
class CommsSection:
    drop_probability: float = 0.0


@dataclass
class TrialConfig:
    sim: SimSection = field(default_factory=SimSection)
    env: EnvSection = field(default_factory=EnvSection)
    arena: ArenaSection = field(default_factory=ArenaSection)
    sensor: SensorSection = field(default_factory=SensorSection)
    filter: FilterSection = field(default_factory=FilterSection)
    oqa: OqaSection = field(default_factory=OqaSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    comms: CommsSection = field(default_factory=CommsSection)

    # -- derived views ------------------------------------------------------

    def arena_config(self) -> ArenaConfig:
        a = self.arena
        return ArenaConfig(
            swarm_size=self.sim.n_agents,
            comm_radius=a.comm_radius,
            density=a.density,
            motion=MotionParams(
                speed=a.speed,
                robot_diameter=a.robot_diameter,
                step_duration=a.step_duration,
                turn_probability=a.turn_probability,
                avoidance_factor=a.avoidance_factor,
            ),
        )

    def degradation_params(self) -> world.DegradationParams:
        s = self.sensor
        return world.DegradationParams(
            drift=s.drift,
            diffusion=s.diffusion,
            lower_saturation=s.lower_saturation,
            upper_saturation=s.upper_saturation,
        )

    def assumed_model(self) -> sae.AssumedDegradationParams:
        """Assumed drift/diffusion converted from per-step to per-activation."""
        period = self.schedule.filter_period
        return sae.AssumedDegradationParams(
            drift=self.filter.drift * period,
            diffusion=self.filter.diffusion * math.sqrt(period),
        )

    def bounds(self) -> cc.AccuracyBounds:
        return cc.AccuracyBounds(
            lower=self.filter.lower_bound, upper=self.filter.upper_bound
        )

    def oqa_params(self) -> oqa.OqaParams:
        return oqa.OqaParams(
            sensitivity=self.oqa.sensitivity,
            derivative_window=self.oqa.derivative_window,
            queue_capacity=self.oqa.queue_capacity,
            observation_period=self.schedule.observation_period,
        )

    def filter_settings(self) -> agent.FilterSettings:
        return agent.FilterSettings(
            schedule=agent.Schedule(
                observation_period=self.schedule.observation_period,
                comms_period=self.schedule.comms_period,
                filter_period=self.schedule.filter_period,
            ),
            assumed_model=self.assumed_model(),
            bounds=self.bounds(),
            oqa_params=self.oqa_params(),
            literal_confidence=self.filter.literal_confidence,
            literal_derivative=self.oqa.literal_derivative,
        )

    def filter_spec(self) -> kernels.FilterSpec:
        model = self.assumed_model()
        return kernels.FilterSpec(
            drift=model.drift,
            variance_rate=model.diffusion * model.diffusion,
            lower=self.filter.lower_bound,
            upper=self.filter.upper_bound,
            literal_confidence=self.filter.literal_confidence,
        )

    def record_every(self) -> int:
        return self.sim.record_every or self.schedule.filter_period

    # -- validation ---------------------------------------------------------

    def validate(self) -> "TrialConfig":
        errors: List[str] = []

        def check(ok: bool, key: str, msg: str) -> None:
            if not ok:
                errors.append(f"{key}: {msg}")

        s = self.sim
        check(s.n_agents >= 1, "sim.n_agents", f"must be >= 1, got {s.n_agents}")
        check(s.max_steps >= 0, "sim.max_steps", f"must be >= 0, got {s.max_steps}")
        check(s.trials >= 1, "sim.trials", f"must be >= 1, got {s.trials}")
        check(s.seed >= 0, "sim.seed", f"must be >= 0, got {s.seed}")
        check(s.mode in MODES, "sim.mode", f"must be one of {MODES}, got {s.mode!r}")
        check(
            s.record_every >= 0,
            "sim.record_every",
            f"must be >= 0, got {s.record_every}",
        )

        e = self.env
        check(
            0.0 <= e.fill_ratio <= 1.0,
            "env.fill_ratio",
            f"must be in [0, 1], got {e.fill_ratio}",
        )
        check(e.tile_size > 0.0, "env.tile_size", f"must be > 0, got {e.tile_size}")

        a = self.arena
        check(a.comm_radius > 0.0, "arena.comm_radius", "must be > 0")
        check(a.density > 0.0, "arena.density", "must be > 0")
        check(a.speed >= 0.0, "arena.speed", "must be >= 0")
        check(a.robot_diameter > 0.0, "arena.robot_diameter", "must be > 0")
        check(a.step_duration > 0.0, "arena.step_duration", "must be > 0")
        check(
            0.0 <= a.turn_probability <= 1.0,
            "arena.turn_probability",
            "must be in [0, 1]",
        )
        check(a.avoidance_factor >= 0.0, "arena.avoidance_factor", "must be >= 0")

        sn = self.sensor
        check(sn.drift <= 0.0, "sensor.drift", f"must be <= 0, got {sn.drift}")
        check(sn.diffusion >= 0.0, "sensor.diffusion", "must be >= 0")
        check(
            0.5 <= sn.lower_saturation <= sn.upper_saturation <= 1.0,
            "sensor.lower_saturation",
            "need 0.5 <= lower <= upper <= 1.0",
        )
        check(
            sn.lower_saturation <= sn.initial <= sn.upper_saturation,
            "sensor.initial",
            f"must lie inside the saturation range, got {sn.initial}",
        )

        f = self.filter
        check(f.drift <= 0.0, "filter.drift", f"must be <= 0, got {f.drift}")
        check(f.diffusion >= 0.0, "filter.diffusion", "must be >= 0")
        check(f.initial_variance >= 0.0, "filter.initial_variance", "must be >= 0")
        check(
            0.5 <= f.lower_bound < f.upper_bound <= 1.0,
            "filter.lower_bound",
            "need 0.5 <= lower < upper <= 1.0",
        )
        check(
            f.lower_bound <= f.initial <= f.upper_bound,
            "filter.initial",
            f"must lie inside the accuracy bounds, got {f.initial}",
        )

        o = self.oqa
        check(o.sensitivity >= 0.0, "oqa.sensitivity", "must be >= 0")
        check(o.derivative_window >= 1, "oqa.derivative_window", "must be >= 1")
        check(o.queue_capacity >= 1, "oqa.queue_capacity", "must be >= 1")

        sc = self.schedule
        for name in ("observation_period", "comms_period", "filter_period"):
            check(getattr(sc, name) >= 1, f"schedule.{name}", "must be >= 1")

        c = self.comms
        check(
            0.0 <= c.drop_probability <= 1.0,
            "comms.drop_probability",
            "must be in [0, 1]",
        )

        if not errors and self.arena.comm_radius > 0 and self.arena.density > 0:
            side = self.arena_config().side_length
            check(
                self.env.tile_size <= side,
                "env.tile_size",
                f"must not exceed the arena side {side:.3f}",
            )

        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
        return self

    # -- serialization ------------------------------------------------------

    def items(self) -> List[Tuple[str, object]]:
        out = []
        for section_field in fields(self):
            section = getattr(self, section_field.name)
            for f in fields(section):
                out.append((f"{section_field.name}.{f.name}", getattr(section, f.name)))
        return sorted(out)

    def canonical(self) -> str:
        return "\n".join(f"{k} = {_format_value(v)}" for k, v in self.items()) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]

    def with_overrides(self, assignments: Iterable[str]) -> "TrialConfig":
        cfg = self
        for text in assignments:
            if "=" not in text:
                raise ConfigError(f"override {text!r} is not of the form key=value")
            key, value = text.split("=", 1)
            cfg = cfg._set(key.strip(), value.strip())
        return cfg

    def _set(self, dotted: str, raw: str) -> "TrialConfig":
        try:
            section_name, field_name = dotted.split(".", 1)
        except ValueError:
            raise ConfigError(f"key {dotted!r} must be of the form section.key")
        section_fields = {f.name: f for f in fields(self)}
        if section_name not in section_fields:
            raise ConfigError(f"unknown section {section_name!r} in key {dotted!r}")
        section = getattr(self, section_name)
        value_fields = {f.name: f for f in fields(section)}
        if field_name not in value_fields:
            raise ConfigError(f"unknown key {dotted!r}")
        value = _coerce(dotted, raw, value_fields[field_name].type)
        new_section = replace(section, **{field_name: value})
        return replace(self, **{section_name: new_section})


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key: str, raw: str, typ) -> object:
    name = typ if isinstance(typ, str) else typ.__name__
    try:
        if name == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if name == "int":
            return int(raw)
        if name == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}")


def parse_lines(lines: Iterable[str], base: TrialConfig = None) -> TrialConfig:
    cfg = base or TrialConfig()
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = text.split("=", 1)
        cfg = cfg._set(key.strip(), value.strip())
    return cfg


def load(path: str, overrides: Iterable[str] = ()) -> TrialConfig:
    """Config from a file plus command-line overrides, not yet validated."""
    with open(path) as fh:
        cfg = parse_lines(fh)
    return cfg.with_overrides(overrides)


def expand_grid(lines: Iterable[str], base: TrialConfig = None) -> List[TrialConfig]:
    """Cartesian product over comma-separated values in a sweep file."""
    scalars: Dict[str, str] = {}
    swept: List[Tuple[str, List[str]]] = []
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'section.key = value[,value...]'")
        key, value = text.split("=", 1)
        key = key.strip()
        values = [v.strip() for v in value.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"line {lineno}: no values for {key}")
        if len(values) == 1:
            scalars[key] = values[0]
        else:
            swept.append((key, values))

    root = base or TrialConfig()
    for key, value in scalars.items():
        root = root._set(key, value)

    configs = [root]
    for key, values in swept:
        configs = [cfg._set(key, v) for cfg in configs for v in values]
    return configs
