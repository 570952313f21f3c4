import copy
import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, NamedTuple, TypeVar

import tomli_w

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from .controller import (
    ClampLocus,
    ControllerConfig,
    CostNorm,
    HorizonTheta,
    TargetPolicy,
)
from .exceptions import (
    ScenarioParseError,
    ScenarioValidationError,
    SingularDiscretizationError,
)
from .impedance import Diagonal, ImpedanceState, discretize
from .plant import PlantParams, equivalent_inertia
from .schedule import (
    Schedule,
    ScheduleKind,
    sample_schedule,
    schedule_rate,
)

logger = logging.getLogger(__name__)

BUILTIN_PACKAGE = "hapsim.scenarios"
EPSILON_SWEEP = (0.05, 0.1, 0.2, 0.4)
DEFAULT_DT = 1e-3
DEFAULT_Z_A0 = ImpedanceState(b=0.01, k=1.0)

_MISSING = object()
EnumT = TypeVar("EnumT", bound=Enum)


class ModeLabel(Enum):
    COOPERATIVE = "cooperative"
    NON_COOPERATIVE = "non-cooperative"
    CUSTOM = "custom"


@dataclass(frozen=True, slots=True)
class HumanConfig:
    k_h: Schedule
    b_h: Schedule
    theta_h: Schedule
    measurement_noise: float = 0.0


@dataclass(frozen=True, slots=True)
class AutomationConfig:
    theta_a: Schedule
    b_a0: float = DEFAULT_Z_A0.b
    k_a0: float = DEFAULT_Z_A0.k

    @property
    def z_a0(self) -> ImpedanceState:
        return ImpedanceState(b=self.b_a0, k=self.k_a0)


@dataclass(frozen=True, slots=True)
class SweepSpec:
    key: str
    values: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    name: str
    duration: float
    plant: PlantParams
    controller: ControllerConfig
    human: HumanConfig
    automation: AutomationConfig
    tau_v: Schedule
    mode_label: ModeLabel = ModeLabel.CUSTOM
    seed: int = 0
    dt: float = DEFAULT_DT
    sweep: SweepSpec | None = None

    @property
    def ts(self) -> float:
        return self.controller.ts

    @property
    def ticks(self) -> int:
        """Number of logged control steps, the instant t=0 included."""
        return math.floor(self.duration / self.ts + 1e-9) + 1

    @property
    def inner_steps(self) -> int:
        return round(self.ts / self.dt)

    def tick_time(self, k: int) -> float:
        return round(k * self.ts, 12)


class HumanState(NamedTuple):
    theta_h: float
    dtheta_h: float
    z_h: ImpedanceState


def human_state(cfg: ScenarioConfig, t: float) -> HumanState:
    human = cfg.human
    return HumanState(
        theta_h=sample_schedule(human.theta_h, t, cfg.duration),
        dtheta_h=schedule_rate(human.theta_h, t, cfg.ts, cfg.duration),
        z_h=ImpedanceState(
            b=sample_schedule(human.b_h, t, cfg.duration),
            k=sample_schedule(human.k_h, t, cfg.duration),
        ),
    )


def automation_intent(cfg: ScenarioConfig, t: float) -> float:
    return sample_schedule(cfg.automation.theta_a, t, cfg.duration)


def automation_future(cfg: ScenarioConfig, k: int) -> list[float]:
    """Scheduled automation intents for ticks k+1 ... k+Np."""
    schedule = cfg.automation.theta_a
    return [
        sample_schedule(schedule, min(cfg.tick_time(k + n), cfg.duration))
        for n in range(1, cfg.controller.horizon + 1)
    ]


def road_torque(cfg: ScenarioConfig, t: float) -> float:
    return sample_schedule(cfg.tau_v, t, cfg.duration)


class _Section:
    """Typed, location-aware view over one TOML table."""
    __slots__ = ("data", "location", "_seen")

    def __init__(self, data: Any, location: str):
        if not isinstance(data, dict):
            raise ScenarioParseError(location, "expected a table")
        self.data = data
        self.location = location
        self._seen: set[str] = set()

    def where(self, key: str) -> str:
        return f"{self.location}.{key}" if self.location else key

    def raw(self, key: str, default: Any) -> Any:
        self._seen.add(key)
        if key in self.data:
            return self.data[key]
        if default is _MISSING:
            raise ScenarioParseError(self.where(key), "required key missing")
        return default

    def number(self, key: str, default: Any = _MISSING) -> float:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ScenarioParseError(self.where(key), "expected a number")
        return float(value)

    def integer(self, key: str, default: Any = _MISSING) -> int:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioParseError(self.where(key), "expected an integer")
        return value

    def boolean(self, key: str, default: Any = _MISSING) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ScenarioParseError(self.where(key), "expected true or false")
        return value

    def string(self, key: str, default: Any = _MISSING) -> str:
        value = self.raw(key, default)
        if not isinstance(value, str):
            raise ScenarioParseError(self.where(key), "expected a string")
        return value

    def choice(
            self,
            key: str,
            enum: type[EnumT],
            default: EnumT,
    ) -> EnumT:
        value = self.string(key, default.value)
        try:
            return enum(value)
        except ValueError:
            allowed = ", ".join(repr(item.value) for item in enum)
            raise ScenarioParseError(
                self.where(key), f"expected one of {allowed}, got {value!r}",
            ) from None

    def schedule(self, key: str, default: Any = _MISSING) -> Schedule:
        value = self.raw(key, default)
        if isinstance(value, Schedule):
            return value
        return parse_schedule(value, self.where(key))

    def section(self, key: str) -> "_Section":
        value = self.raw(key, _MISSING)
        return _Section(value, self.where(key))

    def finish(self) -> None:
        for key in self.data:
            if key not in self._seen:
                raise ScenarioParseError(self.where(key), "unknown key")


def parse_schedule(value: Any, location: str) -> Schedule:
    if isinstance(value, int | float) and not isinstance(value, bool):
        return Schedule.constant(value)
    section = _Section(value, location)
    kind = section.choice("kind", ScheduleKind, ScheduleKind.CONSTANT)
    if kind is ScheduleKind.SINUSOID:
        schedule = Schedule.sinusoid(
            amplitude=section.number("amplitude"),
            frequency=section.number("frequency"),
            offset=section.number("offset", 0.0),
        )
        if schedule.frequency < 0:
            raise ScenarioValidationError(f"{location}: frequency >= 0")
    else:
        schedule = Schedule(kind, _parse_points(section, kind))
    section.finish()
    return schedule


def _parse_points(
        section: _Section,
        kind: ScheduleKind,
) -> tuple[tuple[float, float], ...]:
    where = section.where("points")
    raw = section.raw("points", _MISSING)
    if not isinstance(raw, list):
        raise ScenarioParseError(where, "expected a list of [t, value] pairs")
    points = []
    for i, point in enumerate(raw):
        if (
            not isinstance(point, list)
            or len(point) != 2
            or not all(
                isinstance(v, int | float) and not isinstance(v, bool)
                for v in point
            )
        ):
            raise ScenarioParseError(
                f"{where}[{i}]", "expected a [t, value] pair of numbers",
            )
        points.append((float(point[0]), float(point[1])))

    if not points:
        raise ScenarioValidationError(f"{where}: at least one breakpoint")
    if kind is ScheduleKind.CONSTANT and len(points) != 1:
        raise ScenarioValidationError(
            f"{where}: a constant schedule has exactly one point",
        )
    if points[0][0] != 0:
        raise ScenarioValidationError(f"{where}: first breakpoint at t=0")
    times = [t for t, _ in points]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ScenarioValidationError(
            f"{where}: breakpoint times strictly increasing",
        )
    return tuple(points)


def _require(condition: bool, invariant: str) -> None:
    if not condition:
        raise ScenarioValidationError(invariant)


def _require_nonnegative(schedule: Schedule, name: str) -> None:
    _require(schedule.bounds()[0] >= 0, f"{name} >= 0")


def _parse_plant(section: _Section) -> PlantParams:
    plant = PlantParams(
        j_sw=section.number("j_sw"),
        j_h=section.number("j_h"),
        j_a=section.number("j_a"),
        b_sw=section.number("b_sw"),
    )
    section.finish()
    _require(equivalent_inertia(plant) > 0, "plant.j_sw + j_h + j_a > 0")
    _require(plant.b_sw >= 0, "plant.b_sw >= 0")
    return plant


def _parse_controller(section: _Section) -> ControllerConfig:
    ts = section.number("ts")
    horizon = section.integer("np")
    epsilon = section.schedule("epsilon")
    alpha = Diagonal(section.number("alpha_b"), section.number("alpha_k"))
    beta = Diagonal(section.number("beta_b"), section.number("beta_k"))
    config = dict(
        adaptive=section.boolean("adaptive", True),
        norm=section.choice("norm", CostNorm, CostNorm.L1),
        target_policy=section.choice(
            "target", TargetPolicy, TargetPolicy.NEAREST,
        ),
        clamp=section.choice("clamp", ClampLocus, ClampLocus.IMPEDANCE),
        horizon_theta=section.choice(
            "horizon_theta", HorizonTheta, HorizonTheta.FROZEN,
        ),
        hold_reference=section.boolean("hold_reference", True),
        resolve_clamped=section.boolean("resolve_clamped", True),
    )
    section.finish()

    _require(ts > 0, "controller.ts > 0")
    _require(horizon >= 1, "controller.np >= 1")
    _require_nonnegative(epsilon, "controller.epsilon")
    _require(beta.b != 0 and beta.k != 0, "controller.beta_b, beta_k != 0")
    try:
        dynamics = discretize(alpha, beta, ts)
    except SingularDiscretizationError:
        raise ScenarioValidationError(
            "controller.ts * alpha != 1 in both channels",
        ) from None
    return ControllerConfig(
        horizon=horizon, epsilon=epsilon, dynamics=dynamics, **config,
    )


def _parse_human(section: _Section) -> HumanConfig:
    human = HumanConfig(
        k_h=section.schedule("k_h"),
        b_h=section.schedule("b_h"),
        theta_h=section.schedule("theta_h"),
        measurement_noise=section.number("measurement_noise", 0.0),
    )
    section.finish()
    _require_nonnegative(human.k_h, "human.k_h")
    _require_nonnegative(human.b_h, "human.b_h")
    _require(human.measurement_noise >= 0, "human.measurement_noise >= 0")
    return human


def _parse_automation(section: _Section) -> AutomationConfig:
    automation = AutomationConfig(
        theta_a=section.schedule("theta_a"),
        b_a0=section.number("b_a0", DEFAULT_Z_A0.b),
        k_a0=section.number("k_a0", DEFAULT_Z_A0.k),
    )
    section.finish()
    _require(
        automation.z_a0.is_nonnegative(),
        "automation.b_a0 >= 0 and automation.k_a0 >= 0",
    )
    return automation


def _parse_sweep(section: _Section) -> SweepSpec:
    where = section.where("values")
    values = section.raw("values", _MISSING)
    if not isinstance(values, list) or not all(
        isinstance(v, int | float) and not isinstance(v, bool) for v in values
    ):
        raise ScenarioParseError(where, "expected a list of numbers")
    sweep = SweepSpec(
        key=section.string("key", "controller.epsilon"),
        values=tuple(float(v) for v in values),
    )
    section.finish()
    return sweep


def parse_document(document: Mapping[str, Any], name: str) -> ScenarioConfig:
    """Build a validated scenario from an already decoded TOML document."""
    root = _Section(dict(document), "")
    name = root.string("name", name)
    duration = root.number("duration")
    plant = _parse_plant(root.section("plant"))
    controller = _parse_controller(root.section("controller"))
    human = _parse_human(root.section("human"))
    automation = _parse_automation(root.section("automation"))
    tau_v = root.schedule("tau_v", 0.0)
    mode_label = root.choice("mode_label", ModeLabel, ModeLabel.CUSTOM)
    seed = root.integer("seed", 0)
    dt = root.number("dt", DEFAULT_DT)
    sweep = None
    if "sweep" in root.data:
        sweep = _parse_sweep(root.section("sweep"))
    root.finish()

    _require(duration > 0, "duration > 0")
    _require(duration >= controller.ts, "duration >= controller.ts")
    _require(dt > 0, "dt > 0")
    ratio = controller.ts / dt
    _require(
        round(ratio) >= 1 and abs(ratio - round(ratio)) < 1e-9,
        "controller.ts is an integer multiple of dt",
    )
    return ScenarioConfig(
        name=name,
        duration=duration,
        plant=plant,
        controller=controller,
        human=human,
        automation=automation,
        tau_v=tau_v,
        mode_label=mode_label,
        seed=seed,
        dt=dt,
        sweep=sweep,
    )


def decode(text: str, location: str = "<scenario>") -> dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioParseError(location, str(e)) from e


def parse_scenario(text: str, name: str = "custom") -> ScenarioConfig:
    return parse_document(decode(text, name), name)


def _schedule_document(s: Schedule) -> float | dict[str, Any]:
    match s.kind:
        case ScheduleKind.CONSTANT:
            return s.points[0][1]
        case ScheduleKind.SINUSOID:
            return {
                "kind": s.kind.value,
                "amplitude": s.amplitude,
                "frequency": s.frequency,
                "offset": s.offset,
            }
    return {"kind": s.kind.value, "points": [list(p) for p in s.points]}


def scenario_document(cfg: ScenarioConfig) -> dict[str, Any]:
    controller = cfg.controller
    dynamics = controller.dynamics
    document = {
        "name": cfg.name,
        "duration": cfg.duration,
        "mode_label": cfg.mode_label.value,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "tau_v": _schedule_document(cfg.tau_v),
        "plant": {
            "j_sw": cfg.plant.j_sw,
            "j_h": cfg.plant.j_h,
            "j_a": cfg.plant.j_a,
            "b_sw": cfg.plant.b_sw,
        },
        "controller": {
            "ts": controller.ts,
            "np": controller.horizon,
            "epsilon": _schedule_document(controller.epsilon),
            "adaptive": controller.adaptive,
            "alpha_b": dynamics.alpha.b,
            "alpha_k": dynamics.alpha.k,
            "beta_b": dynamics.beta.b,
            "beta_k": dynamics.beta.k,
            "norm": controller.norm.value,
            "target": controller.target_policy.value,
            "clamp": controller.clamp.value,
            "horizon_theta": controller.horizon_theta.value,
            "hold_reference": controller.hold_reference,
            "resolve_clamped": controller.resolve_clamped,
        },
        "human": {
            "k_h": _schedule_document(cfg.human.k_h),
            "b_h": _schedule_document(cfg.human.b_h),
            "theta_h": _schedule_document(cfg.human.theta_h),
            "measurement_noise": cfg.human.measurement_noise,
        },
        "automation": {
            "theta_a": _schedule_document(cfg.automation.theta_a),
            "b_a0": cfg.automation.b_a0,
            "k_a0": cfg.automation.k_a0,
        },
    }
    if cfg.sweep is not None:
        document["sweep"] = {
            "key": cfg.sweep.key,
            "values": list(cfg.sweep.values),
        }
    return document


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(scenario_document(cfg))


def _override_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        # bare words such as `reachable` are taken as strings
        return raw


def parse_override(text: str) -> tuple[str, Any]:
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ScenarioParseError(
            text, "override must look like dotted.key=value",
        )
    return key, _override_value(raw.strip())


def apply_overrides(
        document: Mapping[str, Any],
        overrides: Mapping[str, Any],
) -> dict[str, Any]:
    """Return a copy of `document` with dotted-path values replaced."""
    result = copy.deepcopy(dict(document))
    for dotted, value in overrides.items():
        *parents, leaf = dotted.split(".")
        table = result
        for depth, part in enumerate(parents):
            table = table.setdefault(part, {})
            if not isinstance(table, dict):
                location = ".".join(parents[:depth + 1])
                raise ScenarioParseError(location, "not a table")
        table[leaf] = value
        logger.debug("Override %s = %r", dotted, value)
    return result


def _builtin_files() -> dict[str, Any]:
    return {
        entry.name.removesuffix(".toml"): entry
        for entry in resources.files(BUILTIN_PACKAGE).iterdir()
        if entry.name.endswith(".toml")
    }


def builtin_names() -> list[str]:
    return sorted(_builtin_files())


def load_document(source: str | Path) -> tuple[str, dict[str, Any]]:
    """
    Decode a scenario given as a built-in name or a file path.

    :return: default scenario name and the raw document
    """
    builtins = _builtin_files()
    if isinstance(source, str) and source in builtins:
        text = builtins[source].read_text(encoding="utf-8")
        return source, decode(text, source)
    path = Path(source)
    if not path.is_file():
        raise ScenarioParseError(
            str(source), "no such scenario file or built-in",
        )
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ScenarioParseError(
            str(path), f"not valid UTF-8 at byte {e.start}",
        ) from e
    return path.stem, decode(text, str(path))


def load_scenario(
        source: str | Path,
        overrides: Mapping[str, Any] | None = None,
) -> ScenarioConfig:
    name, document = load_document(source)
    if overrides:
        document = apply_overrides(document, overrides)
    return parse_document(document, name)


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    return {name: load_scenario(name) for name in builtin_names()}


def with_values(
        cfg: ScenarioConfig,
        overrides: Mapping[str, Any],
        rename: Callable[[str], str] | None = None,
) -> ScenarioConfig:
    """Re-validate `cfg` with dotted-path overrides applied."""
    document = apply_overrides(scenario_document(cfg), overrides)
    if rename is not None:
        document["name"] = rename(cfg.name)
    return parse_document(document, cfg.name)
