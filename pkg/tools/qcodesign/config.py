"""Run configuration: per-scenario defaults, JSON parsing and validation."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar

from .encoding import EncodingSettings
from .errors import ParseError, ValidationError
from .lyapunov import StabilitySpec
from .surrogate import SurrogateSettings

SCENARIOS = ("consensus1", "consensus2", "motor")

PARAMETER_NAMES: Dict[str, Tuple[str, ...]] = {
    "consensus1": ("alpha", "beta", "k", "theta2", "theta4"),
    "consensus2": ("kp", "kd", "theta_x2", "theta_v2", "theta_x4"),
    "motor": ("k_psi", "k_omega", "theta_psi", "theta_omega"),
}

MOTOR_ERROR_COMPONENTS = 3


@dataclass(frozen=True)
class ConsensusPlantConfig:
    n_agents: int = 5
    x0: Tuple[float, ...] = (2.0, -2.5, 3.8, -3.2, 0.3)
    v0: Optional[Tuple[float, ...]] = None
    drag_a: float = 0.5
    drag_b: float = 0.05


@dataclass(frozen=True)
class MotorPlantConfig:
    Rs: float = 2.3
    Rr: float = 2.5
    Ls: float = 0.25
    Lr: float = 0.25
    Lm: float = 0.24
    J: float = 0.003
    pole_pairs: int = 2
    Lm_plant: float = 0.12
    x0: Tuple[float, ...] = (0.0, 0.0, 0.9, 0.0, 0.0)
    flux_ref: float = 0.9
    psi_floor: float = 0.05
    speed_times: Tuple[float, ...] = (0.0, 0.8, 1.4, 2.0, 2.2)
    speed_values: Tuple[float, ...] = (0.0, 100.0, 100.0, 50.0, 50.0)
    load_time: float = 0.5
    load_torque: float = 1.0


@dataclass(frozen=True)
class SearchConfig:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]


@dataclass(frozen=True)
class TimingConfig:
    redesign_interval: float
    t_max: float
    horizon: float
    n_grid: int
    rtol: float = 1e-6
    atol: float = 1e-8


@dataclass(frozen=True)
class WeightsConfig:
    perf_error: Tuple[float, ...]
    control: float
    lyapunov: float = 1.0
    eps_margin: float = 1e-6
    constraint: float = 1.0


@dataclass(frozen=True)
class BlackHoleConfig:
    population: int = 20
    max_iters: int = 100
    freeze_thresholds: Tuple[float, ...] = (5.0,)


@dataclass(frozen=True)
class QiteConfig:
    tau: float = 3.0
    steps: int = 60
    reps: int = 2
    ridge: float = 1e-6
    init_scale: float = 0.1
    top_k: int = 32


@dataclass(frozen=True)
class RedesignConfig:
    mode: str = "periodic"


@dataclass(frozen=True)
class StoppingConfig:
    threshold: Optional[float] = None


@dataclass(frozen=True)
class BaselineConfig:
    design: Tuple[float, ...]


@dataclass(frozen=True)
class OutputConfig:
    energy_trace: bool = False


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    seed: int
    threads: Optional[int]
    output_dir: str
    plant: Any
    search: SearchConfig
    timing: TimingConfig
    weights: WeightsConfig
    stability: StabilitySpec
    blackhole: BlackHoleConfig
    encoding: EncodingSettings
    surrogate: SurrogateSettings
    qite: QiteConfig
    redesign: RedesignConfig
    stopping: StoppingConfig
    baseline: BaselineConfig
    output: OutputConfig

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return PARAMETER_NAMES[self.scenario]


SECTION_TYPES: Dict[str, Type[Any]] = {
    "search": SearchConfig,
    "timing": TimingConfig,
    "weights": WeightsConfig,
    "stability": StabilitySpec,
    "blackhole": BlackHoleConfig,
    "encoding": EncodingSettings,
    "surrogate": SurrogateSettings,
    "qite": QiteConfig,
    "redesign": RedesignConfig,
    "stopping": StoppingConfig,
    "baseline": BaselineConfig,
    "output": OutputConfig,
}

TOP_LEVEL_KEYS = ("scenario", "seed", "threads", "output_dir", "plant", *SECTION_TYPES)


def _plant_type(scenario: str) -> Type[Any]:
    return MotorPlantConfig if scenario == "motor" else ConsensusPlantConfig


SCENARIO_DEFAULTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "consensus1": {
        "plant": {},
        "search": {"lower": (0.0, 0.0, 0.0, 0.0, 0.0), "upper": (50.0, 2.0, 50.0, 25.0, 25.0)},
        "timing": {"redesign_interval": 0.25, "t_max": 10.0, "horizon": 0.25, "n_grid": 150},
        "weights": {"perf_error": (1.0,), "control": 0.1},
        "blackhole": {"freeze_thresholds": (5.0,)},
        "encoding": {"mode": "adaptive"},
        "qite": {"tau": 3.0},
        "stopping": {"threshold": 1e-8},
        "baseline": {"design": (2.0, 1.0, 5.0, 1.0, 1.0)},
    },
    "consensus2": {
        "plant": {"x0": (5.0, -4.0, 3.0, -2.0, 1.0), "v0": (0.0, 1.5, -1.0, 0.5, -0.5)},
        "search": {"lower": (0.0, 0.0, 0.0, 0.0, 0.0), "upper": (50.0, 50.0, 50.0, 40.0, 20.0)},
        "timing": {"redesign_interval": 0.5, "t_max": 50.0, "horizon": 0.25, "n_grid": 150},
        "weights": {"perf_error": (1.0,), "control": 0.1},
        "blackhole": {"freeze_thresholds": (5.0,)},
        "encoding": {"mode": "adaptive"},
        "qite": {"tau": 3.0},
        "stopping": {"threshold": 1e-4},
        "baseline": {"design": (5.0, 5.0, 1.0, 1.0, 1.0)},
    },
    "motor": {
        "plant": {},
        "search": {"lower": (-100.0, -100.0, 0.01, 0.01), "upper": (1000.0, 1000.0, 100.0, 100.0)},
        "timing": {"redesign_interval": 0.2, "t_max": 2.2, "horizon": 0.1, "n_grid": 120},
        "weights": {"perf_error": (2.0, 10.0, 10.0), "control": 1e-4},
        "blackhole": {"freeze_thresholds": (25.0,)},
        "encoding": {"mode": "fixed", "fixed_bits": 3},
        "qite": {"tau": 2.0},
        "stopping": {"threshold": None},
        "baseline": {"design": (100.0, 100.0, 1.0, 1.0)},
    },
}


T = TypeVar("T")


def _tupled(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build_section(cls: Type[T], data: Any, key: str, base: Optional[Mapping[str, Any]] = None) -> T:
    if not isinstance(data, Mapping):
        raise ValidationError(key, "expected an object")
    known = {f.name for f in fields(cls)}
    for name in data:
        if name not in known:
            raise ValidationError(f"{key}.{name}", "unknown key")
    merged = dict(base or {})
    merged.update({name: _tupled(value) for name, value in data.items()})
    try:
        return cls(**merged)
    except TypeError as exc:
        raise ValidationError(key, f"missing or malformed entries ({exc})") from exc
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from exc


def default_config(scenario: str = "consensus1") -> RunConfig:
    if scenario not in SCENARIOS:
        raise ValidationError("scenario", f"unknown scenario '{scenario}' (expected one of {', '.join(SCENARIOS)})")
    return config_from_dict({"scenario": scenario})


def config_from_dict(data: Mapping[str, Any], scenario: Optional[str] = None) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ValidationError("<root>", "expected an object")
    for name in data:
        if name not in TOP_LEVEL_KEYS:
            raise ValidationError(name, "unknown key")
    scenario = scenario or data.get("scenario", "consensus1")
    if scenario not in SCENARIOS:
        raise ValidationError("scenario", f"unknown scenario '{scenario}' (expected one of {', '.join(SCENARIOS)})")
    profile = SCENARIO_DEFAULTS[scenario]

    sections: Dict[str, Any] = {
        "plant": _build_section(_plant_type(scenario), data.get("plant", {}), "plant", profile["plant"]),
    }
    for name, cls in SECTION_TYPES.items():
        sections[name] = _build_section(cls, data.get(name, {}), name, profile.get(name))

    seed = data.get("seed", 0)
    threads = data.get("threads")
    output_dir = data.get("output_dir", "out")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError("seed", "must be a non-negative integer")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ValidationError("threads", "must be a positive integer or null")
    if not isinstance(output_dir, str):
        raise ValidationError("output_dir", "must be a string")

    cfg = RunConfig(scenario=scenario, seed=seed, threads=threads, output_dir=output_dir, **sections)
    try:
        validate(cfg)
    except TypeError as exc:
        raise ValidationError("<config>", f"malformed value ({exc})") from exc
    return cfg


def _positive(value: Any, key: str) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ValidationError(key, f"must be positive, got {value!r}")


def error_component_count(cfg: RunConfig) -> int:
    if cfg.scenario == "motor":
        return MOTOR_ERROR_COMPONENTS
    n_agents = cfg.plant.n_agents
    return 2 * n_agents if cfg.scenario == "consensus2" else n_agents


def validate(cfg: RunConfig) -> None:
    n_params = len(cfg.parameter_names)
    t = cfg.timing
    for name in ("redesign_interval", "t_max", "horizon", "rtol", "atol"):
        _positive(getattr(t, name), f"timing.{name}")
    if not isinstance(t.n_grid, int) or t.n_grid < 2:
        raise ValidationError("timing.n_grid", "must be an integer >= 2")

    if len(cfg.search.lower) != n_params or len(cfg.search.upper) != n_params:
        raise ValidationError("search", f"needs {n_params} bounds for {', '.join(cfg.parameter_names)}")
    if any(lo > hi for lo, hi in zip(cfg.search.lower, cfg.search.upper)):
        raise ValidationError("search", "lower bound exceeds upper bound")
    if len(cfg.baseline.design) != n_params:
        raise ValidationError("baseline.design", f"needs {n_params} entries")
    if len(cfg.blackhole.freeze_thresholds) not in (1, n_params):
        raise ValidationError("blackhole.freeze_thresholds", f"needs 1 or {n_params} entries")
    n_errors = error_component_count(cfg)
    if len(cfg.weights.perf_error) not in (1, n_errors):
        raise ValidationError("weights.perf_error", f"needs 1 or {n_errors} entries")
    for name in ("control", "lyapunov", "constraint"):
        if getattr(cfg.weights, name) < 0:
            raise ValidationError(f"weights.{name}", "must be non-negative")
    if any(w < 0 for w in cfg.weights.perf_error):
        raise ValidationError("weights.perf_error", "must be non-negative")
    _positive(cfg.weights.eps_margin, "weights.eps_margin")

    bh = cfg.blackhole
    if bh.population < 2:
        raise ValidationError("blackhole.population", "must be at least 2")
    if bh.max_iters < 0:
        raise ValidationError("blackhole.max_iters", "must be non-negative")
    if any(d <= 0 for d in bh.freeze_thresholds):
        raise ValidationError("blackhole.freeze_thresholds", "must be positive")

    q = cfg.qite
    _positive(q.tau, "qite.tau")
    _positive(q.ridge, "qite.ridge")
    if q.steps < 1:
        raise ValidationError("qite.steps", "must be at least 1")
    if q.reps < 0:
        raise ValidationError("qite.reps", "must be non-negative")
    if q.top_k < 1:
        raise ValidationError("qite.top_k", "must be at least 1")

    if cfg.redesign.mode == "conditional":
        raise ValidationError("redesign.mode", "conditional redesign is reserved and not implemented")
    if cfg.redesign.mode != "periodic":
        raise ValidationError("redesign.mode", f"unknown mode '{cfg.redesign.mode}'")
    if cfg.stopping.threshold is not None and cfg.stopping.threshold < 0:
        raise ValidationError("stopping.threshold", "must be non-negative or null")

    plant = cfg.plant
    if isinstance(plant, ConsensusPlantConfig):
        if plant.n_agents < 3:
            raise ValidationError("plant.n_agents", "ring needs at least 3 agents")
        if len(plant.x0) != plant.n_agents:
            raise ValidationError("plant.x0", f"needs {plant.n_agents} entries")
        if cfg.scenario == "consensus2" and (plant.v0 is None or len(plant.v0) != plant.n_agents):
            raise ValidationError("plant.v0", f"needs {plant.n_agents} entries")
        if cfg.scenario == "consensus1" and plant.v0 is not None:
            raise ValidationError("plant.v0", "first-order agents carry no velocity")
    else:
        if len(plant.x0) != 5:
            raise ValidationError("plant.x0", "needs 5 entries")
        for name in ("Rs", "Rr", "Ls", "Lr", "Lm", "J", "Lm_plant"):
            _positive(getattr(plant, name), f"plant.{name}")
        if not plant.Ls - plant.Lm ** 2 / plant.Lr > 0 or not plant.Ls - plant.Lm_plant ** 2 / plant.Lr > 0:
            raise ValidationError("plant.Lm", "leakage inductance Ls - Lm^2/Lr must be positive")
        if not plant.flux_ref > plant.psi_floor > 0:
            raise ValidationError("plant.psi_floor", "needs flux_ref > psi_floor > 0")
        if len(plant.speed_times) != len(plant.speed_values) or len(plant.speed_times) < 2:
            raise ValidationError("plant.speed_times", "needs as many breakpoints as speed_values (>= 2)")
        if any(b <= a for a, b in zip(plant.speed_times, plant.speed_times[1:])):
            raise ValidationError("plant.speed_times", "must be strictly increasing")


def parse_config(path: Optional[os.PathLike], scenario: Optional[str] = None) -> RunConfig:
    """Reads a JSON run configuration; an empty file means all defaults."""
    if path is None:
        return config_from_dict({}, scenario)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config '{path}': {exc}") from exc
    if not text.strip():
        data: Any = {}
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(data, scenario)


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    return asdict(cfg)


def with_overrides(cfg: RunConfig, **overrides: Any) -> RunConfig:
    """Applies non-None top-level overrides (CLI flags) and revalidates."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return cfg
    updated = replace(cfg, **changes)
    validate(updated)
    return updated


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=False)

