"""
Scenario Loader for kdv5-control

This module loads a scenario config (a single JSON document), validates it
against strict pydantic models and builds the grid, control profile, models
and field data a run needs. Validation failures are reported with the line of
the offending key in the JSON text.
"""

import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from kdv5_control.control.profile import ControlProfile, make_profile, make_uniform_profile
from kdv5_control.errors import ConfigError
from kdv5_control.evolution.linear import LinearModel
from kdv5_control.evolution.nonlinear import KDV5_COEFFICIENTS, NonlinearModel
from kdv5_control.spectral.grid import PeriodicGrid, SpectralField

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "stabilize", "control", "observability", "verify")


class StrictModel(BaseModel):
    """Base for all config sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class GridConfig(StrictModel):
    n_modes: int = Field(..., ge=1, le=512, description="Number of retained modes K")
    n_points: Optional[int] = Field(None, ge=3, description="Collocation points N (default: power of two > 4K)")


class CoefficientsConfig(StrictModel):
    c0: float = KDV5_COEFFICIENTS[0]
    c1: float = KDV5_COEFFICIENTS[1]
    c2: float = KDV5_COEFFICIENTS[2]
    c3: float = KDV5_COEFFICIENTS[3]


class ModelConfig(StrictModel):
    epsilon: float = Field(0.0, ge=0.0, description="Regularization eps D^{2l+1}")
    beta0: float = 0.0
    beta1: float = 0.0
    order_l: int = Field(2, ge=2, le=6)
    coefficients: CoefficientsConfig = Field(default_factory=CoefficientsConfig)
    hierarchy_term: bool = False
    feedback_on: bool = True
    small_data_radius: float = Field(1e-2, gt=0.0)


class ProfileConfig(StrictModel):
    kind: Literal["bump", "uniform"] = "bump"
    center: float = math.pi
    radius: float = Field(math.pi / 2, gt=0.0, lt=math.pi, description="Half-width of the bump, in (0, pi)")


class RunConfig(StrictModel):
    command: Literal["simulate", "stabilize", "control", "observability", "verify"]
    T: float = Field(1.0, gt=0.0, le=100.0)
    dt: float = Field(1e-3, gt=0.0)
    s: float = Field(2.5, ge=0.0)
    tol: float = Field(1e-10, gt=0.0)
    seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1, le=256)
    control_mode: Literal["linear", "nonlinear"] = "nonlinear"
    weighted: bool = False
    method: Literal["auto", "cholesky", "cg"] = "auto"
    relaxation: float = Field(1.0, gt=0.0, le=1.0)
    max_iterations: int = Field(30, ge=1)
    delta: float = Field(1e-2, gt=0.0)

    @field_validator("dt")
    @classmethod
    def dt_divides_T(cls, value: float, info: ValidationInfo) -> float:
        T = info.data.get("T")
        if T is not None:
            steps = round(T / value)
            if steps < 1 or abs(steps * value - T) > 1e-9 * max(T, 1.0):
                raise ValueError(f"dt={value} must divide T={T}")
        return value


class ModesField(StrictModel):
    """u(x) = mean + sum_k cos[k] cos(kx) + sin[k] sin(kx)."""

    kind: Literal["modes"]
    mean: float = 0.0
    cos: Dict[int, float] = Field(default_factory=dict)
    sin: Dict[int, float] = Field(default_factory=dict)

    @field_validator("cos", "sin")
    @classmethod
    def positive_modes(cls, value: Dict[int, float]) -> Dict[int, float]:
        for k in value:
            if k < 1:
                raise ValueError(f"mode numbers must be >= 1, got {k}")
        return value


class RandomField(StrictModel):
    """Mean-zero field with uniform random cos/sin amplitudes on modes 1..max_mode."""

    kind: Literal["random"]
    amplitude: float = Field(..., ge=0.0)
    max_mode: int = Field(..., ge=1)


class ZeroField(StrictModel):
    kind: Literal["zero"]


class CoefficientField(StrictModel):
    """Explicit coefficients u_hat(k) for k = -K..K."""

    kind: Literal["coefficients"]
    real: List[float]
    imag: Optional[List[float]] = None


FieldConfig = Annotated[
    Union[ModesField, RandomField, ZeroField, CoefficientField], Field(discriminator="kind")
]


class OutputConfig(StrictModel):
    directory: str = "out"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    physical_samples: bool = False
    norm_orders: List[float] = Field(default_factory=lambda: [0.0, 2.5])
    stride: int = Field(1, ge=1, description="Write every stride-th time node to trajectory files")


class VerifyConfig(StrictModel):
    horizons: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    radii: List[float] = Field(default_factory=lambda: [math.pi / 2, math.pi / 4, math.pi / 8])
    amplitude: float = Field(1e-3, gt=0.0)


class ScenarioConfig(StrictModel):
    grid: GridConfig
    model: ModelConfig = Field(default_factory=ModelConfig)
    profile: ProfileConfig = Field(default_factory=ProfileConfig)
    run: RunConfig
    initial_data: Optional[FieldConfig] = None
    target_data: Optional[FieldConfig] = None
    output: OutputConfig = Field(default_factory=OutputConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)


def _line_of(text: str, loc: Tuple) -> int:
    """Line of the innermost key of ``loc`` found in the JSON text (1-based)."""
    position = 0
    for part in loc:
        if not isinstance(part, str):
            continue
        match = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, position)
        if match:
            position = match.start()
    return text.count("\n", 0, position) + 1


def _format_loc(loc: Tuple) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def _semantic_errors(config: ScenarioConfig) -> List[Tuple[Tuple, str]]:
    """Checks that need more than one section."""
    errors: List[Tuple[Tuple, str]] = []
    K = config.grid.n_modes
    if config.grid.n_points is not None and config.grid.n_points < 2 * K + 1:
        errors.append((("grid", "n_points"), f"must be at least 2*n_modes+1 = {2 * K + 1}"))
    for name in ("initial_data", "target_data"):
        data = getattr(config, name)
        if isinstance(data, ModesField):
            for family in ("cos", "sin"):
                for k in getattr(data, family):
                    if k > K:
                        errors.append(((name, family), f"mode {k} exceeds grid.n_modes={K}"))
        elif isinstance(data, RandomField) and data.max_mode > K:
            errors.append(((name, "max_mode"), f"{data.max_mode} exceeds grid.n_modes={K}"))
        elif isinstance(data, CoefficientField):
            if len(data.real) != 2 * K + 1:
                errors.append(((name, "real"), f"expected {2 * K + 1} coefficients, got {len(data.real)}"))
            if data.imag is not None and len(data.imag) != len(data.real):
                errors.append(((name, "imag"), "must have the same length as real"))
    dt = config.run.dt
    for horizon in config.verify.horizons:
        steps = round(horizon / dt)
        if horizon <= 0 or steps < 1 or abs(steps * dt - horizon) > 1e-9 * max(horizon, 1.0):
            errors.append((("verify", "horizons"), f"horizon {horizon} is not a positive multiple of dt={dt}"))
    for radius in config.verify.radii:
        if not 0.0 < radius < math.pi:
            errors.append((("verify", "radii"), f"radius {radius} must lie in (0, pi)"))
    if config.run.command == "control" and config.target_data is None:
        errors.append((("run", "command"), "control runs need target_data"))
    return errors


@dataclass(frozen=True)
class Scenario:
    """A validated scenario with its source text and canonical hash."""

    config: ScenarioConfig
    path: str
    config_hash: str

    @property
    def command(self) -> str:
        return self.config.run.command


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_scenario(text: str, path: str = "<config>") -> Scenario:
    """Validate scenario JSON text; raises ConfigError with file:line messages."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        message = f"{path}:{e.lineno}: invalid JSON: {e.msg}"
        raise ConfigError(message, [message])
    try:
        config = ScenarioConfig.model_validate(raw)
    except ValidationError as e:
        messages = [
            f"{path}:{_line_of(text, error['loc'])}: {_format_loc(error['loc'])}: {error['msg']}"
            for error in e.errors()
        ]
        raise ConfigError(f"{len(messages)} configuration error(s) in {path}", messages)
    semantic = _semantic_errors(config)
    if semantic:
        messages = [f"{path}:{_line_of(text, loc)}: {_format_loc(loc)}: {msg}" for loc, msg in semantic]
        raise ConfigError(f"{len(messages)} configuration error(s) in {path}", messages)
    return Scenario(config=config, path=path, config_hash=config_hash(config))


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        message = f"{path}: cannot read config: {e.strerror or e}"
        raise ConfigError(message, [message])
    scenario = parse_scenario(text, str(path))
    logger.info(f"Loaded scenario {path} (command={scenario.command}, sha256={scenario.config_hash[:12]})")
    return scenario


def build_grid(config: ScenarioConfig) -> PeriodicGrid:
    return PeriodicGrid(config.grid.n_modes, config.grid.n_points)


def build_profile(config: ScenarioConfig, grid: PeriodicGrid) -> ControlProfile:
    if config.profile.kind == "uniform":
        return make_uniform_profile(grid)
    return make_profile(grid, config.profile.center, config.profile.radius)


def build_linear_model(
    config: ScenarioConfig, profile: ControlProfile, feedback_on: Optional[bool] = None
) -> LinearModel:
    model = config.model
    return LinearModel(
        profile=profile,
        epsilon=model.epsilon,
        beta0=model.beta0,
        beta1=model.beta1,
        order_l=model.order_l,
        feedback_on=model.feedback_on if feedback_on is None else feedback_on,
    )


def build_nonlinear_model(config: ScenarioConfig, linear: LinearModel) -> NonlinearModel:
    c = config.model.coefficients
    return NonlinearModel(
        linear=linear,
        coefficients=(c.c0, c.c1, c.c2, c.c3),
        hierarchy_term=config.model.hierarchy_term,
        small_data_radius=config.model.small_data_radius,
    )


def build_field(data: Optional[FieldConfig], grid: PeriodicGrid, rng: np.random.Generator) -> SpectralField:
    """Field data of a scenario; ``None`` means the zero field."""
    if data is None or isinstance(data, ZeroField):
        return SpectralField.zeros(grid)
    if isinstance(data, ModesField):
        modes: Dict[int, complex] = {0: data.mean}
        for k, a in data.cos.items():
            modes[k] = modes.get(k, 0.0) + 0.5 * a
            modes[-k] = modes.get(-k, 0.0) + 0.5 * a
        for k, b in data.sin.items():
            modes[k] = modes.get(k, 0.0) - 0.5j * b
            modes[-k] = modes.get(-k, 0.0) + 0.5j * b
        return SpectralField.from_modes(grid, modes)
    if isinstance(data, RandomField):
        a = rng.uniform(-1.0, 1.0, data.max_mode)
        b = rng.uniform(-1.0, 1.0, data.max_mode)
        modes = {}
        for k in range(1, data.max_mode + 1):
            modes[k] = 0.5 * data.amplitude * (a[k - 1] - 1j * b[k - 1])
            modes[-k] = np.conj(modes[k])
        return SpectralField.from_modes(grid, modes)
    imag = data.imag if data.imag is not None else [0.0] * len(data.real)
    field = SpectralField(grid, np.asarray(data.real) + 1j * np.asarray(imag))
    if not field.is_real:
        raise ConfigError(
            "explicit coefficients must be conjugate symmetric",
            [f"coefficients: conjugate symmetry defect {field.conjugate_symmetry_defect:.3e}"],
        )
    return field


def config_schema() -> dict:
    """JSON schema of the scenario config."""
    return ScenarioConfig.model_json_schema()

