"""Experiment configuration system."""

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from ..activations import get_activation
from ..errors import ValidationError
from ..free import FreeApproxConfig, MpMapConfig
from ..measures import DEFAULT_GRID_POINTS
from ..simulation import KernelKind, ModelParams, NuSpec, XLaw

logger = logging.getLogger(__name__)

ROUTES = ("auto", "special", "general")
CONFIG_SUFFIXES = (".yaml", ".yml", ".json")


def _check_type(owner: str, name: str, value: Any, expected) -> Any:
    """Strict type check; bools are not accepted as numbers and ints are accepted as floats."""
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) and expected is not bool:
        raise ValidationError(f"{owner}.{name} must be {expected.__name__}, got a boolean")
    if not isinstance(value, expected):
        raise ValidationError(f"{owner}.{name} must be {expected.__name__}, got {type(value).__name__}")
    return value


def _reject_unknown(owner: str, data: Dict[str, Any], known):
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValidationError(f"Unknown {owner} keys: {', '.join(unknown)}")


@dataclass
class TheoryConfig:
    """Numerical settings of the theory computation."""

    grid_points: int = DEFAULT_GRID_POINTS
    eta: Optional[float] = None
    tolerance: float = 1e-10
    max_iters: int = 500
    damping: float = 0.5
    route: str = "auto"
    free_dim: int = 64
    free_replicas: int = 8
    free_strategy: str = "auto"
    free_grid_points: int = 1024

    _TYPES = {
        "grid_points": int,
        "eta": float,
        "tolerance": float,
        "max_iters": int,
        "damping": float,
        "route": str,
        "free_dim": int,
        "free_replicas": int,
        "free_strategy": str,
        "free_grid_points": int,
    }

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValidationError(f"theory.route must be one of {ROUTES}, got '{self.route}'")
        # delegate numeric validation to the solver configs
        self.mp_config()
        self.free_config()

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "TheoryConfig":
        data = dict(data or {})
        _reject_unknown("theory", data, cls._TYPES)
        for key, value in list(data.items()):
            if value is not None:
                data[key] = _check_type("theory", key, value, cls._TYPES[key])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def mp_config(self) -> MpMapConfig:
        return MpMapConfig(
            eta=self.eta,
            grid_points=self.grid_points,
            tolerance=self.tolerance,
            max_iters=self.max_iters,
            damping=self.damping,
        )

    def free_config(self, seed: int = 0) -> FreeApproxConfig:
        return FreeApproxConfig(
            dim=self.free_dim,
            replicas=self.free_replicas,
            strategy=self.free_strategy,
            grid_points=self.free_grid_points,
            seed=seed,
        )


@dataclass
class ExperimentConfig:
    """Configuration for a single experiment."""

    # Identity
    id: str
    n: int
    d: int
    p: int
    nu: str
    activation: str
    description: str = ""

    # Simulation
    x_law: XLaw = XLaw.GAUSSIAN
    kernels: List[KernelKind] = field(default_factory=lambda: [KernelKind.K])
    seeds: List[int] = field(default_factory=list)
    output_dir: str = "results"

    # Theory
    theory: TheoryConfig = field(default_factory=TheoryConfig)

    # Resources
    jobs: int = 1
    dp_cap: int = 6000
    n_cap: int = 4000
    quadrature_order: int = 200

    # Metadata
    tags: List[str] = field(default_factory=list)

    _SCALARS = {
        "id": str,
        "n": int,
        "d": int,
        "p": int,
        "nu": str,
        "activation": str,
        "description": str,
        "output_dir": str,
        "jobs": int,
        "dp_cap": int,
        "n_cap": int,
        "quadrature_order": int,
    }

    def __post_init__(self):
        for name in ("n", "d", "p"):
            if getattr(self, name) < 2:
                raise ValidationError(f"{name} must be at least 2, got {getattr(self, name)}")
        if self.jobs < 1:
            raise ValidationError(f"jobs must be at least 1, got {self.jobs}")
        if not self.id:
            raise ValidationError("Experiment id must not be empty")
        NuSpec.parse(self.nu)
        get_activation(self.activation)

    @property
    def gamma1(self) -> float:
        return self.n / (self.d * self.p)

    @property
    def gamma2(self) -> float:
        return self.p / self.d

    @property
    def nu_spec(self) -> NuSpec:
        return NuSpec.parse(self.nu)

    def model_params(self, seed: int = 0) -> ModelParams:
        return ModelParams(self.n, self.d, self.p, self.nu_spec, get_activation(self.activation), self.x_law, seed)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Create config from dictionary; unknown keys and wrong types are rejected."""
        if not isinstance(data, dict):
            raise ValidationError(f"Experiment config must be a mapping, got {type(data).__name__}")
        data = dict(data)
        known = set(cls._SCALARS) | {"x_law", "kernels", "seeds", "theory", "tags"}
        _reject_unknown("experiment", data, known)
        for key in ("id", "n", "d", "p", "nu", "activation"):
            if key not in data:
                raise ValidationError(f"Experiment config is missing '{key}'")

        for key, expected in cls._SCALARS.items():
            if key in data:
                data[key] = _check_type("experiment", key, data[key], expected)

        # Convert enum strings
        try:
            if "x_law" in data:
                data["x_law"] = XLaw(data["x_law"])
            if "kernels" in data:
                data["kernels"] = [KernelKind(k) for k in _as_list("kernels", data["kernels"])]
        except ValueError as e:
            raise ValidationError(f"Bad enum value in experiment config: {e}") from e

        if "seeds" in data:
            data["seeds"] = [_check_type("experiment", "seeds[]", s, int) for s in _as_list("seeds", data["seeds"])]
        if "tags" in data:
            data["tags"] = [_check_type("experiment", "tags[]", t, str) for t in _as_list("tags", data["tags"])]
        data["theory"] = TheoryConfig.from_dict(data.get("theory"))
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, XLaw):
                result[f.name] = value.value
            elif f.name == "kernels":
                result[f.name] = [k.value for k in value]
            elif isinstance(value, TheoryConfig):
                result[f.name] = value.to_dict()
            else:
                result[f.name] = value
        return result

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """
        Copy with fields replaced; ``gamma2`` sets p = round(gamma2 d) and
        ``gamma1`` sets n = round(gamma1 d p), applied after n, d, p.
        ``grid`` and ``eta`` go to the theory section.
        """
        data = self.to_dict()
        theory = data["theory"]
        gamma1 = overrides.pop("gamma1", None)
        gamma2 = overrides.pop("gamma2", None)
        if overrides.get("grid") is not None:
            theory["grid_points"] = overrides.pop("grid")
        if overrides.get("eta") is not None:
            theory["eta"] = overrides.pop("eta")
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        if gamma2 is not None:
            data["p"] = max(2, int(round(gamma2 * data["d"])))
        if gamma1 is not None:
            data["n"] = max(2, int(round(gamma1 * data["d"] * data["p"])))
        return ExperimentConfig.from_dict(data)


def _as_list(name: str, value: Any) -> List[Any]:
    if not isinstance(value, list):
        raise ValidationError(f"experiment.{name} must be a list")
    return value


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load one experiment config; YAML and JSON both parse through yaml.safe_load."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ValidationError(f"Cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ValidationError(f"Config {path} is not valid YAML/JSON: {e}") from e
    return ExperimentConfig.from_dict(data)


def save_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    """Write a config as JSON or YAML depending on the suffix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        if path.suffix == ".json":
            json.dump(config.to_dict(), f, indent=2)
        else:
            yaml.safe_dump(config.to_dict(), f, default_flow_style=False, sort_keys=False)
    return path


class ExperimentConfigManager:
    """Manages experiment configurations from YAML/JSON files."""

    def __init__(self, config_dir: str = "config/experiments"):
        self.config_dir = Path(config_dir)
        self._experiments: Dict[str, ExperimentConfig] = {}
        self._load_configs()

    def _load_configs(self):
        """Load all config files from the config directory."""
        self._experiments.clear()
        if not self.config_dir.is_dir():
            return
        for config_file in sorted(self.config_dir.iterdir()):
            if config_file.suffix not in CONFIG_SUFFIXES:
                continue
            try:
                config = load_config(config_file)
                self._experiments[config.id] = config
            except ValidationError as e:
                logger.warning("Skipping %s: %s", config_file, e)

    def get_experiment(self, experiment_id: str) -> Optional[ExperimentConfig]:
        return self._experiments.get(experiment_id)

    def list_experiments(self) -> List[ExperimentConfig]:
        return list(self._experiments.values())

    def get_experiments_by_tag(self, tag: str) -> List[ExperimentConfig]:
        return [c for c in self._experiments.values() if tag in c.tags]

    def save_experiment(self, config: ExperimentConfig):
        save_config(config, self.config_dir / f"{config.id}.yaml")
        self._experiments[config.id] = config


def scaffold(experiment_id: str = "example") -> ExperimentConfig:
    """A small runnable config: linear activation, nu = delta_1, two seeds."""
    return ExperimentConfig(
        id=experiment_id,
        description="Linear activation with nu = delta_1",
        n=600,
        d=30,
        p=24,
        nu="delta:1",
        activation="identity",
        kernels=[KernelKind.K],
        seeds=[0, 1],
        output_dir=f"results/{experiment_id}",
        theory=TheoryConfig(grid_points=2048),
        tags=["example"],
    )
