"""Parameters of the random-matrix model: sizes, data law, the law nu of a^2 and the activation."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from ..activations import Activation, get_activation
from ..errors import ValidationError
from ..measures import DEFAULT_GRID_POINTS, SpectralMeasure


class XLaw(Enum):
    """Entry law of the data matrix X (unit variance)."""

    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"


@dataclass(frozen=True)
class NuSpec:
    """
    A named law for a^2: ``delta:v``, ``two_point:v1,v2,w`` (mass w on v1) or ``uniform:a,b``.
    """

    kind: str
    values: Tuple[float, ...]

    KINDS = {"delta": 1, "two_point": 3, "uniform": 2}

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"Unknown nu kind '{self.kind}', expected one of {sorted(self.KINDS)}")
        if len(self.values) != self.KINDS[self.kind]:
            raise ValidationError(f"nu '{self.kind}' takes {self.KINDS[self.kind]} values, got {len(self.values)}")
        if not all(np.isfinite(self.values)):
            raise ValidationError("nu parameters must be finite")
        if self.kind == "two_point":
            v1, v2, w = self.values
            if min(v1, v2) < 0:
                raise ValidationError("nu is the law of a^2 and needs nonnegative support")
            if not 0.0 <= w <= 1.0:
                raise ValidationError(f"two_point weight must lie in [0, 1], got {w}")
        elif self.kind == "uniform":
            a, b = self.values
            if a < 0 or not b > a:
                raise ValidationError(f"uniform nu needs 0 <= a < b, got [{a}, {b}]")
        elif self.values[0] < 0:
            raise ValidationError("nu is the law of a^2 and needs nonnegative support")

    @classmethod
    def parse(cls, spec: str) -> "NuSpec":
        kind, _, arg = spec.strip().partition(":")
        try:
            values = tuple(float(v) for v in arg.split(",")) if arg else ()
        except ValueError as e:
            raise ValidationError(f"Bad nu spec '{spec}'") from e
        return cls(kind=kind, values=values)

    @property
    def spec(self) -> str:
        return f"{self.kind}:" + ",".join(f"{v:g}" for v in self.values)

    def to_measure(self, grid_points: int = DEFAULT_GRID_POINTS) -> SpectralMeasure:
        if self.kind == "delta":
            return SpectralMeasure.delta(self.values[0])
        if self.kind == "two_point":
            v1, v2, w = self.values
            return SpectralMeasure.from_atoms([v1, v2], [w, 1.0 - w])
        return SpectralMeasure.uniform(self.values[0], self.values[1], grid_points)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """i.i.d. draws of a^2."""
        if self.kind == "delta":
            return np.full(size, self.values[0])
        if self.kind == "two_point":
            v1, v2, w = self.values
            return np.where(rng.random(size) < w, v1, v2)
        return rng.uniform(self.values[0], self.values[1], size)

    @property
    def mean(self) -> float:
        if self.kind == "delta":
            return self.values[0]
        if self.kind == "two_point":
            v1, v2, w = self.values
            return w * v1 + (1 - w) * v2
        return 0.5 * (self.values[0] + self.values[1])


@dataclass(frozen=True)
class ModelParams:
    """Sizes, laws and seed of one simulated model."""

    n: int
    d: int
    p: int
    nu: NuSpec
    activation: Activation
    x_law: XLaw = XLaw.GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "d", "p"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 2:
                raise ValidationError(f"{name} must be an integer of at least 2, got {value!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"Seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def gamma1(self) -> float:
        return self.n / (self.d * self.p)

    @property
    def gamma2(self) -> float:
        return self.p / self.d

    def with_seed(self, seed: int) -> "ModelParams":
        return ModelParams(self.n, self.d, self.p, self.nu, self.activation, self.x_law, seed)

    @classmethod
    def from_specs(
        cls, n: int, d: int, p: int, nu: str, activation: str, x_law: str = "gaussian", seed: int = 0
    ) -> "ModelParams":
        return cls(n, d, p, NuSpec.parse(nu), get_activation(activation), XLaw(x_law), seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "p": self.p,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "nu": self.nu.spec,
            "activation": self.activation.activation_id,
            "x_law": self.x_law.value,
            "seed": self.seed,
        }
