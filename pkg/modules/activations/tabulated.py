"""User activations supplied as a table of (x, phi(x)) samples."""

from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import ValidationError
from .base import Activation


class TabulatedActivation(Activation):
    """
    Piecewise-linear phi through tabulated points, constant beyond the table ends.

    The optional ``sigma`` column gives the activation itself for the
    conjugate kernel, interpolated the same way.
    """

    def __init__(self, x: np.ndarray, phi_values: np.ndarray, sigma_values: Optional[np.ndarray] = None, name="table"):
        x = np.asarray(x, dtype=float)
        phi_values = np.asarray(phi_values, dtype=float)
        if x.ndim != 1 or x.size < 2 or x.shape != phi_values.shape:
            raise ValidationError("Activation table needs at least two (x, phi) rows")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("Activation table x column must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(phi_values))):
            raise ValidationError("Activation table contains non-finite values")
        if sigma_values is not None:
            sigma_values = np.asarray(sigma_values, dtype=float)
            if sigma_values.shape != x.shape:
                raise ValidationError("Activation table sigma column has the wrong length")
        self.x = x
        self.phi_values = phi_values
        self.sigma_values = sigma_values
        self.name = name

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TabulatedActivation":
        """Load a CSV with columns ``x`` and ``phi`` (and optionally ``sigma``)."""
        try:
            df = pd.read_csv(path)
        except (OSError, pd.errors.ParserError) as e:
            raise ValidationError(f"Cannot read activation table {path}: {e}") from e
        missing = {"x", "phi"} - set(df.columns)
        if missing:
            raise ValidationError(f"Activation table {path} lacks columns: {sorted(missing)}")
        df = df.sort_values("x")
        sigma = df["sigma"].to_numpy(dtype=float) if "sigma" in df.columns else None
        return cls(df["x"].to_numpy(dtype=float), df["phi"].to_numpy(dtype=float), sigma, name=f"table:{path}")

    @property
    def activation_id(self) -> str:
        return self.name

    @property
    def display_name(self) -> str:
        return f"Tabulated ({self.x.size} points)"

    def phi(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.x, self.phi_values)

    def sigma(self, x: np.ndarray) -> np.ndarray:
        if self.sigma_values is None:
            return super().sigma(x)
        return np.interp(x, self.x, self.sigma_values)

    @property
    def has_sigma(self) -> bool:
        return self.sigma_values is not None

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in self.x)
