"""JSON and CSV serialization of SpectralMeasure."""

import io
import json
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import ValidationError
from .measure import Grid, SpectralMeasure

PathLike = Union[str, Path]


def measure_to_dict(mu: SpectralMeasure) -> Dict[str, Any]:
    """``{"atoms": [[x, m], ...], "grid": {"start", "step", "n"}, "density": [...]}``"""
    return {
        "atoms": [[x, m] for x, m in mu.atoms],
        "grid": mu.grid.to_dict(),
        "density": [float(v) for v in mu.density],
    }


def measure_from_dict(data: Dict[str, Any]) -> SpectralMeasure:
    try:
        atoms = np.asarray(data.get("atoms", []), dtype=float).reshape(-1, 2)
        grid = Grid.from_dict(data["grid"])
        density = np.asarray(data.get("density", []), dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed measure JSON: {e}") from e
    return SpectralMeasure(atoms[:, 0], atoms[:, 1], grid, density)


def save_measure_json(mu: SpectralMeasure, path: PathLike):
    with open(path, "w") as f:
        json.dump(measure_to_dict(mu), f)


def load_measure_json(path: PathLike) -> SpectralMeasure:
    with open(path, "r") as f:
        return measure_from_dict(json.load(f))


def measure_to_frames(mu: SpectralMeasure) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Density table ``x,density`` and atom table ``atom_x,atom_mass``."""
    density_df = pd.DataFrame({"x": mu.grid.points, "density": mu.density})
    atoms_df = pd.DataFrame({"atom_x": mu.atom_locations, "atom_mass": mu.atom_masses})
    return density_df, atoms_df


def save_measure_csv(mu: SpectralMeasure, path: PathLike):
    """Write the density block, a blank line, then the atom block."""
    density_df, atoms_df = measure_to_frames(mu)
    with open(path, "w", newline="") as f:
        density_df.to_csv(f, index=False, float_format="%.17g")
        f.write("\n")
        atoms_df.to_csv(f, index=False, float_format="%.17g")


def load_measure_csv(path: PathLike) -> SpectralMeasure:
    text = Path(path).read_text()
    blocks = [block for block in text.split("\n\n") if block.strip()]
    if len(blocks) != 2:
        raise ValidationError(f"{path}: expected a density block and an atom block")
    density_df = pd.read_csv(io.StringIO(blocks[0]))
    atoms_df = pd.read_csv(io.StringIO(blocks[1]))

    xs = density_df["x"].to_numpy(dtype=float)
    if xs.size >= 2:
        grid = Grid(start=float(xs[0]), step=float((xs[-1] - xs[0]) / (xs.size - 1)), n=xs.size)
    else:
        grid = Grid.empty()
    return SpectralMeasure(
        atoms_df["atom_x"].to_numpy(dtype=float),
        atoms_df["atom_mass"].to_numpy(dtype=float),
        grid,
        density_df["density"].to_numpy(dtype=float)[: grid.n],
    )
