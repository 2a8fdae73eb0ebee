"""Experiment report and its artifact bundle."""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..errors import ValidationError
from ..measures import SpectralMeasure, measure_from_dict, measure_to_dict, save_measure_csv
from ..stats import histogram_frame

SCHEMA_VERSION = 1

REPORT_FILE = "report.json"
THEORY_FILE = "theory.csv"
DIAGNOSTICS_FILE = "theory_diagnostics.json"


@dataclass
class ExperimentReport:
    """Everything one experiment produced; CSV artifacts are written alongside."""

    experiment: Dict[str, Any]
    gamma1: float
    gamma2: float
    activation_stats: Dict[str, float]
    theory: Optional[SpectralMeasure] = None
    theory_summary: Dict[str, Any] = field(default_factory=dict)
    metrics: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    gaps: List[Dict[str, float]] = field(default_factory=list)
    gap_masses: Dict[str, List[float]] = field(default_factory=dict)
    invariants: Dict[str, bool] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def disconnected_support(self) -> bool:
        return len(self.gaps) > 0

    @property
    def passed(self) -> bool:
        return all(self.invariants.values())

    @property
    def failed_invariants(self) -> List[str]:
        return [name for name, ok in self.invariants.items() if not ok]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["theory"] = measure_to_dict(self.theory) if self.theory is not None else None
        data["disconnected_support"] = self.disconnected_support
        data["passed"] = self.passed
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentReport":
        data = dict(data)
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(f"Unsupported report schema version {version}")
        data.pop("disconnected_support", None)
        data.pop("passed", None)
        if data.get("theory") is not None:
            data["theory"] = measure_from_dict(data["theory"])
        return cls(**data)


def load_report(path: Union[str, Path]) -> ExperimentReport:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    with open(path, "r") as f:
        return ExperimentReport.from_dict(json.load(f))


def esd_frame(spectra: Dict[int, np.ndarray]) -> pd.DataFrame:
    """Long-format ``seed,eigenvalue`` table, seeds in ascending order."""
    frames = [pd.DataFrame({"seed": seed, "eigenvalue": np.sort(spectra[seed])}) for seed in sorted(spectra)]
    if not frames:
        return pd.DataFrame({"seed": pd.Series(dtype=int), "eigenvalue": pd.Series(dtype=float)})
    return pd.concat(frames, ignore_index=True)


def write_theory(theory: SpectralMeasure, diagnostics: Dict[str, Any], output_dir: Union[str, Path]) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / THEORY_FILE
    save_measure_csv(theory, path)
    with open(output_dir / DIAGNOSTICS_FILE, "w") as f:
        json.dump(diagnostics, f, indent=2, sort_keys=True, default=str)
    return path


def write_spectra(kernel: str, spectra: Dict[int, np.ndarray], output_dir: Union[str, Path]) -> List[Path]:
    """``esd_<kernel>.csv`` and ``histogram_<kernel>.csv`` (Freedman-Diaconis over pooled values)."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    esd_path = output_dir / f"esd_{kernel}.csv"
    esd_frame(spectra).to_csv(esd_path, index=False, float_format="%.17g")
    paths = [esd_path]
    if spectra:
        pooled = np.concatenate([spectra[seed] for seed in sorted(spectra)])
        hist_path = output_dir / f"histogram_{kernel}.csv"
        histogram_frame(pooled).to_csv(hist_path, index=False, float_format="%.17g")
        paths.append(hist_path)
    return paths


def write_report(report: ExperimentReport, output_dir: Union[str, Path]) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / REPORT_FILE
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, default=str)
    return path
