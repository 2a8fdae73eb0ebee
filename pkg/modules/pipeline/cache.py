"""Optional on-disk cache of theory measures, keyed by a hash of their inputs."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from ..errors import ValidationError
from ..measures import SpectralMeasure, load_measure_json, save_measure_json

logger = logging.getLogger(__name__)

CACHE_ENV = "NTK_SPECTRA_CACHE"


def cache_key(inputs: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of ``inputs``."""
    canonical = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class MeasureCache:
    """SpectralMeasure JSON files in one directory; a cache without a directory stores nothing."""

    def __init__(self, directory: Optional[Union[str, Path]] = None):
        self.directory = Path(directory) if directory else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_env(cls) -> "MeasureCache":
        return cls(os.environ.get(CACHE_ENV) or None)

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path_for(self, key: str) -> Optional[Path]:
        return self.directory / f"{key}.json" if self.directory is not None else None

    def get(self, key: str) -> Optional[SpectralMeasure]:
        path = self.path_for(key)
        if path is None or not path.exists():
            return None
        try:
            return load_measure_json(path)
        except (ValidationError, ValueError, OSError) as e:
            logger.warning("Ignoring unreadable cache entry %s: %s", path, e)
            return None

    def put(self, key: str, measure: SpectralMeasure):
        path = self.path_for(key)
        if path is not None:
            save_measure_json(measure, path)

    def get_or_compute(self, inputs: Dict[str, Any], compute: Callable[[], SpectralMeasure]) -> SpectralMeasure:
        key = cache_key(inputs)
        cached = self.get(key)
        if cached is not None:
            logger.debug("Cache hit %s", key)
            return cached
        measure = compute()
        self.put(key, measure)
        return measure
