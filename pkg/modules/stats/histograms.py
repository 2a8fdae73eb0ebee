"""Histogram tables of eigenvalue samples"""

from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ValidationError

HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "count", "density"]


def freedman_diaconis_edges(values: Sequence[float], max_bins: int = 2000) -> np.ndarray:
    """
    Freedman-Diaconis bin edges, falling back to Sturges when the IQR vanishes.

    Args:
        values: Pooled eigenvalues
        max_bins: Upper limit on the number of bins

    Returns:
        Monotone array of edges
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValidationError("Cannot bin an empty sample")
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.array([lo - 0.5, hi + 0.5])

    iqr = float(np.subtract(*np.percentile(values, [75, 25])))
    if iqr <= 0:
        return np.histogram_bin_edges(values, bins="sturges")
    width = 2.0 * iqr / np.cbrt(values.size)
    bins = int(min(max_bins, max(1, np.ceil((hi - lo) / width))))
    return np.linspace(lo, hi, bins + 1)


def histogram_frame(values: Sequence[float], edges: Optional[Union[np.ndarray, int]] = None) -> pd.DataFrame:
    """Table ``bin_left,bin_right,count,density`` with density normalized to unit area."""
    values = np.asarray(values, dtype=float)
    if edges is None:
        edges = freedman_diaconis_edges(values)
    counts, edges = np.histogram(values, bins=edges)
    widths = np.diff(edges)
    density = counts / (values.size * widths)
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts, "density": density})
