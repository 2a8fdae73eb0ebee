"""Binary dump of a TensorQ: one JSON header line, then the matrix as row-major little-endian float64."""

import json
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import ValidationError
from .covariance import TensorQ

DTYPE = "<f8"


def save_tensor(tensor: TensorQ, path: Union[str, Path]) -> Path:
    """Write ``tensor`` to ``path``; the header also carries W and D so the file round-trips."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = tensor.header()
    header.update(
        {
            "dtype": DTYPE,
            "order": "row-major",
            "W": tensor.W.tolist(),
            "D": tensor.D.tolist() if tensor.D is not None else None,
            "mu4": tensor.mu4,
        }
    )
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode("utf-8") + b"\n")
        f.write(np.ascontiguousarray(tensor.flat, dtype=DTYPE).tobytes())
    return path


def load_tensor(path: Union[str, Path]) -> TensorQ:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        payload = f.read()

    d, p = int(header["d"]), int(header["p"])
    expected = (d * p) ** 2 * np.dtype(DTYPE).itemsize
    if len(payload) != expected:
        raise ValidationError(f"Tensor file {path} holds {len(payload)} bytes, expected {expected}")
    flat = np.frombuffer(payload, dtype=DTYPE).reshape(d * p, d * p).astype(float)
    D = np.asarray(header["D"], dtype=float) if header.get("D") is not None else None
    return TensorQ(
        d=d,
        p=p,
        alpha=float(header["alpha"]),
        beta=float(header["beta"]),
        flat=flat,
        W=np.asarray(header["W"], dtype=float),
        D=D,
        mu4=header.get("mu4"),
    )
