"""CSV output, provenance sidecars and input-state parsing."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict
from typing import Iterable, Sequence

import numpy as np

from .config import Tolerances
from .opalg import from_json_matrix, tensor

__version__ = "0.1.0"


def fmt(x) -> str:
    """17 significant digits so doubles survive a text round trip."""
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(float(x), ".17g")
    return str(x)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def inputs_hash(config: dict, files: Sequence[str] = ()) -> str:
    h = hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode())
    for path in files:
        with open(path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def write_artifact(path: str, text: str, config: dict, tol: Tolerances, seed: int,
                   files: Sequence[str] = ()) -> str:
    """Write ``text`` to ``path`` and its provenance to ``path + '.json'``."""
    with open(path, "w", newline="") as fh:
        fh.write(text)
    side = {
        "artifact": os.path.basename(path),
        "inputs_hash": inputs_hash(config, files),
        "version": __version__,
        "seed": seed,
        "tolerances": asdict(tol),
        "config": config,
    }
    with open(path + ".json", "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path + ".json"


_SITE = {
    "0": np.array([[1, 0], [0, 0]], dtype=complex),
    "1": np.array([[0, 0], [0, 1]], dtype=complex),
    "+": np.full((2, 2), 0.5, dtype=complex),
    "-": np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
    "m": np.eye(2, dtype=complex) / 2,
}


def parse_state(spec: str, dim: int) -> np.ndarray:
    """Density matrix from a site string over {0,1,+,-,m} (m = I/2) or a matrix JSON file."""
    if os.path.isfile(spec):
        with open(spec) as fh:
            rho, _ = from_json_matrix(json.load(fh))
    else:
        if not spec or any(c not in _SITE for c in spec):
            raise ValueError(f"input state {spec!r} is neither a file nor a string over 0,1,+,-,m")
        rho = tensor(*[_SITE[c] for c in spec])
    if rho.shape != (dim, dim):
        raise ValueError(f"input state has dimension {rho.shape[0]}, model needs {dim}")
    return rho


def parse_values(text: str) -> list[float]:
    """Comma list, or ``linspace:a:b:n`` / ``logspace:a:b:n`` with endpoints given directly."""
    if text.startswith(("linspace:", "logspace:")):
        kind, a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        if kind == "linspace":
            return [float(v) for v in np.linspace(a, b, n)]
        if a <= 0 or b <= 0:
            raise ValueError("logspace endpoints must be positive")
        return [float(v) for v in np.logspace(math.log10(a), math.log10(b), n)]
    return [float(v) for v in text.split(",") if v.strip()]
