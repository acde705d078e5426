"""Dataset ingestion (CSV) and reproducible synthetic stand-ins."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .igarch import simulate_igarch


class DataFormatError(ValueError):
    pass


@dataclass
class Dataset:
    y: np.ndarray
    x: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.y)


_SCHEMAS = {"xy": 2, "y": 1}


def load_series_csv(path, schema: str = "xy") -> Dataset:
    """Read a comma-separated file with one (``y``) or two (``xy``) numeric columns.

    A non-numeric first row is treated as a header.
    """
    if schema not in _SCHEMAS:
        raise ValueError(f"unknown schema {schema!r}; expected one of {sorted(_SCHEMAS)}")
    ncol = _SCHEMAS[schema]
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise DataFormatError(
                    f"{path}:{lineno}: expected {ncol} column(s), found {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                bad = next(i for i, c in enumerate(row) if not _is_float(c))
                raise DataFormatError(
                    f"{path}:{lineno}: column {bad + 1} is not numeric: {row[bad]!r}") from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        r, c = np.argwhere(~np.isfinite(arr))[0]
        raise DataFormatError(f"{path}: non-finite value in data row {r + 1}, column {c + 1}")
    if ncol == 1:
        return Dataset(y=arr[:, 0])
    return Dataset(x=arr[:, 0], y=arr[:, 1])


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def synth_lidar(seed: int = 0, n: int = 221, noise_sd: float = 0.1) -> Dataset:
    """Smooth sigmoid-shaped drop over ranges 390..720 plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    x = np.linspace(390.0, 720.0, n)
    f = -0.05 - 0.75 / (1.0 + np.exp(-(x - 600.0) / 20.0))
    return Dataset(x=x, y=f + noise_sd * rng.standard_normal(n))


def synth_igarch(seed: int = 0, n: int = 2000, theta=(0.02, 0.1)) -> Dataset:
    rng = np.random.default_rng(seed)
    return Dataset(y=simulate_igarch(theta, n, rng))


def synth_fallback(kind: str, seed: int = 0, **kwargs) -> Dataset:
    if kind == "lidar":
        return synth_lidar(seed, **kwargs)
    if kind == "igarch":
        return synth_igarch(seed, **kwargs)
    raise ValueError(f"unknown synthetic dataset kind {kind!r}")
