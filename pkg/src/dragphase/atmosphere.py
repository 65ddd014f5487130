"""Diurnal-free Harris-Priester atmospheric density.

The table holds minimum and maximum density per altitude node. One combined
column (``min``, ``max`` or ``geometric-mean``) is chosen at load time and
interpolated exponentially between nodes, i.e. linearly in log-density.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

MODES = ("min", "max", "geometric-mean")
_HEADER = ["h_km", "rho_min_kg_per_km3", "rho_max_kg_per_km3"]


class AltitudeRangeError(ValueError):
    """Altitude outside the tabulated range; no extrapolation is done."""

    def __init__(self, h, lo, hi):
        super().__init__(f"altitude {h!r} km outside atmosphere table range [{lo}, {hi}] km")
        self.h = h
        self.bounds = (lo, hi)


@dataclass(frozen=True, eq=False)
class HarrisPriesterTable:
    altitude: np.ndarray  # km, strictly increasing
    rho_min: np.ndarray  # kg/km³
    rho_max: np.ndarray  # kg/km³
    mode: str = "geometric-mean"
    source: str | None = None  # None -> packaged table

    def __post_init__(self):
        for name in ("altitude", "rho_min", "rho_max"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        h, lo, hi = self.altitude, self.rho_min, self.rho_max
        if self.mode not in MODES:
            raise ValueError(f"unknown density mode {self.mode!r}; expected one of {MODES}")
        if h.ndim != 1 or not (h.shape == lo.shape == hi.shape) or h.size < 2:
            raise ValueError("table needs at least two nodes with three columns each")
        if np.any(np.diff(h) <= 0):
            raise ValueError("table altitudes must be strictly increasing")
        if np.any(lo <= 0) or np.any(hi <= 0):
            raise ValueError("table densities must be positive")
        if np.any(lo > hi):
            raise ValueError("rho_min must not exceed rho_max at any node")
        if np.any(np.diff(lo) >= 0) or np.any(np.diff(hi) >= 0):
            raise ValueError("densities must strictly decrease with altitude")

    @property
    def nodes(self) -> list[tuple[float, float, float]]:
        return list(zip(self.altitude.tolist(), self.rho_min.tolist(), self.rho_max.tolist()))

    @property
    def h_min(self) -> float:
        return float(self.altitude[0])

    @property
    def h_max(self) -> float:
        return float(self.altitude[-1])

    @cached_property
    def log_rho(self) -> np.ndarray:
        """Log of the combined node density for the selected mode."""
        if self.mode == "min":
            out = np.log(self.rho_min)
        elif self.mode == "max":
            out = np.log(self.rho_max)
        else:
            out = 0.5 * (np.log(self.rho_min) + np.log(self.rho_max))
        out.setflags(write=False)
        return out

    @cached_property
    def log_slope(self) -> np.ndarray:
        """d(log ρ)/dh per bracket, 1/km (negative)."""
        out = np.diff(self.log_rho) / np.diff(self.altitude)
        out.setflags(write=False)
        return out

    def node_density(self) -> np.ndarray:
        return np.exp(self.log_rho)

    def __eq__(self, other):
        if not isinstance(other, HarrisPriesterTable):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.source == other.source
            and np.array_equal(self.altitude, other.altitude)
            and np.array_equal(self.rho_min, other.rho_min)
            and np.array_equal(self.rho_max, other.rho_max)
        )

    __hash__ = None

    def with_mode(self, mode: str) -> "HarrisPriesterTable":
        return HarrisPriesterTable(self.altitude, self.rho_min, self.rho_max, mode, self.source)


def load_table(path=None, mode: str = "geometric-mean") -> HarrisPriesterTable:
    """Read a ``h_km, rho_min_kg_per_km3, rho_max_kg_per_km3`` CSV (header required).

    ``path=None`` loads the packaged 100-1000 km table.
    """
    if path is None:
        ref = resources.files("dragphase").joinpath("data/harris_priester.csv")
        text = ref.read_text()
        source = None
    else:
        text = Path(path).read_text()
        source = str(path)
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != _HEADER:
        raise ValueError(f"atmosphere CSV header must be {','.join(_HEADER)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ValueError(f"atmosphere CSV line {lineno}: expected 3 columns")
        try:
            data.append([float(c) for c in row])
        except ValueError as exc:
            raise ValueError(f"atmosphere CSV line {lineno}: {exc}") from None
    arr = np.array(data, dtype=float).reshape(-1, 3)
    return HarrisPriesterTable(arr[:, 0], arr[:, 1], arr[:, 2], mode=mode, source=source)


def density(h, table: HarrisPriesterTable):
    """Density in kg/km³ at altitude ``h`` km (scalar or array)."""
    h_arr = np.asarray(h, dtype=float)
    lo, hi = table.h_min, table.h_max
    bad = ~((h_arr >= lo) & (h_arr <= hi))
    if np.any(bad):
        first = h_arr[bad].flat[0] if h_arr.ndim else float(h_arr)
        raise AltitudeRangeError(float(first), lo, hi)
    idx = np.searchsorted(table.altitude, h_arr, side="right") - 1
    idx = np.clip(idx, 0, table.altitude.size - 2)
    rho = np.exp(table.log_rho[idx] + (h_arr - table.altitude[idx]) * table.log_slope[idx])
    if np.ndim(h) == 0:
        return float(rho)
    return rho
