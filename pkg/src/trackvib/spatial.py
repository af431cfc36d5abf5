"""From the time domain to the distance domain.

build_distance_axis turns a speed profile into a per-sample position along
the track; resample_to_space interpolates any synchronous record onto a
uniform distance grid (0.25 m by default, the usual recording-car step).
Stretches where the vehicle is practically standing still produce no usable
spatial information and are flagged invalid instead of being interpolated
away silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShortError
from .timeseries import TimeSeries

DEFAULT_GRID_SPACING_M = 0.25
STATIONARY_SPEED_MPS = 0.5
STATIONARY_MIN_DURATION_S = 1.0


@dataclass(frozen=True)
class DistanceAxis:
    """Position along the track for every time sample."""

    positions_m: np.ndarray
    origin_m: float

    def __post_init__(self):
        pos = np.asarray(self.positions_m, dtype=np.float64)
        if pos.ndim != 1 or pos.size == 0:
            raise ValueError("positions_m must be a non-empty 1-D array")
        if np.any(np.diff(pos) < 0):
            raise ValueError("positions_m must be non-decreasing")
        object.__setattr__(self, "positions_m", pos)

    def __len__(self) -> int:
        return self.positions_m.size


@dataclass(frozen=True)
class SpatialSeries:
    """Values on a uniform distance grid: value i sits at start_m + i*spacing."""

    values: np.ndarray
    spacing_m: float
    start_m: float
    channel_id: str = ""
    units: str = ""
    valid: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-D array")
        if not self.spacing_m > 0:
            raise ValueError(f"spacing_m must be > 0, got {self.spacing_m}")
        valid = self.valid
        if valid is None:
            valid = np.ones(values.size, dtype=bool)
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != values.shape:
                raise ValueError("valid mask must match values length")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return self.values.size

    def positions(self) -> np.ndarray:
        return self.start_m + self.spacing_m * np.arange(self.values.size)


def build_distance_axis(speed, x0_m: float = 0.0) -> DistanceAxis:
    """Cumulative position: x[n] = x0 + sum_{k<=n} v[k] * dt.

    Rejects negative speeds; zero speed holds the position constant.
    """
    v = np.asarray(speed.speeds_mps, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("speeds must be non-negative")
    positions = x0_m + np.cumsum(v) / speed.sample_rate_hz
    return DistanceAxis(positions, x0_m)


def _bool_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, end) index ranges of consecutive True values."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def _stationary_runs(positions: np.ndarray, fs: float) -> list[tuple[int, int]]:
    """Sample ranges where speed stays below 0.5 m/s for more than 1 s."""
    v = np.empty_like(positions)
    v[1:] = np.diff(positions) * fs
    v[0] = v[1] if v.size > 1 else 0.0
    return [(s, e) for s, e in _bool_runs(v < STATIONARY_SPEED_MPS)
            if (e - s) > STATIONARY_MIN_DURATION_S * fs]


def resample_to_space(ts: TimeSeries, axis: DistanceAxis,
                      spacing_m: float = DEFAULT_GRID_SPACING_M) -> SpatialSeries:
    """Linear interpolation of a time series onto a uniform distance grid.

    The grid runs from ceil(min/spacing)*spacing to floor(max/spacing)*spacing,
    so sample count = floor(span/spacing) + 1 up to grid snapping. Grid points
    bracketed by stationary samples are flagged invalid.
    """
    if not spacing_m > 0:
        raise ValueError(f"spacing_m must be > 0, got {spacing_m}")
    if len(ts) != len(axis):
        raise ValueError("time series and distance axis must have equal length")
    pos = axis.positions_m
    span = pos[-1] - pos[0]
    if span < spacing_m:
        raise TooShortError(f"track span {span:.3f} m shorter than one grid "
                            f"step of {spacing_m} m")
    start = np.ceil(pos[0] / spacing_m - 1e-9) * spacing_m
    stop = np.floor(pos[-1] / spacing_m + 1e-9) * spacing_m
    count = int(round((stop - start) / spacing_m)) + 1
    grid = start + spacing_m * np.arange(count)
    values = np.interp(grid, pos, ts.samples)

    valid = np.ones(count, dtype=bool)
    for s, e in _stationary_runs(pos, ts.sample_rate_hz):
        lo = int(np.ceil((pos[s] - start) / spacing_m - 1e-9))
        hi = int(np.floor((pos[e - 1] - start) / spacing_m + 1e-9))
        if hi >= lo:
            valid[max(lo, 0):min(hi, count - 1) + 1] = False
    units = "m" if ts.kind == "displacement" else "m/s^2"
    return SpatialSeries(values, spacing_m, float(start), ts.channel_id, units, valid)
