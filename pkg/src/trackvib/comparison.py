"""Windowed comparison of an estimated alignment against a reference one.

Works on the per-window summary values (windowed_max output), never on raw
samples: recording-car data and on-board estimates are not phase-accurate at
sample level, but their exceedance statistics over 100 m / 20 m windows are
comparable after co-registration to within an integer number of windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (InsufficientDataError, NoOverlapError,
                     UndefinedCorrelationError)
from .geometry import WindowedStats

MIN_COMMON_WINDOWS = 3


@dataclass(frozen=True)
class ComparisonReport:
    """Agreement metrics between matched window values."""

    pearson_r: float
    slope: float
    intercept: float
    n_windows: int
    window_starts_m: np.ndarray
    estimated: np.ndarray
    reference: np.ndarray
    residuals: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "slope": self.slope,
            "intercept": self.intercept,
            "n_windows": self.n_windows,
            "metadata": dict(self.metadata),
            "per_window": [
                {"window_start_m": float(s), "estimated": float(e),
                 "reference": float(r), "residual": float(d)}
                for s, e, r, d in zip(self.window_starts_m, self.estimated,
                                      self.reference, self.residuals)
            ],
        }


def _matched_pairs(est: WindowedStats, ref: WindowedStats):
    """Indices of windows with identical start positions, both usable."""
    tol = 1e-6 * max(1.0, est.window_m)
    i = j = 0
    ei, ri = [], []
    while i < len(est) and j < len(ref):
        d = est.starts_m[i] - ref.starts_m[j]
        if abs(d) <= tol:
            if est.usable[i] and ref.usable[j]:
                ei.append(i)
                ri.append(j)
            i += 1
            j += 1
        elif d < 0:
            i += 1
        else:
            j += 1
    return np.asarray(ei, dtype=int), np.asarray(ri, dtype=int)


def correlate(est: WindowedStats, ref: WindowedStats,
              metadata: dict | None = None) -> ComparisonReport:
    """Pearson r plus least-squares slope/intercept of est against ref.

    Pairs windows by identical start position, drops pairs where either side
    is unusable, and requires at least 3 surviving pairs. The fitted line is
    estimated = slope * reference + intercept; residuals are per-window
    deviations from it.
    """
    if est.window_m != ref.window_m:
        raise ValueError(f"window lengths differ: {est.window_m} vs {ref.window_m}")
    phase = (est.starts_m[0] - ref.starts_m[0]) / est.window_m
    if abs(phase - round(phase)) > 1e-6:
        raise ValueError("window sequences are not aligned to the same grid")
    ei, ri = _matched_pairs(est, ref)
    if ei.size == 0:
        raise NoOverlapError("window sequences do not overlap")
    if ei.size < MIN_COMMON_WINDOWS:
        raise InsufficientDataError(f"only {ei.size} common valid windows, "
                                    f"need {MIN_COMMON_WINDOWS}")
    e = est.values[ei]
    r = ref.values[ri]
    if np.std(e) == 0.0 or np.std(r) == 0.0:
        raise UndefinedCorrelationError("zero variance on one side, "
                                        "correlation undefined")
    pearson = float(np.corrcoef(e, r)[0, 1])
    slope, intercept = np.polyfit(r, e, 1)
    residuals = e - (slope * r + intercept)
    return ComparisonReport(pearson, float(slope), float(intercept), ei.size,
                            est.starts_m[ei].copy(), e.copy(), r.copy(),
                            residuals, metadata or {})


def coregister(est: WindowedStats, ref: WindowedStats,
               max_shift_m: float = 0.0):
    """Shift est by an integer number of windows to best match ref.

    Tries every shift k with |k * window_m| <= max_shift_m, keeps the one
    maximizing the Pearson r of the matched pairs (ties go to the smallest
    |shift|), and returns (est_shifted, ref, applied_shift_m). k = 0 is always
    a candidate, so co-registration never worsens an already valid alignment.
    """
    if est.window_m != ref.window_m:
        raise ValueError(f"window lengths differ: {est.window_m} vs {ref.window_m}")
    if max_shift_m < 0:
        raise ValueError("max_shift_m must be >= 0")
    k_max = int(np.floor(max_shift_m / est.window_m + 1e-9))
    best = None
    degenerate = False
    for k in sorted(range(-k_max, k_max + 1), key=lambda k: (abs(k), k)):
        shifted = replace(est, starts_m=est.starts_m + k * est.window_m)
        ei, ri = _matched_pairs(shifted, ref)
        if ei.size < MIN_COMMON_WINDOWS:
            continue
        e, r = shifted.values[ei], ref.values[ri]
        if np.std(e) == 0.0 or np.std(r) == 0.0:
            degenerate = True
            continue
        score = float(np.corrcoef(e, r)[0, 1])
        # 1e-9 guard so float jitter cannot beat the smallest-|shift| rule
        if best is None or score > best[0] + 1e-9:
            best = (score, k, shifted)
    if best is None:
        if degenerate:
            raise UndefinedCorrelationError(
                "window values have zero variance, correlation undefined")
        raise NoOverlapError(f"no shift within +/-{max_shift_m} m leaves "
                             f"{MIN_COMMON_WINDOWS} comparable windows")
    _, k, shifted = best
    return shifted, ref, k * est.window_m
