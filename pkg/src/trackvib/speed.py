"""Speed over ground from two displacement signals a wheelbase apart.

The rear sensor sees the same track as the front one, delayed by
wheelbase / speed. The delay is found per evaluation window as the argmax of
the windowed cross correlation between the two displacement records, refined
to sub-sample resolution with a parabolic fit, converted to speed and cleaned
with a median filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .errors import AlignmentFailedError, NoValidSpeedError
from .timeseries import TimeSeries

DEFAULT_WINDOW_SAMPLES = 960          # 3.75 s at 256 Hz
DEFAULT_DELAY_BOUNDS_S = (0.0625, 2.5)  # wheelbase 2.5 m at 40 .. 1 m/s
DEFAULT_QUALITY_THRESHOLD = 0.3
DEFAULT_SPEED_BOUNDS = (1.0, 40.0)


@dataclass(frozen=True)
class DelayEstimate:
    """Per-sample delay between the front and back sensor.

    delays_s/peak_quality/valid all have one entry per input sample. Samples
    whose evaluation window had no usable correlation peak carry bridged
    delay values and valid=False (all-NaN if no window was usable at all).
    """

    delays_s: np.ndarray
    peak_quality: np.ndarray
    valid: np.ndarray
    window_samples: int
    sample_rate_hz: float
    bounds_s: tuple[float, float]


@dataclass(frozen=True)
class SpeedProfile:
    """Per-sample speed over ground; valid=False marks interpolated samples."""

    speeds_mps: np.ndarray
    sample_rate_hz: float
    wheelbase_m: float
    valid: np.ndarray


def estimate_delay(front: TimeSeries, back: TimeSeries,
                   window_samples: int = DEFAULT_WINDOW_SAMPLES,
                   delay_bounds_s: tuple[float, float] = DEFAULT_DELAY_BOUNDS_S,
                   quality_threshold: float = DEFAULT_QUALITY_THRESHOLD,
                   stride: int | None = None) -> DelayEstimate:
    """Windowed cross-correlation delay of back relative to front.

    Windows of ``window_samples`` are evaluated every ``stride`` samples
    (default window/4) and the per-window delays are linearly interpolated to
    every sample. A window is invalid when its normalized correlation peak is
    below ``quality_threshold`` or sits on the edge of the searched lag range
    (the true delay then lies outside ``delay_bounds_s``). Negative bounds are
    allowed; swapping front and back mirrors the searched interval.
    """
    if front.sample_rate_hz != back.sample_rate_hz:
        raise ValueError("front and back must share the sample rate")
    if len(front) != len(back):
        raise ValueError("front and back must have equal length")
    n = len(front)
    fs = front.sample_rate_hz
    if not 2 <= window_samples <= n:
        raise ValueError(f"window_samples {window_samples} not in [2, {n}]")
    t_min, t_max = delay_bounds_s
    if not t_min < t_max:
        raise ValueError("delay bounds must satisfy min < max")
    lag_lo = int(np.ceil(t_min * fs))
    lag_hi = int(np.floor(t_max * fs))
    if lag_lo > lag_hi:
        raise ValueError("delay bounds contain no integer sample lag")

    half = window_samples // 2
    if stride is None:
        stride = max(1, window_samples // 4)
    n_lo = half + max(-lag_lo, 0)
    n_hi = n - half - max(lag_hi, 0)   # inclusive
    if n_hi < n_lo:
        need = window_samples + max(lag_hi, 0) + max(-lag_lo, 0)
        raise ValueError(f"records of {n} samples too short for window + lag "
                         f"range (need at least {need})")
    centers = np.arange(n_lo, n_hi + 1, stride)

    x = front.samples
    y = back.samples
    c_delay = np.zeros(centers.size)
    c_quality = np.zeros(centers.size)
    c_valid = np.zeros(centers.size, dtype=bool)
    for i, c in enumerate(centers):
        fw = x[c - half:c - half + window_samples]
        bs = y[c - half + lag_lo:c - half + window_samples + lag_hi]
        corr = np.correlate(bs, fw, mode="valid")
        j = int(np.argmax(corr))
        lag = lag_lo + j
        bw = y[c - half + lag:c - half + lag + window_samples]
        denom = np.linalg.norm(fw) * np.linalg.norm(bw)
        quality = float(corr[j] / denom) if denom > 0 else 0.0
        quality = min(max(quality, 0.0), 1.0)
        c_quality[i] = quality
        on_edge = j == 0 or j == corr.size - 1
        if on_edge or quality < quality_threshold:
            c_delay[i] = lag / fs
            continue
        cm, c0, cp = corr[j - 1], corr[j], corr[j + 1]
        curv = cm - 2.0 * c0 + cp
        offset = 0.5 * (cm - cp) / curv if curv != 0.0 else 0.0
        c_delay[i] = float(np.clip((lag + offset) / fs, t_min, t_max))
        c_valid[i] = True

    sample_idx = np.arange(n)
    quality_s = np.interp(sample_idx, centers, c_quality)
    if c_valid.any():
        good = centers[c_valid]
        delays_s = np.interp(sample_idx, good, c_delay[c_valid])
        # a sample is valid when every center it leans on is valid
        right = np.searchsorted(centers, sample_idx)
        left = np.clip(right - 1, 0, centers.size - 1)
        right = np.clip(right, 0, centers.size - 1)
        valid_s = c_valid[left] & c_valid[right]
    else:
        delays_s = np.full(n, np.nan)
        valid_s = np.zeros(n, dtype=bool)
    return DelayEstimate(delays_s, quality_s, valid_s, window_samples, fs,
                         (t_min, t_max))


def estimate_speed(delays: DelayEstimate, wheelbase_m: float,
                   speed_bounds: tuple[float, float] = DEFAULT_SPEED_BOUNDS,
                   median_window_s: float = 1.0) -> SpeedProfile:
    """Convert delays to speed = wheelbase / delay, fill gaps, median filter.

    Samples with an invalid delay or a speed outside ``speed_bounds`` are
    filled by linear interpolation from the nearest valid neighbors and left
    flagged (valid=False). Raises NoValidSpeedError when nothing is valid.
    """
    if not wheelbase_m > 0:
        raise ValueError(f"wheelbase_m must be > 0, got {wheelbase_m}")
    s_min, s_max = speed_bounds
    d = delays.delays_s
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = np.where(d > 0, wheelbase_m / d, np.nan)
    valid = delays.valid & np.isfinite(raw) & (raw >= s_min) & (raw <= s_max)
    if not valid.any():
        raise NoValidSpeedError("no delay sample yielded a speed within bounds")
    idx = np.flatnonzero(valid)
    speeds = np.interp(np.arange(d.size), idx, raw[idx])
    k = int(round(median_window_s * delays.sample_rate_hz))
    if k > 1:
        speeds = ndimage.median_filter(speeds, size=k | 1, mode="nearest")
    return SpeedProfile(speeds, delays.sample_rate_hz, wheelbase_m, valid)


def _speed_on_grid(speeds: np.ndarray, fs: float, spacing: float):
    """Resample a time-domain speed onto a uniform distance grid (start, values)."""
    pos = np.cumsum(speeds) / fs
    start = np.ceil(pos[0] / spacing - 1e-9) * spacing
    stop = np.floor(pos[-1] / spacing + 1e-9) * spacing
    count = int(round((stop - start) / spacing)) + 1
    if count < 2:
        raise AlignmentFailedError("speed profile covers less than one grid step")
    grid = start + spacing * np.arange(count)
    return start, np.interp(grid, pos, speeds)


def align_to_reference(estimated: SpeedProfile, reference,
                       grid_spacing_m: float = 0.25,
                       quality_threshold: float = 0.5) -> float:
    """Distance origin x0 that best aligns the estimated speed-vs-distance
    curve with a reference one.

    ``reference`` is either a SpatialSeries of speed vs distance or another
    SpeedProfile (integrated to distance first). Returns x0 such that
    estimated position + x0 matches the reference chainage; raises
    AlignmentFailedError when no correlation peak reaches the threshold.
    """
    est_start, est_v = _speed_on_grid(estimated.speeds_mps,
                                      estimated.sample_rate_hz, grid_spacing_m)
    if isinstance(reference, SpeedProfile):
        ref_start, ref_v = _speed_on_grid(reference.speeds_mps,
                                          reference.sample_rate_hz, grid_spacing_m)
        spacing = grid_spacing_m
    else:  # SpatialSeries-shaped: values on a uniform grid
        ref_start = reference.start_m
        ref_v = np.asarray(reference.values, dtype=float)
        spacing = reference.spacing_m
        if abs(spacing - grid_spacing_m) > 1e-12:
            est_start, est_v = _speed_on_grid(estimated.speeds_mps,
                                              estimated.sample_rate_hz, spacing)

    ev = est_v - est_v.mean()
    rv = ref_v - ref_v.mean()
    se, sr = ev.std(), rv.std()
    if se == 0.0 or sr == 0.0:
        raise AlignmentFailedError("flat speed profile, alignment undefined")
    min_pts = max(8, min(ev.size, rv.size) // 4)
    # full['k'] pairs est[i] with ref[i + k - (Ne-1)]
    full = signal.correlate(rv, ev, mode="full")
    counts = np.minimum.reduce([
        np.arange(1, full.size + 1),
        np.arange(full.size, 0, -1),
        np.full(full.size, min(ev.size, rv.size)),
    ])
    score = np.where(counts >= min_pts, full / counts, -np.inf)
    if not np.isfinite(score).any():
        raise AlignmentFailedError("profiles too short to overlap")
    best = int(np.argmax(score))
    k = best - (ev.size - 1)

    # exact Pearson r on the winning overlap for the accept/reject decision
    i0 = max(0, -k)
    j0 = max(0, k)
    m = min(ev.size - i0, rv.size - j0)
    if m < 2:
        raise AlignmentFailedError("winning shift leaves no usable overlap")
    a = est_v[i0:i0 + m]
    b = ref_v[j0:j0 + m]
    if a.std() == 0.0 or b.std() == 0.0:
        raise AlignmentFailedError("flat overlap, alignment undefined")
    r = float(np.corrcoef(a, b)[0, 1])
    if not np.isfinite(r) or r < quality_threshold:
        raise AlignmentFailedError(f"best alignment correlation {r:.3f} below "
                                   f"threshold {quality_threshold}")
    return float((ref_start - est_start) + k * spacing)
