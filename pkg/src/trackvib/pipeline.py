"""End-to-end processing: record blocks in, track geometry out.

Stage order: merge -> decimate to the working rate -> double integration
(cutoff from the chord unless overridden) -> speed from front/back cross
correlation (or an external speed) -> distance axis -> spatial resampling ->
chord alignment -> windowed maxima. The front sensor's displacement is the
geometry estimate; the back one exists for the speed estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MissingChannelError
from .fileio import TRC_SPACING_M, TrcData
from .geometry import (AlignmentSeries, ChordSpec, chord_alignment,
                       select_cutoff, windowed_max)
from .spatial import DistanceAxis, build_distance_axis, resample_to_space
from .speed import (DEFAULT_DELAY_BOUNDS_S, DEFAULT_WINDOW_SAMPLES,
                    SpeedProfile, estimate_delay, estimate_speed)
from .timeseries import TimeSeries, decimate, double_integrate, merge_records

WORKING_RATE_HZ = 256.0

# High-pass warm-up: displacement this close to a record end still carries
# the integrator's settle transient and must not be reported as geometry.
SETTLE_PERIODS = 1.5


@dataclass(frozen=True)
class ProcessOptions:
    chords_m: tuple = (10.0, 35.0)
    lateral_chords_m: tuple = (10.0,)
    cutoff_hz: float | None = None        # override select_cutoff
    v_ref_mps: float = 3.0
    window_m: float = 100.0
    wheelbase_m: float = 2.5
    grid_spacing_m: float = TRC_SPACING_M
    working_rate_hz: float = WORKING_RATE_HZ
    delay_window_samples: int = DEFAULT_WINDOW_SAMPLES
    delay_bounds_s: tuple = DEFAULT_DELAY_BOUNDS_S
    x0_m: float = 0.0
    max_abs_mode: str = "max_abs"


@dataclass
class ProcessResult:
    speed: SpeedProfile
    axis: DistanceAxis
    alignments: dict = field(default_factory=dict)   # column -> AlignmentSeries
    maxima: dict = field(default_factory=dict)       # column -> WindowedStats
    displacements: dict = field(default_factory=dict)  # label -> SpatialSeries (mm)
    params: dict = field(default_factory=dict)

    def to_trc(self, metadata: dict | None = None) -> TrcData:
        if not self.alignments:
            raise MissingChannelError("nothing was processed")
        first = next(iter(self.alignments.values()))
        n = len(first)
        grid = first.start_m + first.spacing_m * np.arange(n)
        columns = {"speed_mps": self.params["_speed_on_grid"]}
        for name, series in self.alignments.items():
            columns[name] = series.values_mm
        meta = {k: v for k, v in self.params.items() if not k.startswith("_")}
        if metadata:
            meta.update(metadata)
        return TrcData(grid, columns, meta)


def parse_channel_id(channel_id: str) -> dict:
    parts = channel_id.split("-")
    if len(parts) != 4 or parts[1] not in ("front", "back") \
            or parts[2] not in ("left", "right") \
            or parts[3] not in ("vertical", "lateral"):
        raise MissingChannelError(f"channel id {channel_id!r} does not follow "
                                  f"location-position-side-axis")
    return {"location": parts[0], "position": parts[1], "side": parts[2],
            "axis": parts[3]}


def column_name(chord_d_m: float, side: str, axis: str) -> str:
    prefix = "VA" if axis == "vertical" else "HA"
    return f"{prefix}{chord_d_m:g}_{side}_mm"


def _prepare(channels: dict, opts: ProcessOptions) -> dict:
    """Merge blocks and decimate every channel to the working rate."""
    merged = {}
    for cid, blocks in channels.items():
        ts = merge_records(list(blocks)) if isinstance(blocks, (list, tuple)) \
            else blocks
        factor = ts.sample_rate_hz / opts.working_rate_hz
        if abs(factor - round(factor)) > 1e-9:
            raise ValueError(f"rate {ts.sample_rate_hz} Hz of {cid!r} is no "
                             f"integer multiple of {opts.working_rate_hz} Hz")
        factor = int(round(factor))
        merged[cid] = decimate(ts, factor) if factor > 1 else ts
    return merged


def _mask_settle(series, axis: DistanceAxis, rate_hz: float, cutoff_hz: float):
    """Invalidate grid samples inside the integrator's settle zone.

    The first and last SETTLE_PERIODS/cutoff seconds of a record have no
    filter context; capped at a quarter of the record so short runs keep
    an interior.
    """
    n_t = len(axis)
    i = min(int(round(SETTLE_PERIODS / cutoff_hz * rate_hz)), n_t // 4)
    if i <= 0:
        return series
    lo = axis.positions_m[i]
    hi = axis.positions_m[n_t - 1 - i]
    pos = series.positions()
    return replace(series, valid=series.valid & (pos >= lo) & (pos <= hi))


def _estimate_speed_from(pairs: dict, opts: ProcessOptions) -> SpeedProfile:
    """Cross-correlation speed from the first side with front+back vertical."""
    for side in ("left", "right"):
        front = pairs.get(("front", side))
        back = pairs.get(("back", side))
        if front is not None and back is not None:
            cutoff = opts.cutoff_hz or select_cutoff(opts.chords_m[0],
                                                     opts.v_ref_mps)
            zf = double_integrate(front, cutoff)
            zb = double_integrate(back, cutoff)
            delays = estimate_delay(zf, zb, opts.delay_window_samples,
                                    opts.delay_bounds_s)
            return estimate_speed(delays, opts.wheelbase_m)
    raise MissingChannelError("speed estimation needs front and back vertical "
                              "records on at least one side")


def process_records(channels: dict, opts: ProcessOptions = ProcessOptions(),
                    speed_override: SpeedProfile | None = None) -> ProcessResult:
    """Run the full chain on merged or block-listed channel records.

    channels: channel_id -> TimeSeries or list of block TimeSeries. Needs the
    front vertical record of every rail to estimate plus, unless
    speed_override is given, a back vertical record on the same side.
    speed_override must be sampled at the working rate and at least as long
    as the decimated records.
    """
    prepared = _prepare(channels, opts)
    n = min(len(ts) for ts in prepared.values())
    vertical = {}
    lateral = {}
    for cid, ts in prepared.items():
        if len(ts) > n:
            ts = replace(ts, samples=ts.samples[:n])
        meta = parse_channel_id(cid)
        key = (meta["position"], meta["side"])
        if meta["axis"] == "vertical":
            vertical[key] = ts
        else:
            lateral[key] = ts
    if speed_override is not None:
        if speed_override.sample_rate_hz != opts.working_rate_hz:
            raise ValueError("speed_override must be sampled at the working rate")
        if speed_override.speeds_mps.size < n:
            raise ValueError(f"speed_override covers {speed_override.speeds_mps.size} "
                             f"samples, records need {n}")
        speed = SpeedProfile(speed_override.speeds_mps[:n],
                             speed_override.sample_rate_hz,
                             speed_override.wheelbase_m,
                             speed_override.valid[:n])
    else:
        speed = _estimate_speed_from(vertical, opts)

    axis = build_distance_axis(speed, opts.x0_m)

    params = {
        "chords_m": list(opts.chords_m),
        "lateral_chords_m": list(opts.lateral_chords_m),
        "cutoff_hz": opts.cutoff_hz,
        "v_ref_mps": opts.v_ref_mps,
        "window_m": opts.window_m,
        "wheelbase_m": opts.wheelbase_m,
        "grid_spacing_m": opts.grid_spacing_m,
        "working_rate_hz": opts.working_rate_hz,
        "x0_m": opts.x0_m,
        "speed_source": "external" if speed_override is not None else "estimated",
    }
    result = ProcessResult(speed, axis, params=params)

    integrated: dict = {}

    def displacement(source: dict, side: str, cutoff: float) -> TimeSeries:
        ts = source.get(("front", side))
        if ts is None:
            raise MissingChannelError(f"no front {side} record available")
        key = (id(source), side, cutoff)
        if key not in integrated:
            integrated[key] = double_integrate(ts, cutoff)
        return integrated[key]

    jobs = [(d, "vertical", vertical) for d in opts.chords_m]
    jobs += [(d, "lateral", lateral) for d in opts.lateral_chords_m]
    for d, axis_name, source in jobs:
        chord = ChordSpec.for_grid(d, opts.grid_spacing_m)
        cutoff = opts.cutoff_hz or select_cutoff(d, opts.v_ref_mps)
        for side in ("left", "right"):
            if (("front", side)) not in source:
                continue
            z_time = displacement(source, side, cutoff)
            z_space = resample_to_space(z_time, axis, opts.grid_spacing_m)
            z_space = _mask_settle(z_space, axis, opts.working_rate_hz, cutoff)
            z_mm = replace(z_space, values=z_space.values * 1e3, units="mm")
            result.displacements[f"{axis_name}_{side}_cutoff{cutoff:g}Hz"] = z_mm
            aligned = chord_alignment(z_mm, chord, axis_name, side)
            column = column_name(d, side, axis_name)
            result.alignments[column] = aligned
            result.maxima[column] = windowed_max(aligned, opts.window_m,
                                                 opts.max_abs_mode)

    if not result.alignments:
        raise MissingChannelError("no front vertical or lateral channel found")

    first = next(iter(result.alignments.values()))
    grid = first.start_m + first.spacing_m * np.arange(len(first))
    params["_speed_on_grid"] = np.interp(grid, axis.positions_m,
                                         speed.speeds_mps)
    return result


def chord_ground_truth(profile, sim, chords_m=(10.0, 35.0),
                       lateral_chords_m=(10.0,),
                       spacing_m: float = TRC_SPACING_M) -> TrcData:
    """Reference geometry table straight from a synthetic profile.

    Applies the same chord arithmetic to the known rail shapes, so the
    only differences from a processed run are the estimation steps.
    """
    from .synthesizer import profile_spatial_series

    columns = {}
    grid = None
    for chords, axis in ((chords_m, "vertical"), (lateral_chords_m, "lateral")):
        for d in chords:
            chord = ChordSpec.for_grid(d, spacing_m)
            for side in ("left", "right"):
                series = profile_spatial_series(profile, side, axis, spacing_m)
                if grid is None:
                    grid = series.positions()
                aligned = chord_alignment(series, chord, axis, side)
                columns[column_name(d, side, axis)] = aligned.values_mm
    x_front = next(pos for cid, pos in sim.wheel_positions.items()
                   if "-front-" in cid)
    columns["speed_mps"] = np.interp(grid, x_front, sim.speeds_mps)
    return TrcData(grid, columns, {"source": "synthesizer"})


def alignment_from_trc(trc: TrcData, column: str) -> AlignmentSeries:
    """Rehydrate a TRC geometry column into an AlignmentSeries."""
    import re
    m = re.match(r"^(VA|HA)(\d+(?:\.\d+)?)_(left|right)_mm$", column)
    if m is None:
        raise ValueError(f"column {column!r} is not a geometry column")
    d = float(m.group(2))
    values = np.asarray(trc.columns[column], dtype=float)
    spacing = TRC_SPACING_M
    chord = ChordSpec.for_grid(d, spacing)
    return AlignmentSeries(values, spacing, float(trc.distance_m[0]), chord,
                           axis="vertical" if m.group(1) == "VA" else "lateral",
                           rail=m.group(3))


def compare_trc(est: TrcData, ref: TrcData, window_m: float = 100.0,
                max_shift_m: float = 0.0, mode: str = "max_abs",
                skipped: dict | None = None) -> dict:
    """Windowed comparison per common geometry column.

    Both tables are cropped to a shared start so the tumbling windows line
    up, then co-registered within +/- max_shift_m and correlated. Returns
    column -> (ComparisonReport, applied_shift_m). Columns that cannot be
    compared (no window variance, or too few usable windows after masking)
    are skipped rather than failing the run; pass a dict as `skipped` to
    collect column -> reason. Raises only if no column is comparable.
    """
    from .comparison import coregister, correlate
    from .errors import (InsufficientDataError, NoOverlapError,
                         UndefinedCorrelationError)

    common = [c for c in est.geometry_columns() if c in ref.columns]
    if not common:
        raise MissingChannelError("tables share no geometry column")
    out = {}
    first_error = None
    for column in common:
        a = alignment_from_trc(est, column)
        b = alignment_from_trc(ref, column)
        start = max(a.start_m, b.start_m)

        def crop(s: AlignmentSeries) -> AlignmentSeries:
            skip = int(round((start - s.start_m) / s.spacing_m))
            return AlignmentSeries(s.values_mm[skip:], s.spacing_m, start,
                                   s.chord, s.axis, s.rail, s.valid[skip:])

        wa = windowed_max(crop(a), window_m, mode)
        wb = windowed_max(crop(b), window_m, mode)
        try:
            wa, wb, shift = coregister(wa, wb, max_shift_m)
            report = correlate(wa, wb, metadata={
                "column": column, "window_m": window_m,
                "applied_shift_m": shift, "mode": mode,
            })
        except UndefinedCorrelationError as exc:
            if skipped is not None:
                skipped[column] = "windows have no variance"
            first_error = first_error or exc
            continue
        except (NoOverlapError, InsufficientDataError) as exc:
            if skipped is not None:
                skipped[column] = "too few comparable windows"
            first_error = first_error or exc
            continue
        out[column] = (report, shift)
    if not out:
        raise first_error
    return out
