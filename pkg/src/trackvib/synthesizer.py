"""Synthetic track profiles, simulated sensor records, and sensor noise.

Profiles are sums of spatial sinusoids (either given explicitly or drawn
randomly inside a band and scaled to a target RMS), stored both sampled on a
fine grid and as component tables. simulate_run evaluates the acceleration a
wheel-mounted sensor would see analytically per component,

    a(t) = -(2 pi nu v(t))^2 A sin(2 pi nu x(t) + phi)
           + 2 pi nu dv/dt A cos(2 pi nu x(t) + phi),

so the simulated records contain no interpolation or differentiation error
and can serve as ground truth for the processing chain.

Impulse events model wheel/rail defects: a bipolar raised-cosine doublet in
acceleration (positive raised-cosine over the first half-duration, negative
over the second). The doublet has zero net area - a wheel crossing a defect
keeps following the rail, so it picks up no permanent vertical velocity - but
a nonzero first moment, which double-integrates into a displacement step and
reproduces the unrealistically large apparent geometry that impulsive axle
noise causes.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PlanTooShortError
from .spatial import SpatialSeries
from .timeseries import KIND_ACCELERATION, TimeSeries

G = 9.81
DEFAULT_SAMPLE_RATE_HZ = 2560.0
DEFAULT_WHEELBASE_M = 2.5
DEFAULT_PROFILE_SPACING_M = 0.05
DEFAULT_LR_CORRELATION = 0.7
DEFAULT_DEVIATION_BOUND_MM = 50.0
MAX_NU_CYCLES_PER_M = 10.0
MAX_NOISE_COMPONENTS = 384

SIDES = ("left", "right")
POSITIONS = ("front", "back")
AXES = ("vertical", "lateral")


@dataclass(frozen=True)
class SensorSpec:
    """Accelerometer model: clipping range and white noise floor."""

    name: str
    location: str            # carbody | bogie | axlebox
    range_g: float
    noise_floor_ug_sqrthz: float

    def noise_sigma(self, sample_rate_hz: float) -> float:
        """Std dev in m/s^2 of the noise floor sampled at the given rate."""
        return self.noise_floor_ug_sqrthz * 1e-6 * G * np.sqrt(sample_rate_hz / 2.0)


SENSOR_SPECS = {
    "carbody_mems": SensorSpec("carbody_mems", "carbody", 3.0, 150.0),
    "bogie_mems": SensorSpec("bogie_mems", "bogie", 16.0, 300.0),
    "axlebox_mems": SensorSpec("axlebox_mems", "axlebox", 200.0, 2700.0),
    "carbody_iepe": SensorSpec("carbody_iepe", "carbody", 50.0, 3.0),
    "bogie_iepe": SensorSpec("bogie_iepe", "bogie", 50.0, 3.0),
    "axlebox_iepe": SensorSpec("axlebox_iepe", "axlebox", 500.0, 16.0),
}


@dataclass(frozen=True)
class ImpulseEvent:
    position_m: float
    amplitude_g: float
    duration_ms: float


@dataclass(frozen=True)
class TrackProfile:
    """Left/right vertical (z) and lateral (y) deviations in mm.

    Channel arrays are sampled every spacing_m over [0, length_m]; components
    maps each channel to an (n, 3) array of rows (nu, amplitude_mm, phase)
    whose sum reproduces the sampled array exactly.
    """

    length_m: float
    spacing_m: float
    z_left: np.ndarray
    z_right: np.ndarray
    y_left: np.ndarray
    y_right: np.ndarray
    components: dict
    geo_polyline: tuple | None = None

    def channel(self, side: str, axis: str) -> np.ndarray:
        return getattr(self, ("z_" if axis == "vertical" else "y_") + side)


@dataclass(frozen=True)
class SimConfig:
    """Kinematic run description: when, how fast, and what goes wrong."""

    speed_plan: tuple            # ((time_s, speed_mps), ...) piecewise linear
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    wheelbase_m: float = DEFAULT_WHEELBASE_M
    impulse_events: tuple = ()
    lateral_disturbance: dict | None = None   # {"rms_mps2":…, "band_hz": (lo,hi)}
    seed: int = 0
    sensor_location: str = "bogie"

    def __post_init__(self):
        plan = tuple((float(t), float(v)) for t, v in self.speed_plan)
        if len(plan) < 1:
            raise ValueError("speed plan needs at least one knot")
        times = [t for t, _ in plan]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("speed plan times must be non-decreasing")
        if any(v < 0 for _, v in plan):
            raise ValueError("speed plan speeds must be non-negative")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be > 0")
        if not self.wheelbase_m > 0:
            raise ValueError("wheelbase_m must be > 0")
        object.__setattr__(self, "speed_plan", plan)
        object.__setattr__(self, "impulse_events", tuple(self.impulse_events))


@dataclass(frozen=True)
class SimResult:
    """Clean (noise-free) simulated records plus the kinematic truth."""

    channels: dict               # channel_id -> TimeSeries
    wheel_positions: dict        # channel_id -> positions of that wheel (m)
    speeds_mps: np.ndarray
    config: SimConfig

    def true_speed_profile(self):
        from .speed import SpeedProfile
        return SpeedProfile(self.speeds_mps.copy(),
                            self.config.sample_rate_hz,
                            self.config.wheelbase_m,
                            np.ones(self.speeds_mps.size, dtype=bool))


def _channel_rng(seed: int, channel_id: str) -> np.random.Generator:
    # stable per-channel stream: master seed + crc of the channel name
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(channel_id.encode())]))


def _sample_components(grid_x: np.ndarray, comps: np.ndarray,
                       chunk: int = 8192) -> np.ndarray:
    if comps.size == 0:
        return np.zeros(grid_x.size)
    nu, amp, phase = comps[:, 0], comps[:, 1], comps[:, 2]
    out = np.empty(grid_x.size)
    for lo in range(0, grid_x.size, chunk):
        hi = min(lo + chunk, grid_x.size)
        out[lo:hi] = np.sin(2.0 * np.pi * np.outer(grid_x[lo:hi], nu) + phase) @ amp
    return out


def _noise_components(rng: np.random.Generator, band, rms_mm: float,
                      length_m: float, grid_x: np.ndarray) -> np.ndarray:
    """Random in-band sinusoids with equal amplitudes, scaled so the sampled
    profile hits the target RMS exactly."""
    lo, hi = band
    if not 0.0 < lo < hi <= MAX_NU_CYCLES_PER_M:
        raise ValueError(f"band must lie within (0, {MAX_NU_CYCLES_PER_M}] "
                         f"cycles/m, got {band}")
    n = int(round((hi - lo) * length_m))
    n = int(np.clip(n, 16, MAX_NOISE_COMPONENTS))
    nu = np.sort(rng.uniform(lo, hi, n))
    phase = rng.uniform(0.0, 2.0 * np.pi, n)
    amp = np.full(n, rms_mm * np.sqrt(2.0 / n))
    comps = np.column_stack([nu, amp, phase])
    realized = np.sqrt(np.mean(_sample_components(grid_x, comps) ** 2))
    if realized > 0:
        comps[:, 1] *= rms_mm / realized
    return comps


def synth_profile(length_m: float, spec: dict, seed: int = 0,
                  lateral_spec: dict | None = None,
                  lr_correlation: float = DEFAULT_LR_CORRELATION,
                  spacing_m: float = DEFAULT_PROFILE_SPACING_M,
                  deviation_bound_mm: float = DEFAULT_DEVIATION_BOUND_MM,
                  geo_polyline=None) -> TrackProfile:
    """Generate a track profile from a spectral description.

    spec is either
      {"type": "sines", "components": [{"nu":…, "amplitude_mm":…, "phase":…}]}
    for an exact deterministic sum (applied to both rails), or
      {"type": "noise", "band_cycles_per_m": (lo, hi), "rms_mm": r}
    for band-limited random roughness with left/right correlation
    ``lr_correlation``. ``lateral_spec`` (same shape) feeds the y channels;
    without it they are zero. Same seed, same profile; different seed,
    different roughness.
    """
    if not length_m > 0:
        raise ValueError("length_m must be > 0")
    if not 0 < spacing_m <= 1.0 / (2.0 * MAX_NU_CYCLES_PER_M):
        raise ValueError(f"spacing_m must be in (0, "
                         f"{1.0 / (2.0 * MAX_NU_CYCLES_PER_M)}], got {spacing_m}")
    n_grid = int(round(length_m / spacing_m)) + 1
    grid_x = spacing_m * np.arange(n_grid)

    def build(axis_spec: dict | None, axis: str) -> dict:
        zeros = np.zeros((0, 3))
        if axis_spec is None:
            return {"left": zeros, "right": zeros}
        kind = axis_spec.get("type")
        if kind == "sines":
            rows = [(c["nu"], c["amplitude_mm"], c.get("phase", 0.0))
                    for c in axis_spec["components"]]
            comps = np.asarray(rows, dtype=float).reshape(-1, 3)
            if np.any(comps[:, 0] <= 0) or np.any(comps[:, 0] > MAX_NU_CYCLES_PER_M):
                raise ValueError(f"sinusoid nu outside (0, {MAX_NU_CYCLES_PER_M}] "
                                 f"cycles/m")
            return {"left": comps, "right": comps.copy()}
        if kind == "noise":
            if not -1.0 <= lr_correlation <= 1.0:
                raise ValueError("lr_correlation must be in [-1, 1]")
            band = tuple(axis_spec["band_cycles_per_m"])
            rms = float(axis_spec["rms_mm"])
            if not rms >= 0:
                raise ValueError("rms_mm must be >= 0")
            rng = _channel_rng(seed, f"profile-{axis}")
            left = _noise_components(rng, band, rms, length_m, grid_x)
            indep = _noise_components(rng, band, rms, length_m, grid_x)
            rho = lr_correlation
            right = np.vstack([
                left * [1.0, rho, 1.0],
                indep * [1.0, np.sqrt(1.0 - rho * rho), 1.0],
            ])
            return {"left": left, "right": right}
        raise ValueError(f"unknown profile spec type {kind!r}")

    components = {}
    sampled = {}
    for axis, axis_spec in (("vertical", spec), ("lateral", lateral_spec)):
        per_side = build(axis_spec, axis)
        for side in SIDES:
            key = f"{axis}-{side}"
            components[key] = per_side[side]
            sampled[key] = _sample_components(grid_x, per_side[side])

    worst = max(np.max(np.abs(v)) if v.size else 0.0 for v in sampled.values())
    if worst > deviation_bound_mm:
        raise ValueError(f"profile deviation {worst:.1f} mm exceeds bound "
                         f"{deviation_bound_mm} mm")
    return TrackProfile(float(length_m), float(spacing_m),
                        sampled["vertical-left"], sampled["vertical-right"],
                        sampled["lateral-left"], sampled["lateral-right"],
                        components,
                        tuple(map(tuple, geo_polyline)) if geo_polyline else None)


def profile_spatial_series(profile: TrackProfile, side: str, axis: str = "vertical",
                           spacing_m: float = 0.25) -> SpatialSeries:
    """Ground-truth profile as a SpatialSeries in mm on a coarser grid."""
    step = spacing_m / profile.spacing_m
    if abs(step - round(step)) > 1e-9:
        raise ValueError(f"spacing {spacing_m} m is not a multiple of the "
                         f"profile grid {profile.spacing_m} m")
    values = profile.channel(side, axis)[::int(round(step))]
    return SpatialSeries(values, spacing_m, 0.0,
                         channel_id=f"truth-{side}-{axis}", units="mm")


def _plan_arrays(config: SimConfig):
    t = np.array([k[0] for k in config.speed_plan])
    v = np.array([k[1] for k in config.speed_plan])
    return t, v


def _trajectory(config: SimConfig, length_m: float):
    """Sampled speed, acceleration dv/dt and front-wheel position, ending at
    the first sample at or past length_m. Raises PlanTooShortError if the
    plan runs out first."""
    fs = config.sample_rate_hz
    kt, kv = _plan_arrays(config)
    # analytic distance at the knots to size the sample arrays up front
    knot_x = np.concatenate(([0.0], np.cumsum(0.5 * (kv[1:] + kv[:-1]) * np.diff(kt))))
    if knot_x[-1] < length_m:
        raise PlanTooShortError(
            f"speed plan ends at t={kt[-1]} s with the front wheel at "
            f"{knot_x[-1]:.1f} m of {length_m} m")
    seg = int(np.searchsorted(knot_x, length_m, side="right")) - 1
    seg = min(seg, kt.size - 2)
    need = length_m - knot_x[seg]
    v0 = kv[seg]
    seg_dt = kt[seg + 1] - kt[seg]
    slope = (kv[seg + 1] - kv[seg]) / seg_dt if seg_dt > 0 else 0.0
    if slope != 0.0:
        tau = (np.sqrt(max(v0 * v0 + 2.0 * slope * need, 0.0)) - v0) / slope
    else:
        tau = need / v0 if v0 > 0 else seg_dt
    t_reach = min(kt[seg] + tau, kt[-1])
    n = int(np.ceil(t_reach * fs - 1e-9)) + 1
    n = min(n, int(np.floor(kt[-1] * fs + 1e-9)) + 1)
    t = np.arange(n) / fs
    v = np.interp(t, kt, kv)
    dt = 1.0 / fs
    x = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)))
    stop = min(int(np.searchsorted(x, length_m)) + 1, n)
    t, v, x = t[:stop], v[:stop], x[:stop]
    # dv/dt: slope of the active plan segment
    if kt.size > 1:
        seg = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, kt.size - 2)
        seg_dt = kt[seg + 1] - kt[seg]
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = np.where(seg_dt > 0, (kv[seg + 1] - kv[seg]) / seg_dt, 0.0)
    else:
        slopes = np.zeros_like(t)
    return t, v, slopes, x


def _chain_rule_acceleration(comps: np.ndarray, xw: np.ndarray, v: np.ndarray,
                             dvdt: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Exact second time derivative of sum_j A_j sin(2 pi nu_j x(t) + phi_j)."""
    out = np.zeros(xw.size)
    if comps.size == 0:
        return out
    nu = comps[:, 0]
    amp_m = comps[:, 1] * 1e-3          # mm -> m
    phase = comps[:, 2]
    w = 2.0 * np.pi * nu
    sin_w = amp_m * w * w               # weights for the v^2 sin term
    cos_w = amp_m * w                   # weights for the dv/dt cos term
    any_accel = bool(np.any(dvdt != 0.0))
    for lo in range(0, xw.size, chunk):
        hi = min(lo + chunk, xw.size)
        args = np.outer(xw[lo:hi], w) + phase
        out[lo:hi] = -(v[lo:hi] ** 2) * (np.sin(args) @ sin_w)
        if any_accel:
            out[lo:hi] += dvdt[lo:hi] * (np.cos(args) @ cos_w)
    return out


def _band_noise(rng: np.random.Generator, n: int, fs: float, rms: float,
                band_hz) -> np.ndarray:
    """Band-limited Gaussian noise via spectral masking, scaled to rms."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    lo, hi = band_hz
    spec[(f < lo) | (f > hi)] = 0.0
    x = np.fft.irfft(spec, n=n)
    std = x.std()
    return x * (rms / std) if std > 0 else x


def simulate_run(profile: TrackProfile, config: SimConfig) -> SimResult:
    """Noise-free accelerations for front/back, left/right, vertical/lateral.

    Channel ids follow ``{location}-{front|back}-{side}-{axis}``. The back
    wheel trails the front one by the wheelbase, so at constant speed its
    record is the front record delayed by wheelbase/speed. Impulse events and
    sensor noise are separate stages (add_impulses, add_sensor_noise).
    """
    _, v, dvdt, x_front = _trajectory(config, profile.length_m)
    loc = config.sensor_location
    channels: dict[str, TimeSeries] = {}
    wheel_positions: dict[str, np.ndarray] = {}
    for pos in POSITIONS:
        xw = x_front if pos == "front" else x_front - config.wheelbase_m
        for side in SIDES:
            for axis in AXES:
                cid = f"{loc}-{pos}-{side}-{axis}"
                comps = profile.components[f"{axis}-{side}"]
                acc = _chain_rule_acceleration(comps, xw, v, dvdt)
                if axis == "lateral" and config.lateral_disturbance:
                    d = config.lateral_disturbance
                    rng = _channel_rng(config.seed, f"lateral-disturbance-{cid}")
                    acc = acc + _band_noise(rng, acc.size, config.sample_rate_hz,
                                            float(d["rms_mps2"]),
                                            tuple(d["band_hz"]))
                channels[cid] = TimeSeries(acc, config.sample_rate_hz, 0.0,
                                           cid, KIND_ACCELERATION)
                wheel_positions[cid] = xw
    return SimResult(channels, wheel_positions, v, config)


def add_impulses(ts: TimeSeries, events, wheel_positions_m: np.ndarray,
                 amplitude_scale: float = 1.0) -> TimeSeries:
    """Add the bipolar raised-cosine doublet of each crossed event.

    Events whose position the wheel never reaches are skipped. The doublet
    peaks at +/- amplitude_g * 9.81 * amplitude_scale and spans duration_ms
    centered on the crossing instant.
    """
    if wheel_positions_m.size != len(ts):
        raise ValueError("wheel positions must match the record length")
    fs = ts.sample_rate_hz
    t = np.arange(len(ts)) / fs
    out = ts.samples.copy()
    for ev in events:
        pos = wheel_positions_m
        if ev.position_m < pos[0] or ev.position_m > pos[-1]:
            continue
        t0 = float(np.interp(ev.position_m, pos, t))
        amp = ev.amplitude_g * G * amplitude_scale
        half = ev.duration_ms * 1e-3 / 2.0
        rel = t - t0
        lead = (rel >= -half) & (rel < 0.0)
        trail = (rel >= 0.0) & (rel <= half)
        out[lead] += amp * 0.5 * (1.0 - np.cos(2.0 * np.pi * (rel[lead] + half) / half))
        out[trail] -= amp * 0.5 * (1.0 - np.cos(2.0 * np.pi * rel[trail] / half))
    return replace(ts, samples=out)


def add_sensor_noise(ts: TimeSeries, spec: SensorSpec, seed: int = 0):
    """White sensor-floor noise plus range clipping.

    Returns (noisy_series, clipped_mask): sigma is the noise floor scaled by
    sqrt(fs/2), the clip limit is +/- range_g * 9.81, and the mask marks every
    sample that hit it. The noise stream is derived from seed + channel id,
    so channels never share a stream and reruns are identical.
    """
    rng = _channel_rng(seed, ts.channel_id)
    sigma = spec.noise_sigma(ts.sample_rate_hz)
    noisy = ts.samples + sigma * rng.standard_normal(len(ts))
    limit = spec.range_g * G
    clipped = np.abs(noisy) > limit
    return replace(ts, samples=np.clip(noisy, -limit, limit)), clipped
