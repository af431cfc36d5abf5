"""Time-domain containers and the sampled-signal operations of the chain.

All heavy filtering is done by masking the DFT of the record: the record is
padded, transformed with a real FFT, multiplied by a real zero-phase mask,
transformed back and trimmed. Transition bands are raised cosines one octave
wide, geometrically centered on the cutoff, so the passband gain is exactly 1
and the stopband exactly 0.

Padding differs by operation. Low-pass (decimation) and plain high-pass masks
have gain <= 1, so a 2 s even-symmetric reflection is enough. The double
integration mask amplifies the transition band by up to ~0.15/cutoff_hz^2,
which turns the slope discontinuity a reflection leaves at the record edge
into low-frequency wander across the whole record (~60% amplitude error on a
plain 5 Hz sine). Integration therefore extends the record by linear
prediction (Burg) so oscillations continue coherently, fades the extensions
with a smooth taper, and only then applies the mask.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import GapTooLargeError

KIND_ACCELERATION = "acceleration"
KIND_DISPLACEMENT = "displacement"

# seconds of even-symmetric reflection prepended/appended before gain<=1 masks
EDGE_PAD_S = 2.0

# predictive-extension parameters for the integration mask
INTEGRATION_PAD_S = 4.0
_AR_FIT_S = 8.0
_AR_ORDER = 32


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal.

    Parameters
    ----------
    samples : np.ndarray
        Signal values, coerced to float64. Treated as immutable.
    sample_rate_hz : float
        Sampling rate, > 0.
    start_time_s : float
        Time of the first sample.
    channel_id : str
        Free-form channel label, e.g. ``"bogie-front-left-vertical"``.
    kind : str
        Either ``"acceleration"`` (m/s^2) or ``"displacement"`` (m).
    """

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0
    channel_id: str = ""
    kind: str = KIND_ACCELERATION

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not (self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.kind not in (KIND_ACCELERATION, KIND_DISPLACEMENT):
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def end_time_s(self) -> float:
        """Start time of a hypothetical next block."""
        return self.start_time_s + self.duration_s

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class SpectralSeries:
    """One-sided DFT of a TimeSeries: complex bins plus their frequency axis."""

    bins: np.ndarray
    frequency_axis_hz: np.ndarray
    source_length: int
    sample_rate_hz: float
    channel_id: str = ""

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        freqs = np.asarray(self.frequency_axis_hz, dtype=np.float64)
        if bins.shape != freqs.shape:
            raise ValueError("bins and frequency_axis_hz must have equal length")
        if freqs.size == 0 or freqs[0] != 0.0:
            raise ValueError("frequency axis must start at the 0 Hz bin")
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "frequency_axis_hz", freqs)


def spectrum(ts: TimeSeries) -> SpectralSeries:
    """One-sided DFT of the raw record (no padding, no window)."""
    bins = np.fft.rfft(ts.samples)
    freqs = np.fft.rfftfreq(ts.samples.size, 1.0 / ts.sample_rate_hz)
    return SpectralSeries(bins, freqs, ts.samples.size, ts.sample_rate_hz, ts.channel_id)


def _raised_cosine_step(f: np.ndarray, f_lo: float, f_hi: float) -> np.ndarray:
    """Smooth 0 -> 1 step: 0 below f_lo, 1 above f_hi, raised cosine between."""
    out = np.zeros_like(f)
    out[f >= f_hi] = 1.0
    band = (f > f_lo) & (f < f_hi)
    out[band] = 0.5 * (1.0 - np.cos(np.pi * (f[band] - f_lo) / (f_hi - f_lo)))
    return out


def _highpass_mask(f: np.ndarray, cutoff_hz: float) -> np.ndarray:
    # one octave transition, geometrically centered: [c/sqrt2, c*sqrt2]
    return _raised_cosine_step(f, cutoff_hz / np.sqrt(2.0), cutoff_hz * np.sqrt(2.0))


def _apply_mask(samples: np.ndarray, sample_rate_hz: float, mask_of_f) -> np.ndarray:
    """Even-reflect pad, rfft, multiply by mask(f), irfft, trim."""
    n = samples.size
    pad = min(int(round(EDGE_PAD_S * sample_rate_hz)), n - 1)
    padded = np.pad(samples, pad, mode="reflect") if pad > 0 else samples
    bins = np.fft.rfft(padded)
    f = np.fft.rfftfreq(padded.size, 1.0 / sample_rate_hz)
    bins *= mask_of_f(f)
    out = np.fft.irfft(bins, n=padded.size)
    return out[pad:pad + n] if pad > 0 else out


def decimate(ts: TimeSeries, factor: int) -> TimeSeries:
    """Reduce the sample rate by an integer factor with anti-alias filtering.

    A zero-phase low-pass (flat to 0.8x the new Nyquist, raised-cosine roll-off
    reaching 0 at the new Nyquist) is applied before keeping every
    ``factor``-th sample; floor(n/factor) samples survive.
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"decimation factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return ts
    count = ts.samples.size // factor
    if count == 0:
        raise ValueError(f"record of {ts.samples.size} samples too short to decimate by {factor}")
    nyq_new = ts.sample_rate_hz / (2.0 * factor)
    filtered = _apply_mask(
        ts.samples, ts.sample_rate_hz,
        lambda f: 1.0 - _raised_cosine_step(f, 0.8 * nyq_new, nyq_new),
    )
    kept = filtered[:count * factor:factor]
    return replace(ts, samples=kept, sample_rate_hz=ts.sample_rate_hz / factor)


def highpass(ts: TimeSeries, cutoff_hz: float) -> TimeSeries:
    """Zero-phase high-pass with a one-octave raised-cosine transition.

    Gain is exactly 0 at and below cutoff/sqrt(2) (DC included) and exactly 1
    at and above cutoff*sqrt(2); components >= 2x cutoff pass untouched.
    """
    nyquist = ts.sample_rate_hz / 2.0
    if not (0.0 < cutoff_hz < nyquist):
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, {nyquist}) Hz")
    out = _apply_mask(ts.samples, ts.sample_rate_hz, lambda f: _highpass_mask(f, cutoff_hz))
    return replace(ts, samples=out)


def _burg_coefficients(x: np.ndarray, order: int) -> np.ndarray:
    """Burg AR coefficients a such that x[i] ~= -sum_j a[j] x[i-1-j].

    Burg's recursion keeps every reflection coefficient in [-1, 1], so the
    resulting predictor is stable even on short or nearly constant segments.
    """
    f = x.astype(np.float64).copy()
    b = f.copy()
    a = np.zeros(order)
    for m in range(order):
        ff = f[1:]
        bb = b[:-1]
        den = np.dot(ff, ff) + np.dot(bb, bb)
        k = -2.0 * np.dot(ff, bb) / den if den > 0.0 else 0.0
        prev = a[:m].copy()
        a[m] = k
        if m:
            a[:m] = prev + k * prev[::-1]
        f, b = ff + k * bb, bb + k * ff
    return a


def _predict_forward(x: np.ndarray, count: int, order: int, fit: int) -> np.ndarray:
    """Continue x past its last sample by `count` linear predictions."""
    seg = x[-min(fit, x.size):]
    mu = seg.mean()
    a = _burg_coefficients(seg - mu, order)
    out = np.empty(count)
    buf = (x[-order:] - mu)[::-1].copy()   # buf[0] = newest
    for i in range(count):
        nxt = -np.dot(a, buf)
        out[i] = nxt
        buf[1:] = buf[:-1]
        buf[0] = nxt
    return out + mu


def _smooth_ramp(count: int) -> np.ndarray:
    """C-infinity 0 -> 1 fade (Planck taper); spectrally quieter than a cosine."""
    u = np.arange(count) / count
    inner = (u > 0.0) & (u < 1.0)
    z = np.zeros(count)
    z[inner] = 1.0 / u[inner] - 1.0 / (1.0 - u[inner])
    out = np.zeros(count)
    out[inner] = 1.0 / (1.0 + np.exp(np.clip(z[inner], -700.0, 700.0)))
    return out


def double_integrate(ts: TimeSeries, cutoff_hz: float) -> TimeSeries:
    """Acceleration -> displacement via division of the DFT by (j 2 pi f)^2.

    The high-pass mask (same shape as :func:`highpass`) is applied inside the
    same DFT, and the DC bin is zeroed, so the unbounded 1/f^2 amplification
    never touches the sub-cutoff band. sin(2 pi f0 t) maps to
    -sin(2 pi f0 t)/(2 pi f0)^2 for f0 comfortably above the cutoff.

    The record is extended on both sides by Burg linear prediction and the
    extensions faded to zero before the DFT (see module docstring); output
    samples within a few seconds of either end still carry elevated error,
    since no method can know the motion outside the record.
    """
    if ts.kind != KIND_ACCELERATION:
        raise ValueError(f"double_integrate expects acceleration input, got kind={ts.kind!r}")
    nyquist = ts.sample_rate_hz / 2.0
    if not (0.0 < cutoff_hz < nyquist):
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, {nyquist}) Hz")

    fs = ts.sample_rate_hz
    x = ts.samples - ts.samples.mean()    # DC is masked out regardless
    n = x.size
    pad = max(int(round(INTEGRATION_PAD_S * fs)), 1)
    order = max(1, min(_AR_ORDER, n - 1))
    fit = int(round(_AR_FIT_S * fs))
    fwd = _predict_forward(x, pad, order, fit)
    bwd = _predict_forward(x[::-1], pad, order, fit)[::-1]
    # a diverging predictor would dominate the masked spectrum; clamp it
    lim = 4.0 * max(float(np.max(np.abs(x))), np.finfo(float).tiny)
    np.clip(fwd, -lim, lim, out=fwd)
    np.clip(bwd, -lim, lim, out=bwd)
    padded = np.concatenate([bwd, x, fwd])
    ramp = _smooth_ramp(pad)
    padded[:pad] *= ramp
    padded[-pad:] *= ramp[::-1]

    f = np.fft.rfftfreq(padded.size, 1.0 / fs)
    m = _highpass_mask(f, cutoff_hz)
    with np.errstate(divide="ignore", invalid="ignore"):
        # division by (j 2 pi f)^2 = -(2 pi f)^2
        m = np.where(f > 0.0, -m / (2.0 * np.pi * f) ** 2, 0.0)
    out = np.fft.irfft(np.fft.rfft(padded) * m, n=padded.size)[pad:pad + n]
    return replace(ts, samples=out, kind=KIND_DISPLACEMENT)


def merge_records(parts: list[TimeSeries]) -> TimeSeries:
    """Concatenate contiguous record blocks into one series.

    Blocks must share rate, channel and kind and be ordered by start time.
    Gaps of one or two samples are bridged by linear interpolation between the
    neighboring samples; larger gaps raise GapTooLargeError naming the
    boundary. Overlapping blocks are rejected.
    """
    if not parts:
        raise ValueError("merge_records needs at least one block")
    first = parts[0]
    for p in parts[1:]:
        if p.sample_rate_hz != first.sample_rate_hz:
            raise ValueError("blocks disagree on sample_rate_hz")
        if p.channel_id != first.channel_id:
            raise ValueError("blocks disagree on channel_id")
        if p.kind != first.kind:
            raise ValueError("blocks disagree on kind")
    fs = first.sample_rate_hz

    pieces = [parts[0].samples]
    for prev, nxt in zip(parts, parts[1:]):
        gap = int(round((nxt.start_time_s - prev.end_time_s) * fs))
        if gap < 0:
            raise ValueError(
                f"blocks overlap at t={nxt.start_time_s:.6f} s on {first.channel_id!r}")
        if gap > 2:
            raise GapTooLargeError(
                f"{gap}-sample gap (max 2) at t={prev.end_time_s:.6f} s "
                f"on channel {first.channel_id!r}")
        if gap:
            a, b = pieces[-1][-1], nxt.samples[0]
            frac = np.arange(1, gap + 1) / (gap + 1)
            pieces.append(a + frac * (b - a))
        pieces.append(nxt.samples)
    return replace(first, samples=np.concatenate(pieces))
