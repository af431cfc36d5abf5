"""Window-value comparison metrics and integer-window co-registration."""

import numpy as np
import pytest

from trackvib.comparison import ComparisonReport, coregister, correlate
from trackvib.errors import (InsufficientDataError, NoOverlapError,
                             UndefinedCorrelationError)
from trackvib.geometry import WindowedStats


def stats(values, start=0.0, window=100.0, valid_fraction=None):
    values = np.asarray(values, dtype=float)
    n = values.size
    if valid_fraction is None:
        valid_fraction = np.ones(n)
    return WindowedStats(window, start + window * np.arange(n), values,
                         np.asarray(valid_fraction, dtype=float))


class TestCorrelate:
    def test_self_comparison_is_perfect(self):
        rng = np.random.default_rng(2)
        s = stats(rng.uniform(1.0, 5.0, 20))
        rep = correlate(s, s)
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert rep.slope == pytest.approx(1.0, abs=1e-9)
        assert rep.intercept == pytest.approx(0.0, abs=1e-9)
        assert rep.n_windows == 20
        assert np.allclose(rep.residuals, 0.0, atol=1e-9)

    def test_affine_relation_recovered(self):
        rng = np.random.default_rng(3)
        ref_v = rng.uniform(1.0, 5.0, 30)
        est = stats(2.0 * ref_v + 3.0)
        rep = correlate(est, stats(ref_v))
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert rep.slope == pytest.approx(2.0, abs=1e-9)
        assert rep.intercept == pytest.approx(3.0, abs=1e-9)

    def test_pearson_affine_invariance(self):
        rng = np.random.default_rng(4)
        e = rng.normal(size=25)
        r = 0.5 * e + rng.normal(size=25)
        base = correlate(stats(e), stats(r)).pearson_r
        scaled = correlate(stats(7.0 * e - 11.0), stats(r)).pearson_r
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_unusable_windows_dropped(self):
        e = np.array([1.0, 2.0, 3.0, 4.0, 100.0])
        r = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        vf = np.array([1.0, 1.0, 1.0, 1.0, 0.2])  # last window untrusted
        rep = correlate(stats(e, valid_fraction=vf), stats(r))
        assert rep.n_windows == 4
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)

    def test_too_few_windows(self):
        with pytest.raises(InsufficientDataError):
            correlate(stats([1.0, 2.0]), stats([1.0, 2.0]))

    def test_disjoint_sequences(self):
        with pytest.raises(NoOverlapError):
            correlate(stats(np.arange(5.0)), stats(np.arange(5.0), start=1000.0))

    def test_zero_variance_rejected(self):
        flat = stats(np.full(10, 2.0))
        wavy = stats(np.arange(10.0))
        with pytest.raises(UndefinedCorrelationError):
            correlate(flat, wavy)
        with pytest.raises(UndefinedCorrelationError):
            correlate(wavy, flat)

    def test_mismatched_window_length(self):
        with pytest.raises(ValueError):
            correlate(stats(np.arange(5.0)), stats(np.arange(5.0), window=20.0))

    def test_off_grid_phase_rejected(self):
        a = stats(np.arange(5.0))
        b = stats(np.arange(5.0), start=50.0)  # half-window offset
        with pytest.raises(ValueError):
            correlate(a, b)

    def test_report_round_trips_to_dict(self):
        rng = np.random.default_rng(5)
        v = rng.uniform(1.0, 5.0, 8)
        rep = correlate(stats(v), stats(v), metadata={"column": "VA10_left_mm"})
        d = rep.to_dict()
        assert d["n_windows"] == 8
        assert d["metadata"]["column"] == "VA10_left_mm"
        assert len(d["per_window"]) == 8
        assert isinstance(d["per_window"][0]["estimated"], float)


class TestCoregister:
    def test_identity_when_aligned(self):
        rng = np.random.default_rng(6)
        s = stats(rng.uniform(1.0, 5.0, 20))
        shifted, ref, applied = coregister(s, s, max_shift_m=300.0)
        assert applied == 0.0
        assert np.array_equal(shifted.starts_m, ref.starts_m)

    def test_known_offset_recovered(self):
        rng = np.random.default_rng(7)
        v = rng.uniform(1.0, 5.0, 30)
        ref = stats(v)
        # estimate chainage lags the reference by two windows
        est = stats(v, start=-200.0)
        shifted, _, applied = coregister(est, ref, max_shift_m=500.0)
        assert applied == 200.0
        rep = correlate(shifted, ref)
        assert rep.pearson_r == pytest.approx(1.0, abs=1e-12)

    def test_zero_max_shift_means_plain_pairing(self):
        rng = np.random.default_rng(8)
        v = rng.uniform(1.0, 5.0, 10)
        shifted, _, applied = coregister(stats(v), stats(v), max_shift_m=0.0)
        assert applied == 0.0

    def test_insufficient_overlap(self):
        a = stats(np.arange(5.0))
        b = stats(np.arange(5.0), start=2000.0)
        with pytest.raises(NoOverlapError):
            coregister(a, b, max_shift_m=100.0)

    def test_zero_variance_reported_as_undefined(self):
        flat = stats(np.full(10, 1.0))
        with pytest.raises(UndefinedCorrelationError):
            coregister(flat, flat, max_shift_m=0.0)

    def test_negative_max_shift_rejected(self):
        s = stats(np.arange(5.0))
        with pytest.raises(ValueError):
            coregister(s, s, max_shift_m=-1.0)

    def test_ties_prefer_smaller_shift(self):
        # strictly periodic values: every shift scores r = 1, keep k = 0
        v = np.tile([1.0, 2.0, 3.0, 4.0], 6)
        s = stats(v)
        _, _, applied = coregister(s, s, max_shift_m=400.0)
        assert applied == 0.0
