"""Round-trip and validation tests for every file format."""

import json

import numpy as np
import pytest

from trackvib.errors import FormatError
from trackvib.fileio import (TRC_SPACING_M, TrcData, export_geojson,
                             haversine_m, load_config, read_record, read_trc,
                             read_windows, write_geojson, write_record,
                             write_trc, write_windows)
from trackvib.geometry import WindowedStats
from trackvib.timeseries import TimeSeries


class TestRecordFormat:
    def make(self, n=2560, seed=0):
        rng = np.random.default_rng(seed)
        return TimeSeries(rng.normal(size=n), 2560.0, start_time_s=30.0,
                          channel_id="bogie-front-left-vertical",
                          kind="acceleration")

    def test_round_trip_bit_exact(self, tmp_path):
        ts = self.make()
        p = tmp_path / "block.rec"
        write_record(p, ts, sensor={"name": "bogie_mems"}, params={"seed": 3})
        back, header = read_record(p)
        assert np.array_equal(back.samples, ts.samples)
        assert back.sample_rate_hz == ts.sample_rate_hz
        assert back.start_time_s == 30.0
        assert back.channel_id == ts.channel_id
        assert back.kind == "acceleration"
        assert header["sensor"]["name"] == "bogie_mems"
        assert header["params"]["seed"] == 3
        assert header["units"] == "m/s^2"

    def test_write_is_deterministic(self, tmp_path):
        ts = self.make()
        a, b = tmp_path / "a.rec", tmp_path / "b.rec"
        write_record(a, ts)
        write_record(b, ts)
        assert a.read_bytes() == b.read_bytes()

    def test_truncated_payload_rejected(self, tmp_path):
        p = tmp_path / "cut.rec"
        write_record(p, self.make())
        data = p.read_bytes()
        p.write_bytes(data[:-8])
        with pytest.raises(FormatError):
            read_record(p)

    def test_garbage_header_rejected(self, tmp_path):
        p = tmp_path / "bad.rec"
        p.write_bytes(b"not json\n" + b"\x00" * 16)
        with pytest.raises(FormatError):
            read_record(p)

    def test_missing_newline_rejected(self, tmp_path):
        p = tmp_path / "nohdr.rec"
        p.write_bytes(b"\x00" * 64)
        with pytest.raises(FormatError):
            read_record(p)

    def test_units_kind_mismatch_rejected(self, tmp_path):
        p = tmp_path / "units.rec"
        header = {"channel_id": "c", "kind": "acceleration", "n_samples": 0,
                  "sample_rate_hz": 2560.0, "start_time_s": 0.0, "units": "m"}
        p.write_bytes(json.dumps(header).encode() + b"\n")
        with pytest.raises(FormatError):
            read_record(p)


class TestTrcFormat:
    def make(self, n=100):
        rng = np.random.default_rng(1)
        d = TRC_SPACING_M * np.arange(n)
        return TrcData(d, {
            "VA10_left_mm": rng.normal(size=n),
            "VA10_right_mm": rng.normal(size=n),
            "HA10_left_mm": rng.normal(size=n),
            "speed_mps": np.full(n, 10.0),
        }, {"source": "synthesizer", "config": {"seed": 5}})

    def test_round_trip_bit_exact(self, tmp_path):
        trc = self.make()
        trc.columns["VA10_left_mm"][3] = np.nan   # invalid sample survives
        p = tmp_path / "run.trc"
        write_trc(p, trc)
        back = read_trc(p)
        assert np.array_equal(back.distance_m, trc.distance_m)
        for name, col in trc.columns.items():
            assert np.array_equal(back.columns[name], col, equal_nan=True), name
        assert back.metadata["source"] == "synthesizer"
        assert back.metadata["config"] == {"seed": 5}

    def test_no_numpy_reprs_leak_into_file(self, tmp_path):
        p = tmp_path / "run.trc"
        write_trc(p, self.make())
        text = p.read_text()
        assert "np.float64" not in text
        assert "float64(" not in text

    def test_geometry_columns_listed(self):
        trc = self.make()
        assert set(trc.geometry_columns()) == {"VA10_left_mm", "VA10_right_mm",
                                               "HA10_left_mm"}

    def test_fractional_chord_column_accepted(self, tmp_path):
        n = 10
        trc = TrcData(TRC_SPACING_M * np.arange(n),
                      {"VA7.5_left_mm": np.zeros(n)})
        p = tmp_path / "frac.trc"
        write_trc(p, trc)
        assert read_trc(p).geometry_columns() == ["VA7.5_left_mm"]

    def test_bad_stride_rejected(self, tmp_path):
        trc = self.make()
        trc.distance_m = trc.distance_m * 2.0   # 0.5 m steps
        with pytest.raises(FormatError):
            write_trc(tmp_path / "bad.trc", trc)

    def test_unknown_column_rejected(self, tmp_path):
        n = 10
        trc = TrcData(TRC_SPACING_M * np.arange(n), {"twist_mm": np.zeros(n)})
        with pytest.raises(FormatError):
            write_trc(tmp_path / "bad.trc", trc)

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "ragged.trc"
        p.write_text("distance_m,VA10_left_mm\n0.0,1.0\n0.25\n")
        with pytest.raises(FormatError):
            read_trc(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.trc"
        p.write_text("")
        with pytest.raises(FormatError):
            read_trc(p)


class TestWindowsCsv:
    def make_stats(self, values, start=0.0):
        values = np.asarray(values, dtype=float)
        n = values.size
        return WindowedStats(100.0, start + 100.0 * np.arange(n), values,
                             np.ones(n))

    def test_round_trip(self, tmp_path):
        p = tmp_path / "windows.csv"
        a = self.make_stats([1.5, 2.5, 3.5])
        b = self.make_stats([0.5, 0.25, 0.125], start=300.0)
        write_windows(p, {"VA10_left_mm": a, "VA35_left_mm": b},
                      params={"window_m": 100.0})
        ra = read_windows(p, "VA10_left_mm")
        rb = read_windows(p, "VA35_left_mm")
        assert np.array_equal(ra.starts_m, a.starts_m)
        assert np.array_equal(ra.values, a.values)
        assert np.array_equal(rb.starts_m, b.starts_m)
        assert rb.window_m == 100.0
        assert "np.float64" not in p.read_text()

    def test_missing_column(self, tmp_path):
        p = tmp_path / "windows.csv"
        write_windows(p, {"VA10_left_mm": self.make_stats([1.0, 2.0])})
        with pytest.raises(FormatError):
            read_windows(p, "HA10_left_mm")

    def test_non_windows_file_rejected(self, tmp_path):
        p = tmp_path / "other.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_windows(p, "a")


class TestLoadConfig:
    def good(self):
        return {
            "length_m": 500.0,
            "profile": {"type": "noise", "band_cycles_per_m": [0.02, 0.5],
                        "rms_mm": 3.0},
            "speed_plan": [[0.0, 10.0], [60.0, 10.0]],
        }

    def write(self, tmp_path, cfg):
        p = tmp_path / "config.json"
        p.write_text(json.dumps(cfg))
        return p

    def test_good_config_loads(self, tmp_path):
        cfg = load_config(self.write(tmp_path, self.good()))
        assert cfg["length_m"] == 500.0

    def test_missing_field(self, tmp_path):
        cfg = self.good()
        del cfg["speed_plan"]
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))

    def test_bad_plan_knot(self, tmp_path):
        cfg = self.good()
        cfg["speed_plan"] = [[0.0, 10.0], [60.0]]
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))

    def test_negative_speed(self, tmp_path):
        cfg = self.good()
        cfg["speed_plan"] = [[0.0, -1.0], [60.0, 10.0]]
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))

    def test_unknown_sensor(self, tmp_path):
        cfg = self.good()
        cfg["sensor"] = "laser_doppler"
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))

    def test_known_sensor_ok(self, tmp_path):
        cfg = self.good()
        cfg["sensor"] = "bogie_mems"
        assert load_config(self.write(tmp_path, cfg))["sensor"] == "bogie_mems"

    def test_bad_profile_type(self, tmp_path):
        cfg = self.good()
        cfg["profile"] = {"type": "fractal"}
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "config.json"
        p.write_text("{not json")
        with pytest.raises(FormatError):
            load_config(p)

    def test_incomplete_impulse(self, tmp_path):
        cfg = self.good()
        cfg["impulses"] = [{"position_m": 100.0}]
        with pytest.raises(FormatError):
            load_config(self.write(tmp_path, cfg))


class TestGeoJson:
    def straight_polyline(self, length_m=650.0):
        # due-north line: 1 degree latitude is ~111.2 km
        dlat = length_m / (np.pi * 6371000.0 / 180.0)
        return [(47.0, 8.0), (47.0 + dlat, 8.0)]

    def make_stats(self):
        return WindowedStats(100.0, 100.0 * np.arange(6),
                             np.array([1.0, 5.0, 9.0, 13.0, 2.0, np.nan]),
                             np.array([1.0, 1.0, 1.0, 1.0, 1.0, 0.1]))

    def test_feature_collection_shape(self):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=(8.0, 12.0), column="VA10_left_mm")
        assert fc["type"] == "FeatureCollection"
        assert len(fc["features"]) == 6
        f = fc["features"][0]
        assert f["geometry"]["type"] == "LineString"
        assert f["properties"]["column"] == "VA10_left_mm"

    def test_coordinates_are_lon_lat(self):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=())
        lon, lat = fc["features"][0]["geometry"]["coordinates"][0]
        assert lon == pytest.approx(8.0, abs=1e-9)
        assert lat == pytest.approx(47.0, abs=1e-6)

    def test_arc_lengths_match_windows(self):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=())
        for k, f in enumerate(fc["features"][:5]):
            coords = f["geometry"]["coordinates"]
            (lon0, lat0), (lon1, lat1) = coords[0], coords[-1]
            d = haversine_m(lat0, lon0, lat1, lon1)
            assert d == pytest.approx(100.0, rel=1e-3)

    def test_severity_counts_thresholds(self):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=(8.0, 12.0))
        sev = [f["properties"]["severity"] for f in fc["features"]]
        assert sev == [0, 0, 1, 2, 0, None]

    def test_unusable_window_value_null(self):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=(8.0,))
        assert fc["features"][5]["properties"]["value_mm"] is None

    def test_short_polyline_rejected(self):
        with pytest.raises(ValueError):
            export_geojson(self.make_stats(), self.straight_polyline(400.0),
                           thresholds=())

    def test_single_vertex_polyline_rejected(self):
        with pytest.raises(ValueError):
            export_geojson(self.make_stats(), [(47.0, 8.0)], thresholds=())

    def test_written_file_is_valid_json(self, tmp_path):
        fc = export_geojson(self.make_stats(), self.straight_polyline(),
                            thresholds=(8.0,))
        p = tmp_path / "map.geojson"
        write_geojson(p, fc)
        parsed = json.loads(p.read_text())
        assert parsed["type"] == "FeatureCollection"

    def test_haversine_known_distance(self):
        # one degree of latitude along a meridian
        d = haversine_m(47.0, 8.0, 48.0, 8.0)
        assert d == pytest.approx(np.pi * 6371000.0 / 180.0, rel=1e-9)
