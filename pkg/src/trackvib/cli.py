"""Command line front end.

    trackvib simulate --config run.json --out rundir [--seed N]
    trackvib process --records rundir --out outdir [--chord D] [--cutoff HZ]
                     [--window M] [--vref MPS] [--wheelbase M]
                     [--speed-file CSV]
    trackvib compare --estimated est.trc --reference ref.trc --out outdir
                     [--window M] [--max-shift M]
    trackvib export-geojson --windows windows.csv --column NAME
                     --polyline line.json --out map.geojson
                     [--thresholds A,B,...]

Exit codes: 0 success, 1 data error (unreadable/inconsistent inputs,
processing failures), 2 usage error (bad flags or arguments).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio, pipeline
from .errors import TrackVibError
from .speed import SpeedProfile
from .pipeline import chord_ground_truth
from .synthesizer import (SENSOR_SPECS, ImpulseEvent, SensorSpec, SimConfig,
                          add_impulses, add_sensor_noise, simulate_run,
                          synth_profile)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _sensor_from_config(cfg: dict) -> SensorSpec | None:
    sensor = cfg.get("sensor")
    if sensor is None:
        return None
    if isinstance(sensor, str):
        return SENSOR_SPECS[sensor]
    return SensorSpec(sensor.get("name", "custom"),
                      sensor.get("location", "bogie"),
                      float(sensor["range_g"]),
                      float(sensor["noise_floor_ug_sqrthz"]))


def cmd_simulate(args) -> int:
    cfg = fileio.load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    profile = synth_profile(
        cfg["length_m"], cfg["profile"], seed=seed,
        lateral_spec=cfg.get("lateral_profile"),
        lr_correlation=float(cfg.get("lr_correlation", 0.7)),
        geo_polyline=cfg.get("geo_polyline"),
    )
    sensor = _sensor_from_config(cfg)
    events = tuple(ImpulseEvent(float(e["position_m"]), float(e["amplitude_g"]),
                                float(e["duration_ms"]))
                   for e in cfg.get("impulses", []))
    sim_config = SimConfig(
        speed_plan=tuple((k[0], k[1]) for k in cfg["speed_plan"]),
        sample_rate_hz=float(cfg.get("sample_rate_hz", 2560.0)),
        wheelbase_m=float(cfg.get("wheelbase_m", 2.5)),
        impulse_events=events,
        lateral_disturbance=cfg.get("lateral_disturbance"),
        seed=seed,
        sensor_location=sensor.location if sensor else "bogie",
    )
    sim = simulate_run(profile, sim_config)

    cfg_echo = dict(cfg)
    cfg_echo["seed"] = seed
    block_s = float(cfg.get("block_seconds", 10.0))
    n_block = int(round(block_s * sim_config.sample_rate_hz))
    sensor_meta = ({"name": sensor.name, "location": sensor.location,
                    "range_g": sensor.range_g,
                    "noise_floor_ug_sqrthz": sensor.noise_floor_ug_sqrthz}
                   if sensor else None)
    add_noise = bool(cfg.get("add_noise", sensor is not None)) and sensor

    from dataclasses import replace
    for cid, ts in sorted(sim.channels.items()):
        if "vertical" in cid and events:
            ts = add_impulses(ts, events, sim.wheel_positions[cid])
        if add_noise:
            ts, _ = add_sensor_noise(ts, sensor, seed)
        for k in range(0, len(ts), n_block):
            block = replace(ts, samples=ts.samples[k:k + n_block],
                            start_time_s=k / sim_config.sample_rate_hz)
            name = f"{cid}_b{k // n_block:04d}.rec"
            fileio.write_record(out / name, block, sensor=sensor_meta,
                                params={"config": cfg_echo})

    truth = chord_ground_truth(profile, sim)
    truth.metadata["config"] = cfg_echo
    fileio.write_trc(out / "ground_truth.trc", truth)
    with open(out / "config_used.json", "w", encoding="utf-8") as fh:
        json.dump(cfg_echo, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if profile.geo_polyline:
        with open(out / "polyline.json", "w", encoding="utf-8") as fh:
            json.dump([list(p) for p in profile.geo_polyline], fh)
            fh.write("\n")
    n_ch = len(sim.channels)
    print(f"wrote {n_ch} channels x {len(range(0, len(ts), n_block))} blocks "
          f"to {out}")
    return EXIT_OK


def _read_speed_file(path, n: int, rate_hz: float, wheelbase: float) -> SpeedProfile:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("time"):
                continue
            t, _, v = line.partition(",")
            rows.append((float(t), float(v)))
    if len(rows) < 2:
        raise fileio.FormatError(f"{path}: need at least two time,speed rows")
    data = np.asarray(rows)
    times = np.arange(n) / rate_hz
    speeds = np.interp(times, data[:, 0], data[:, 1])
    return SpeedProfile(speeds, rate_hz, wheelbase, np.ones(n, dtype=bool))


def cmd_process(args) -> int:
    records = Path(args.records)
    paths = sorted(records.glob("*.rec"))
    if not paths:
        raise TrackVibError(f"no .rec files in {records}")
    channels: dict[str, list] = {}
    for p in paths:
        ts, _ = fileio.read_record(p)
        channels.setdefault(ts.channel_id, []).append(ts)
    for blocks in channels.values():
        blocks.sort(key=lambda b: b.start_time_s)

    if args.chord is not None:
        chords = (args.chord,)
        lateral = (args.chord,)
    else:
        chords = (10.0, 35.0)
        lateral = (10.0,)
    opts = pipeline.ProcessOptions(
        chords_m=chords, lateral_chords_m=lateral, cutoff_hz=args.cutoff,
        v_ref_mps=args.vref, window_m=args.window, wheelbase_m=args.wheelbase,
    )
    speed_override = None
    if args.speed_file:
        n0 = min(sum(len(b) for b in blocks) for blocks in channels.values())
        factor = int(round(next(iter(channels.values()))[0].sample_rate_hz
                           / opts.working_rate_hz))
        # gap bridging can stretch a merged channel past the block sum,
        # so overshoot; process_records trims the excess
        speed_override = _read_speed_file(args.speed_file, n0 // factor + 256,
                                          opts.working_rate_hz, args.wheelbase)

    result = pipeline.process_records(channels, opts, speed_override)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_trc(out / "estimated.trc", result.to_trc())
    fileio.write_windows(out / "windows.csv", result.maxima,
                         params={k: v for k, v in result.params.items()
                                 if not k.startswith("_")})
    with open(out / "speed.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# params: {json.dumps(result.params['speed_source'])}\n")
        fh.write("time_s,speed_mps,valid\n")
        sp = result.speed
        for i, (v, ok) in enumerate(zip(sp.speeds_mps, sp.valid)):
            fh.write(f"{i / sp.sample_rate_hz!r},{float(v)!r},{int(ok)}\n")
    for label, series in result.displacements.items():
        with open(out / f"displacement_{label}.csv", "w", encoding="utf-8") as fh:
            fh.write(f"# units: {series.units}\n")
            fh.write("distance_m,value,valid\n")
            for x, v, ok in zip(series.positions(), series.values, series.valid):
                fh.write(f"{float(x)!r},{float(v)!r},{int(ok)}\n")
    n_cols = len(result.alignments)
    first = next(iter(result.alignments.values()))
    print(f"processed {len(channels)} channels -> {n_cols} geometry columns "
          f"on {len(first)} grid points, output in {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    est = fileio.read_trc(args.estimated)
    ref = fileio.read_trc(args.reference)
    skipped: dict = {}
    results = pipeline.compare_trc(est, ref, window_m=args.window,
                                   max_shift_m=args.max_shift, skipped=skipped)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_report_json(out / "compare.json",
                             {c: rep for c, (rep, _) in results.items()})
    for column, (report, shift) in results.items():
        fileio.write_report_csv(out / f"compare_{column}.csv", report)
        print(f"{column}: r={report.pearson_r:.3f} slope={report.slope:.3f} "
              f"intercept={report.intercept:.3f} n={report.n_windows} "
              f"shift={shift:g} m")
    for column, reason in skipped.items():
        print(f"{column}: skipped ({reason})")
    return EXIT_OK


def _read_polyline(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):   # GeoJSON Feature or geometry, [lon, lat] order
        geom = data.get("geometry", data)
        coords = geom.get("coordinates", [])
        return [(lat, lon) for lon, lat in coords]
    return [(p[0], p[1]) for p in data]


def cmd_export_geojson(args) -> int:
    stats = fileio.read_windows(args.windows, args.column)
    polyline = _read_polyline(args.polyline)
    thresholds = ([float(t) for t in args.thresholds.split(",") if t]
                  if args.thresholds else [])
    collection = fileio.export_geojson(stats, polyline, thresholds,
                                       column=args.column,
                                       metadata={"source": str(args.windows)})
    fileio.write_geojson(args.out, collection)
    print(f"wrote {len(collection['features'])} features to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackvib",
        description="Track geometry from on-board vibration records.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a run from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", help="estimate geometry from record blocks")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chord", type=float, default=None,
                   help="chord length in m (default: 10 and 35)")
    p.add_argument("--cutoff", type=float, default=None,
                   help="integration high-pass cutoff in Hz (default: vref/chord)")
    p.add_argument("--window", type=float, default=100.0,
                   help="maxima window in m (default 100)")
    p.add_argument("--vref", type=float, default=3.0,
                   help="reference low speed in m/s for the cutoff rule")
    p.add_argument("--wheelbase", type=float, default=2.5)
    p.add_argument("--seed", type=int, default=None, help="unused, accepted "
                   "for symmetry with simulate")
    p.add_argument("--speed-file", default=None,
                   help="CSV time_s,speed_mps bypassing the speed estimator")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("compare", help="compare two geometry tables")
    p.add_argument("--estimated", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=float, default=100.0)
    p.add_argument("--max-shift", type=float, default=0.0,
                   help="co-registration search range in m")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-geojson", help="map windowed maxima to GeoJSON")
    p.add_argument("--windows", required=True, help="windows.csv from process")
    p.add_argument("--column", required=True)
    p.add_argument("--polyline", required=True,
                   help="JSON [[lat,lon],...] or GeoJSON LineString")
    p.add_argument("--thresholds", default="",
                   help="comma-separated ascending severity thresholds (mm)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_geojson)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TrackVibError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
