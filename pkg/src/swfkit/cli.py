"""Command-line entry point: render, evaluate, aggregate, gen-noise, make-hrirs."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .binaural import load_hrir_set, normalize_peak, render_direct_reference, synthetic_hrir_set, write_hrir_set
from .errors import SwfkitError
from .geometry import LAYOUT_ORDER, build_octahedron_hierarchy, direction_from_table, load_layout, evaluation_directions
from .harness import (
    METRIC_COLUMNS,
    ExperimentConfig,
    Programme,
    aggregate,
    generate_pink_noise,
    read_metrics_csv,
    render_system,
    run_experiment,
    write_summary,
)
from .shcodec import encode_plane_wave, write_ambisonic_wav
from .signals import DEFAULT_SAMPLE_RATE, write_wav
from .swf import SwfTransform, encode_gains

AGGREGATE_METRICS = ("itd_error_s", "ild_error_db", "iacc_error", "psd_phon", "re_mag", "rv_mag", "spread_deg")


def _programme_signal(args, fs):
    if args.wav:
        return Programme("wav", path=args.wav).load(fs)
    return generate_pink_noise(args.duration, fs, args.seed)


def cmd_render(args) -> int:
    fs = args.sample_rate
    d = direction_from_table(args.azimuth, args.elevation)
    s = _programme_signal(args, fs)
    if args.hrir_manifest:
        hrirs = load_hrir_set(args.hrir_manifest)
    else:
        hrirs = synthetic_hrir_set([d, *load_layout(args.layout).directions], sample_rate=fs)
    config = ExperimentConfig(sample_rate=fs, finest_level=args.finest_level, lifting=args.lifting,
                              crossover_hz=args.crossover)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    feeds, raw = render_system(args.technique, args.layout, d, s, hrirs, config)
    ref = render_direct_reference(s, d, hrirs, fs)
    write_wav(out / "feeds.wav", feeds.data, fs, args.subtype)
    write_wav(out / "binaural.wav", normalize_peak(raw, args.normalise_dbfs).as_array(), fs, args.subtype)
    write_wav(out / "reference.wav", normalize_peak(ref, args.normalise_dbfs).as_array(), fs, args.subtype)
    if args.technique == "ambisonics":
        order = LAYOUT_ORDER[args.layout]
        write_ambisonic_wav(out / "ambisonic.wav", encode_plane_wave(order, d, s, fs), args.subtype)
    else:
        h = build_octahedron_hierarchy(args.finest_level)
        SwfTransform(h, args.lifting).analysis(encode_gains(h, d)).write_csv(out / "swf_coefficients.csv")
    print(f"wrote {args.technique}/{args.layout} at {d} to {out}")
    return 0


def cmd_evaluate(args) -> int:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.out_dir:
        config.output_dir = args.out_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.hrir_manifest:
        config.hrir_manifest = args.hrir_manifest
    if args.write_wavs:
        config.write_wavs = True
    result = run_experiment(config)
    print(f"{len(result.records)} metric rows, {len(result.vectors)} vector rows, "
          f"{len(result.failures)} failures -> {config.output_dir}")
    return 0 if result.clean else 1


def cmd_aggregate(args) -> int:
    records = read_metrics_csv(args.metrics)
    group_by = tuple(args.group_by.split(","))
    rows = []
    for m in args.metric or AGGREGATE_METRICS:
        if m not in METRIC_COLUMNS:
            raise SwfkitError(f"unknown metric column {m!r}")
        rows += aggregate(records, m, group_by, n_resamples=args.resamples, seed=args.seed)
    out = Path(args.out) if args.out else Path(args.metrics).with_name("summary.csv")
    write_summary(rows, out, group_by, header=f"# swfkit {__version__} summary of {Path(args.metrics).name}")
    print(f"{len(rows)} summary rows -> {out}")
    return 0


def cmd_gen_noise(args) -> int:
    s = generate_pink_noise(args.duration, args.sample_rate, args.seed)
    write_wav(args.out, s[None, :], args.sample_rate, args.subtype)
    print(f"{s.size} samples -> {args.out}")
    return 0


def cmd_make_hrirs(args) -> int:
    extra = list(evaluation_directions())
    for name in LAYOUT_ORDER:
        extra += list(load_layout(name).directions)
    h = synthetic_hrir_set(extra, n_grid=args.grid, sample_rate=args.sample_rate)
    manifest = write_hrir_set(h, args.out_dir)
    print(f"{len(h)} spherical-head HRIRs -> {manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swfkit", description=__doc__)
    p.add_argument("--version", action="version", version=f"swfkit {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def programme_args(q):
        q.add_argument("--duration", type=float, default=0.1, help="pink-noise length in seconds")
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--wav", help="use a WAV programme instead of pink noise")
        q.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
        q.add_argument("--subtype", choices=("float32", "int24"), default="float32")

    r = sub.add_parser("render", help="render one condition to WAV files")
    r.add_argument("--technique", choices=("ambisonics", "swf"), required=True)
    r.add_argument("--layout", choices=sorted(LAYOUT_ORDER), required=True)
    r.add_argument("--azimuth", type=float, default=0.0)
    r.add_argument("--elevation", type=float, default=0.0)
    r.add_argument("--hrir-manifest", default="")
    r.add_argument("--out-dir", default="render")
    r.add_argument("--finest-level", type=int, default=2)
    r.add_argument("--lifting", default="averaging")
    r.add_argument("--crossover", type=float, default=800.0)
    r.add_argument("--normalise-dbfs", type=float, default=-1.0)
    programme_args(r)
    r.set_defaults(func=cmd_render)

    e = sub.add_parser("evaluate", help="full sweep -> metrics.csv, vectors.csv, failures.csv")
    e.add_argument("--config", help="experiment config JSON")
    e.add_argument("--out-dir")
    e.add_argument("--seed", type=int)
    e.add_argument("--jobs", type=int)
    e.add_argument("--hrir-manifest")
    e.add_argument("--write-wavs", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("aggregate", help="metrics.csv -> summary.csv (medians, bootstrap CIs)")
    a.add_argument("metrics")
    a.add_argument("--out")
    a.add_argument("--metric", action="append", help="repeatable; default: all metric columns")
    a.add_argument("--group-by", default="technique,layout")
    a.add_argument("--resamples", type=int, default=10000)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_aggregate)

    g = sub.add_parser("gen-noise", help="write seeded pink noise to a mono WAV")
    g.add_argument("out")
    programme_args(g)
    g.set_defaults(func=cmd_gen_noise)

    h = sub.add_parser("make-hrirs", help="write a synthetic spherical-head HRIR set + manifest")
    h.add_argument("out_dir")
    h.add_argument("--grid", type=int, default=8802, help="Fibonacci grid size")
    h.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    h.set_defaults(func=cmd_make_hrirs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SwfkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
