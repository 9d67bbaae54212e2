"""Experiment sweep: programme material, rendering, metrics, CSV output and bootstrap summaries."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.stats import norm

from . import __version__
from .auditory import compute_iacc_itd, compute_ild, compute_psd, signed_error
from .binaural import (
    HrirSet,
    load_hrir_set,
    normalize_peak,
    render_direct_reference,
    render_virtual_loudspeakers,
    synthetic_hrir_set,
)
from .errors import ConfigurationError, SwfkitError
from .geometry import LAYOUT_ORDER, EVALUATION_POSITIONS, Direction, direction_from_table, load_layout
from .shcodec import dual_band_decode, encode_plane_wave
from .signals import DEFAULT_SAMPLE_RATE, BinauralPair, MultichannelSignal, read_wav, write_wav
from .swf import LIFTING_FILTERS, SwfRenderer
from .vectors import SPREAD_FORMULAS, analyze_rendering

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REMAP_MODES = ("barycentric",)
SYSTEM_TECHNIQUES = ("ambisonics", "swf")
REFERENCE = "reference"
DEFAULT_CONDITIONS = tuple((t, l) for t in SYSTEM_TECHNIQUES for l in ("octahedron", "tdesign24", "lebedev50"))

METRIC_COLUMNS = (
    "technique", "layout", "azimuth", "elevation", "programme",
    "itd_error_s", "ild_error_db", "iacc_error", "psd_phon",
    "re_mag", "rv_mag", "spread_deg",
    "vector_shared", "spread_formula", "remap_mode", "lifting", "normalisation_dbfs", "hrir_set",
)
VECTOR_COLUMNS = (
    "technique", "layout", "azimuth", "elevation",
    "pressure", "energy", "rv_mag", "re_mag", "spread_deg", "spread_formula",
)
FAILURE_COLUMNS = ("technique", "layout", "azimuth", "elevation", "programme", "error")
SUMMARY_STATS = ("n", "median", "ci_low", "ci_high")


# ---------------------------------------------------------------- programme material


def generate_pink_noise(duration_s: float, sample_rate: int = DEFAULT_SAMPLE_RATE, seed: int = 0) -> np.ndarray:
    """Pink noise from seeded white noise through Kellet's parallel one-pole filter.

    Scaled to unit peak; the filter is run over a discarded warm-up segment
    so the slowest section has settled.
    """
    if duration_s <= 0:
        raise ConfigurationError("duration must be positive")
    n = int(round(duration_s * sample_rate))
    warm = 8192
    white = np.random.default_rng(seed).standard_normal(n + warm)
    poles = (0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616)
    gains = (0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980)
    pink = 0.5362 * white
    for p, g in zip(poles, gains):
        pink = pink + sps.lfilter([g], [1.0, -p], white)
    pink[1:] += 0.115926 * white[:-1]
    pink = pink[warm:]
    return pink / np.max(np.abs(pink))


@dataclass(frozen=True)
class Programme:
    """Either ``pink_noise`` (duration, seed) or ``wav`` (path)."""

    kind: str = "pink_noise"
    duration: float = 0.1
    seed: int = 0
    path: str = ""

    @property
    def id(self) -> str:
        if self.kind == "pink_noise":
            return f"pink{self.duration:g}s_seed{self.seed}"
        return Path(self.path).stem

    def load(self, sample_rate: int) -> np.ndarray:
        if self.kind == "pink_noise":
            return generate_pink_noise(self.duration, sample_rate, self.seed)
        data, fs = read_wav(self.path)
        if fs != sample_rate:
            raise ConfigurationError(f"programme {self.path} is {fs} Hz, experiment runs at {sample_rate} Hz")
        return data.mean(axis=0)


# ---------------------------------------------------------------- configuration


@dataclass
class ExperimentConfig:
    conditions: list = field(default_factory=lambda: [list(c) for c in DEFAULT_CONDITIONS])
    positions: list = field(default_factory=lambda: [list(p) for p in EVALUATION_POSITIONS])
    programmes: list = field(default_factory=lambda: [{"kind": "pink_noise", "duration": 0.1, "seed": 0}])
    hrir_manifest: str = ""  # empty: synthetic spherical-head set
    sample_rate: int = DEFAULT_SAMPLE_RATE
    output_dir: str = "results"
    finest_level: int = 2
    remap_mode: str = "barycentric"
    spread_formula: str = "arccos"
    lifting: str = "averaging"
    ambisonic_energy: str = "broadband"
    crossover_hz: float = 800.0
    normalisation_dbfs: float = -1.0
    write_wavs: bool = False
    stimulus_rms_dbfs: float = None  # optional extra export of rms-normalised stimuli
    seed: int = 0  # added to every pink-noise programme seed
    jobs: int = 1

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        doc = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    def config_hash(self) -> str:
        # jobs and output location do not change results
        doc = {k: v for k, v in asdict(self).items() if k not in ("jobs", "output_dir")}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    def directions(self):
        return [direction_from_table(az, el) for az, el in self.positions]

    def programme_list(self):
        """Programmes with pink-noise seeds offset by the experiment seed."""
        out = []
        for p in self.programmes:
            prog = Programme(**p)
            if prog.kind == "pink_noise":
                prog = Programme(prog.kind, prog.duration, prog.seed + self.seed, prog.path)
            out.append(prog)
        return out

    def validate(self):
        if not self.conditions or not self.positions or not self.programmes:
            raise ConfigurationError("empty condition grid")
        for tech, lay in self.conditions:
            if tech == REFERENCE:
                continue
            if tech not in SYSTEM_TECHNIQUES:
                raise ConfigurationError(f"unknown technique {tech!r}")
            if lay not in LAYOUT_ORDER:
                raise ConfigurationError(f"unknown layout {lay!r}")
        if self.remap_mode not in REMAP_MODES:
            raise ConfigurationError(f"unknown remap mode {self.remap_mode!r}; expected one of {REMAP_MODES}")
        if self.spread_formula not in SPREAD_FORMULAS:
            raise ConfigurationError(f"unknown spread formula {self.spread_formula!r}")
        if self.lifting not in LIFTING_FILTERS:
            raise ConfigurationError(f"unknown lifting filter {self.lifting!r}")
        if self.hrir_manifest and not Path(self.hrir_manifest).is_file():
            raise ConfigurationError(f"HRIR manifest {self.hrir_manifest} not found")
        for p in self.programme_list():
            if p.kind not in ("pink_noise", "wav"):
                raise ConfigurationError(f"unknown programme kind {p.kind!r}")
            if p.kind == "wav" and not Path(p.path).is_file():
                raise ConfigurationError(f"programme file {p.path} not found")
        self.directions()


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class MetricRecord:
    technique: str
    layout: str
    azimuth: float
    elevation: float
    programme: str
    itd_error_s: float
    ild_error_db: float
    iacc_error: float
    psd_phon: float
    re_mag: float
    rv_mag: float
    spread_deg: float
    vector_shared: bool = True  # vector columns are programme independent
    spread_formula: str = "arccos"
    remap_mode: str = "barycentric"
    lifting: str = "averaging"
    normalisation_dbfs: float = -1.0
    hrir_set: str = ""

    def key(self):
        return (self.technique, self.layout, self.azimuth, self.elevation, self.programme)

    def row(self):
        return [_fmt(getattr(self, c)) for c in METRIC_COLUMNS]


@dataclass(frozen=True)
class ExperimentResult:
    records: list
    vectors: list  # dict rows keyed by VECTOR_COLUMNS
    failures: list  # dict rows keyed by FAILURE_COLUMNS

    @property
    def clean(self) -> bool:
        return not self.failures


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


# ---------------------------------------------------------------- rendering


def render_system(technique: str, layout_name: str, d: Direction, s, hrirs: HrirSet,
                  config: ExperimentConfig):
    """Loudspeaker feeds and (un-normalised) binaural pair for one system."""
    layout = load_layout(layout_name)
    fs = config.sample_rate
    if technique == "ambisonics":
        feeds = dual_band_decode(encode_plane_wave(layout.order, d, s, fs), layout, config.crossover_hz)
    elif technique == "swf":
        feeds = SwfRenderer(layout, config.finest_level, lifting=config.lifting).render(d, s, fs)
    else:
        raise ConfigurationError(f"unknown technique {technique!r}")
    return feeds, render_virtual_loudspeakers(feeds, layout, hrirs)


def _wav_stem(technique, layout, d, programme):
    return f"{technique}_{layout}_az{d.azimuth:g}_el{d.elevation:g}_{programme}"


def _rms_scaled(p: BinauralPair, target_dbfs: float) -> BinauralPair:
    rms = np.sqrt(0.5 * (np.mean(p.left**2) + np.mean(p.right**2)))
    return p.scaled(10 ** (target_dbfs / 20) / rms)


def _run_condition(technique, layout, d, programmes, signals, hrirs, config, out_dir):
    """All programmes of one (technique, layout, position); returns (records, vector row, failures)."""
    records, failures = [], []
    base = dict(technique=technique, layout=layout, azimuth=d.azimuth, elevation=d.elevation)
    try:
        if technique == REFERENCE:
            vec = dict(pressure=1.0, energy=1.0, rv_mag=1.0, re_mag=1.0, spread_deg=0.0)
        else:
            v = analyze_rendering(technique, layout, d, config.spread_formula, config.ambisonic_energy,
                                  config.crossover_hz, config.finest_level)
            vec = dict(pressure=v.pressure, energy=v.energy, rv_mag=v.rv_mag, re_mag=v.re_mag, spread_deg=v.spread_deg)
        vec_row = {**base, **vec, "spread_formula": config.spread_formula}
    except Exception as exc:  # logged and reported, sweep continues
        for prog in programmes:
            failures.append({**base, "programme": prog.id, "error": f"{type(exc).__name__}: {exc}"})
        return records, None, failures

    for prog in programmes:
        try:
            s = signals[prog.id]
            ref = normalize_peak(render_direct_reference(s, d, hrirs, config.sample_rate), config.normalisation_dbfs)
            if technique == REFERENCE:
                feeds, sys_pair = None, ref
            else:
                feeds, raw = render_system(technique, layout, d, s, hrirs, config)
                sys_pair = normalize_peak(raw, config.normalisation_dbfs)
            a_sys, a_ref = compute_iacc_itd(sys_pair), compute_iacc_itd(ref)
            rec = MetricRecord(
                **base,
                programme=prog.id,
                itd_error_s=signed_error(a_sys.itd, a_ref.itd),
                ild_error_db=signed_error(compute_ild(sys_pair).broadband_hf, compute_ild(ref).broadband_hf),
                iacc_error=signed_error(a_sys.iacc, a_ref.iacc),
                psd_phon=compute_psd(sys_pair, ref),
                re_mag=vec["re_mag"],
                rv_mag=vec["rv_mag"],
                spread_deg=vec["spread_deg"],
                spread_formula=config.spread_formula,
                remap_mode=config.remap_mode,
                lifting=config.lifting,
                normalisation_dbfs=float(config.normalisation_dbfs),
                hrir_set=hrirs.name,
            )
            records.append(rec)
            if config.write_wavs:
                wav_dir = Path(out_dir) / "wav"
                wav_dir.mkdir(parents=True, exist_ok=True)
                stem = _wav_stem(technique, layout, d, prog.id)
                write_wav(wav_dir / f"{stem}_binaural.wav", sys_pair.as_array(), config.sample_rate)
                if feeds is not None:
                    write_wav(wav_dir / f"{stem}_feeds.wav", feeds.data, config.sample_rate)
                if config.stimulus_rms_dbfs is not None:
                    write_wav(wav_dir / f"{stem}_stimulus.wav",
                              _rms_scaled(sys_pair, config.stimulus_rms_dbfs).as_array(), config.sample_rate)
        except Exception as exc:
            log.error("condition %s/%s %s %s failed: %s", technique, layout, d, prog.id, exc)
            failures.append({**base, "programme": prog.id, "error": f"{type(exc).__name__}: {exc}"})
    return records, vec_row, failures


_WORKER = {}


def _init_worker(hrirs, signals, config, out_dir):
    _WORKER.update(hrirs=hrirs, signals=signals, config=config, out_dir=out_dir)


def _worker(job):
    technique, layout, d = job
    w = _WORKER
    return _run_condition(technique, layout, d, w["config"].programme_list(), w["signals"], w["hrirs"],
                          w["config"], w["out_dir"])


def load_hrirs(config: ExperimentConfig) -> HrirSet:
    """The configured HRIR set, or a synthetic spherical-head set containing every needed direction."""
    if config.hrir_manifest:
        return load_hrir_set(config.hrir_manifest)
    extra = list(config.directions())
    for tech, lay in config.conditions:
        if tech != REFERENCE:
            extra += list(load_layout(lay).directions)
    log.warning("no HRIR manifest configured; using a synthetic spherical-head set")
    return synthetic_hrir_set(extra, n_grid=8802, sample_rate=config.sample_rate)


def run_experiment(config: ExperimentConfig, hrirs: HrirSet = None, write: bool = True) -> ExperimentResult:
    """Sweep conditions x positions x programmes; optionally write CSVs into ``config.output_dir``."""
    config.validate()
    hrirs = hrirs or load_hrirs(config)
    if hrirs.sample_rate != config.sample_rate:
        raise ConfigurationError(f"HRIR set is {hrirs.sample_rate} Hz, config says {config.sample_rate} Hz")
    out_dir = Path(config.output_dir)
    programmes = config.programme_list()
    signals = {p.id: p.load(config.sample_rate) for p in programmes}
    jobs = [(t, l, d) for t, l in config.conditions for d in config.directions()]

    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs, initializer=_init_worker,
                                 initargs=(hrirs, signals, config, str(out_dir))) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_run_condition(t, l, d, programmes, signals, hrirs, config, out_dir) for t, l, d in jobs]

    records = sorted((r for res in results for r in res[0]), key=MetricRecord.key)
    vectors = sorted((res[1] for res in results if res[1] is not None),
                     key=lambda v: (v["technique"], v["layout"], v["azimuth"], v["elevation"]))
    failures = sorted((f for res in results for f in res[2]),
                      key=lambda f: tuple(f[c] for c in FAILURE_COLUMNS))
    result = ExperimentResult(records, vectors, failures)
    if write:
        write_results(result, config)
    return result


def _header(config):
    return f"# swfkit {__version__} schema {SCHEMA_VERSION} config {config.config_hash()}"


def _write_csv(path, header, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\r\n")
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def write_results(result: ExperimentResult, config: ExperimentConfig):
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = _header(config)
    _write_csv(out / "metrics.csv", head, METRIC_COLUMNS, [r.row() for r in result.records])
    _write_csv(out / "vectors.csv", head, VECTOR_COLUMNS,
               [[_fmt(v[c]) for c in VECTOR_COLUMNS] for v in result.vectors])
    _write_csv(out / "failures.csv", head, FAILURE_COLUMNS,
               [[_fmt(f[c]) for c in FAILURE_COLUMNS] for f in result.failures])
    config.to_json(out / "config.json")


def read_metrics_csv(path) -> list:
    """Rows of a metrics CSV as dicts with numeric columns parsed."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = []
    for row in csv.DictReader(lines):
        for k in ("azimuth", "elevation", "itd_error_s", "ild_error_db", "iacc_error", "psd_phon",
                  "re_mag", "rv_mag", "spread_deg", "normalisation_dbfs"):
            if k in row:
                row[k] = float(row[k])
        rows.append(row)
    return rows


# ---------------------------------------------------------------- aggregation


@dataclass(frozen=True)
class AggregateRow:
    metric: str
    group: tuple
    n: int
    median: float
    ci_low: float
    ci_high: float


def bootstrap_median_ci(values, n_resamples: int = 10000, confidence: float = 0.95, seed: int = 0):
    """Median and bias-corrected percentile bootstrap interval of the median.

    Values are sorted first, so the result does not depend on input order.
    The interval is widened if needed so it always contains the median.
    """
    x = np.sort(np.asarray(values, dtype=float))
    med = float(np.median(x))
    rng = np.random.default_rng(seed)
    boot = np.median(x[rng.integers(0, len(x), size=(n_resamples, len(x)))], axis=1)
    # ties are frequent for medians of small samples; count them half
    prop = (np.sum(boot < med) + 0.5 * np.sum(boot == med)) / n_resamples
    prop = min(max(prop, 1.0 / (n_resamples + 1)), n_resamples / (n_resamples + 1))
    z0 = norm.ppf(prop)
    alpha = 1.0 - confidence
    lo_q = norm.cdf(2 * z0 + norm.ppf(alpha / 2))
    hi_q = norm.cdf(2 * z0 + norm.ppf(1 - alpha / 2))
    lo, hi = np.quantile(boot, [lo_q, hi_q])
    return med, float(min(lo, med)), float(max(hi, med))


def _get(rec, key):
    return rec[key] if isinstance(rec, dict) else getattr(rec, key)


def aggregate(records, metric: str, group_by=("technique", "layout"), n_resamples: int = 10000,
              seed: int = 0, min_size: int = 3) -> list:
    """Median and 95 % bootstrap interval of ``metric`` per group, groups sorted by key."""
    groups = {}
    for r in records:
        v = float(_get(r, metric))
        if math.isnan(v):
            continue
        groups.setdefault(tuple(_get(r, g) for g in group_by), []).append(v)
    out = []
    for key in sorted(groups):
        vals = groups[key]
        if len(vals) < min_size:
            log.warning("group %s has %d %s values (< %d); skipped", key, len(vals), metric, min_size)
            continue
        med, lo, hi = bootstrap_median_ci(vals, n_resamples, seed=seed)
        out.append(AggregateRow(metric, key, len(vals), med, lo, hi))
    return out


def write_summary(rows, path, group_by=("technique", "layout"), header: str = None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\r\n")
        w = csv.writer(fh)
        w.writerow(["metric", *group_by, *SUMMARY_STATS])
        for r in rows:
            w.writerow([r.metric, *r.group, r.n, _fmt(r.median), _fmt(r.ci_low), _fmt(r.ci_high)])
