"""HRIR sets, direct and virtual-loudspeaker binaural rendering, peak normalisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.spatial import cKDTree

from .errors import ConfigurationError, IngestionError, NormalizationError, ShapeError
from .geometry import Direction, LoudspeakerLayout, angular_distance, cart_to_sph, fibonacci_sphere, sph_to_cart
from .signals import DEFAULT_SAMPLE_RATE, BinauralPair, MultichannelSignal, check_rates, read_wav, write_wav

DIRECT_CONVOLUTION_MAX = 64


def convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution; direct for short operands, FFT otherwise."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    if min(x.size, h.size) <= DIRECT_CONVOLUTION_MAX:
        return np.convolve(x, h)
    return sps.fftconvolve(x, h)


@dataclass(frozen=True)
class HrirSet:
    """Head-related impulse responses on a direction grid.

    ``irs`` has shape (directions, 2, taps); index 0 of the middle axis is the left ear.
    """

    sample_rate: int
    vectors: np.ndarray
    irs: np.ndarray
    name: str = ""
    grid: str = ""
    _tree: cKDTree = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float, ndmin=2)
        irs = np.array(self.irs, dtype=float)
        if irs.ndim != 3 or irs.shape[1] != 2 or irs.shape[0] != len(vectors):
            raise ShapeError(f"irs must be (directions, 2, taps), got {irs.shape} for {len(vectors)} directions")
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        for a in (vectors, irs):
            a.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "irs", irs)
        object.__setattr__(self, "_tree", cKDTree(vectors))

    def __len__(self):
        return len(self.vectors)

    @property
    def n_taps(self) -> int:
        return self.irs.shape[2]

    def lookup(self, d):
        """Nearest grid entry: (index, great-circle distance in degrees)."""
        v = d.vector if isinstance(d, Direction) else np.asarray(d, dtype=float)
        _, idx = self._tree.query(v)
        return int(idx), float(angular_distance(self.vectors[idx], v))

    def pair(self, d):
        idx, _ = self.lookup(d)
        return self.irs[idx, 0], self.irs[idx, 1]

    def coverage_radius(self, probe: int = 20000) -> float:
        """Largest nearest-neighbour distance (deg) over a dense probe grid."""
        pts = fibonacci_sphere(probe)
        dist, _ = self._tree.query(pts)
        return float(np.degrees(2 * np.arcsin(np.max(dist) / 2)))

    def directions(self):
        az, el = cart_to_sph(self.vectors)
        return [Direction(float(a), float(e)) for a, e in zip(az, el)]


def load_hrir_set(manifest_path) -> HrirSet:
    """Load a JSON manifest of per-direction stereo WAV files.

    The manifest is either a list of ``{"azimuth", "elevation", "wav_path"}``
    objects or an object with that list under ``"entries"`` plus optional
    ``"name"`` and ``"grid"`` strings. Relative paths resolve against the
    manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise IngestionError(f"manifest {manifest_path} not found")
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    meta = {} if isinstance(doc, list) else doc
    entries = doc if isinstance(doc, list) else doc.get("entries", [])
    if not entries:
        raise IngestionError(f"manifest {manifest_path} lists no entries")

    vectors, irs, rate = [], [], None
    for i, entry in enumerate(entries):
        try:
            az, el, wav = float(entry["azimuth"]), float(entry["elevation"]), entry["wav_path"]
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"entry {i}: malformed ({exc})") from exc
        path = Path(wav) if Path(wav).is_absolute() else manifest_path.parent / wav
        label = f"entry {i} ({az:g}, {el:g}) {path}"
        if not path.is_file():
            raise IngestionError(f"{label}: file not found")
        try:
            data, fs = read_wav(path)
        except Exception as exc:  # soundfile raises its own error types
            raise IngestionError(f"{label}: unreadable ({exc})") from exc
        if data.shape[0] != 2:
            raise IngestionError(f"{label}: expected a stereo IR, got {data.shape[0]} channels")
        if rate is None:
            rate = fs
        elif fs != rate:
            raise IngestionError(f"{label}: sample rate {fs} differs from {rate}")
        if irs and data.shape[1] != irs[0].shape[1]:
            raise IngestionError(f"{label}: length {data.shape[1]} differs from {irs[0].shape[1]}")
        vectors.append(sph_to_cart(az, el))
        irs.append(data)
    return HrirSet(rate, np.array(vectors), np.stack(irs), meta.get("name", manifest_path.stem), meta.get("grid", ""))


def write_hrir_set(hrirs: HrirSet, directory, subtype: str = "float32") -> Path:
    """Write one stereo WAV per direction plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    az, el = cart_to_sph(hrirs.vectors)
    entries = []
    for i in range(len(hrirs)):
        name = f"hrir_{i:05d}.wav"
        write_wav(directory / name, hrirs.irs[i], hrirs.sample_rate, subtype)
        entries.append({"azimuth": round(float(az[i]), 12), "elevation": round(float(el[i]), 12), "wav_path": name})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"name": hrirs.name, "grid": hrirs.grid, "entries": entries}, indent=1))
    return manifest


def spherical_head_hrirs(vectors, sample_rate: int = DEFAULT_SAMPLE_RATE, n_taps: int = 256,
                         head_radius: float = 0.0875, speed_of_sound: float = 343.0,
                         bulk_delay: float = 5e-4, name: str = "spherical-head") -> HrirSet:
    """Rigid spherical head with ears at +-y (one-pole/one-zero shadow filter and
    frequency-independent Woodworth-type delays). Left/right mirror symmetric."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    nfft = max(4 * n_taps, 1024)  # long transform, truncated, keeps delay ringing from wrapping
    f = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    w = 2 * np.pi * f
    w0 = speed_of_sound / head_radius
    alpha_min, theta_min = 0.1, np.radians(150.0)
    irs = np.empty((len(vectors), 2, n_taps))
    fade = np.ones(n_taps)
    tail = n_taps // 4
    fade[-tail:] = 0.5 * (1 + np.cos(np.linspace(0, np.pi, tail)))
    for ear, axis in enumerate((np.array([0, 1.0, 0]), np.array([0, -1.0, 0]))):
        theta = np.arccos(np.clip(vectors @ axis, -1.0, 1.0))  # 0 = facing the ear
        alpha = (1 + alpha_min / 2) + (1 - alpha_min / 2) * np.cos(theta / theta_min * np.pi)
        delay = np.where(
            theta < np.pi / 2,
            -head_radius / speed_of_sound * np.cos(theta),
            head_radius / speed_of_sound * (theta - np.pi / 2),
        ) + bulk_delay
        shadow = (1 + 1j * alpha[:, None] * w / (2 * w0)) / (1 + 1j * w / (2 * w0))
        spec = shadow * np.exp(-1j * w * delay[:, None])
        irs[:, ear] = np.fft.irfft(spec, nfft, axis=1)[:, :n_taps] * fade
    return HrirSet(sample_rate, vectors, irs, name, grid=f"{len(vectors)} directions")


def synthetic_hrir_set(extra_directions=(), n_grid: int = 2000, sample_rate: int = DEFAULT_SAMPLE_RATE, **kw) -> HrirSet:
    """Spherical-head set on a Fibonacci grid plus explicitly requested directions."""
    extra = [d.vector if isinstance(d, Direction) else np.asarray(d, float) for d in extra_directions]
    grid = fibonacci_sphere(n_grid) if n_grid else np.zeros((0, 3))
    vecs = np.vstack([np.array(extra).reshape(-1, 3), grid])
    # drop grid points duplicating an explicit direction
    keep = [0] if len(vecs) else []
    for i in range(1, len(vecs)):
        if np.min(angular_distance(vecs[keep], vecs[i])) > 1e-6:
            keep.append(i)
    return spherical_head_hrirs(vecs[keep], sample_rate, **kw)


def render_direct_reference(s, d, h: HrirSet, sample_rate: int = DEFAULT_SAMPLE_RATE) -> BinauralPair:
    """Mono signal convolved with the nearest HRIR pair to ``d``."""
    check_rates(sample_rate, h.sample_rate)
    s = np.asarray(s, dtype=float).ravel()
    left, right = h.pair(d)
    return BinauralPair(convolve(s, left), convolve(s, right), h.sample_rate)


def render_virtual_loudspeakers(feeds: MultichannelSignal, layout: LoudspeakerLayout, h: HrirSet) -> BinauralPair:
    """Convolve each feed with its loudspeaker's HRIR pair and sum per ear.

    Contributions are summed in a canonical order (HRIR index, then direction),
    so permuting feeds and layout together gives bit-identical output.
    """
    if feeds.n_channels != len(layout):
        raise ShapeError(f"{feeds.n_channels} feeds for a {len(layout)}-loudspeaker layout")
    check_rates(feeds.sample_rate, h.sample_rate)
    n = feeds.n_samples + h.n_taps - 1
    idx = [h.lookup(d)[0] for d in layout.directions]
    order = sorted(range(len(layout)), key=lambda i: (idx[i], layout.directions[i].azimuth, layout.directions[i].elevation))
    left = np.zeros(n)
    right = np.zeros(n)
    for i in order:
        x = feeds.data[i]
        if not np.any(x):
            continue
        left += convolve(x, h.irs[idx[i], 0])
        right += convolve(x, h.irs[idx[i], 1])
    return BinauralPair(left, right, h.sample_rate)


def peak_scale(p: BinauralPair, target_dbfs: float = -1.0) -> float:
    peak = max(np.max(np.abs(p.left)), np.max(np.abs(p.right)))
    if peak == 0:
        raise NormalizationError("cannot peak-normalise a silent binaural pair")
    return float(10 ** (target_dbfs / 20) / peak)


def normalize_peak(p: BinauralPair, target_dbfs: float = -1.0) -> BinauralPair:
    """Scale both ears jointly so the larger peak sits at ``target_dbfs``."""
    return p.scaled(peak_scale(p, target_dbfs))
