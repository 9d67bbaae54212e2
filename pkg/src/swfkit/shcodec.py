"""Real spherical harmonics (ACN/N3D), plane-wave encoding and dual-band decoding."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, sqrt

import numpy as np
from scipy import signal as sps
from scipy.special import eval_legendre

from .errors import ConfigurationError, ShapeError
from .geometry import Direction, LoudspeakerLayout
from .signals import DEFAULT_SAMPLE_RATE, MultichannelSignal, read_wav, write_wav

MAXRE_ANGLE_DEG = 137.9
MAXRE_ORDER_OFFSET = 1.51


def n_channels(order: int) -> int:
    return (order + 1) ** 2


def acn(n: int, m: int) -> int:
    return n * n + n + m


def order_from_channels(count: int) -> int:
    order = int(round(sqrt(count))) - 1
    if n_channels(order) != count:
        raise ShapeError(f"{count} channels is not a full ambisonic order")
    return order


def acn_degrees(order: int) -> np.ndarray:
    """Degree n of every ACN channel up to ``order``."""
    return np.concatenate([[n] * (2 * n + 1) for n in range(order + 1)]).astype(int)


@lru_cache(maxsize=None)
def _n3d_norm(n: int, m: int) -> float:
    return sqrt((2 * n + 1) * (2 - (m == 0)) * factorial(n - m) / factorial(n + m))


def sh_matrix(order: int, vectors) -> np.ndarray:
    """Real N3D spherical harmonics (no Condon-Shortley phase) at unit vectors.

    Returns an array of shape (P, (order+1)**2), ACN channel order.
    """
    if order < 0:
        raise ConfigurationError("order must be >= 0")
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    out = np.empty((len(v), n_channels(order)))
    # (x + iy)^m carries cos(el)^m e^{i m az}; q holds P_n^m / cos(el)^m
    xy_pow = np.ones(len(v), dtype=complex)
    for m in range(order + 1):
        if m > 0:
            xy_pow = xy_pow * (x + 1j * y)
        q_prev = np.full(len(v), float(np.prod(np.arange(1, 2 * m, 2))))  # (2m-1)!!
        q_prev2 = np.zeros(len(v))
        for n in range(m, order + 1):
            if n == m:
                q = q_prev
            elif n == m + 1:
                q = z * (2 * m + 1) * q_prev
            else:
                q = ((2 * n - 1) * z * q_prev - (n + m - 1) * q_prev2) / (n - m)
            if n > m:
                q_prev2, q_prev = q_prev, q
            norm = _n3d_norm(n, m)
            out[:, acn(n, m)] = norm * q * xy_pow.real
            if m > 0:
                out[:, acn(n, -m)] = norm * q * xy_pow.imag
    return out


def sh_eval(order: int, d) -> np.ndarray:
    v = d.vector if isinstance(d, Direction) else np.asarray(d, dtype=float)
    return sh_matrix(order, v[None, :])[0]


def n3d_to_sn3d_factors(order: int) -> np.ndarray:
    return 1.0 / np.sqrt(2 * acn_degrees(order) + 1.0)


@dataclass(frozen=True)
class ShSignal:
    order: int
    signal: MultichannelSignal
    normalisation: str = "N3D"

    def __post_init__(self):
        if self.signal.n_channels != n_channels(self.order):
            raise ShapeError(
                f"order {self.order} needs {n_channels(self.order)} channels, got {self.signal.n_channels}"
            )
        if self.normalisation != "N3D":
            raise ConfigurationError("internal ambisonic signals are always N3D")


def encode_plane_wave(order: int, d, s, sample_rate: int = DEFAULT_SAMPLE_RATE) -> ShSignal:
    s = np.asarray(s, dtype=float).ravel()
    if s.size == 0:
        raise ShapeError("empty input signal")
    y = sh_eval(order, d)
    return ShSignal(order, MultichannelSignal(np.outer(y, s), sample_rate))


def read_ambisonic_wav(path) -> ShSignal:
    """ACN/SN3D multichannel WAV to an N3D ShSignal; order from channel count."""
    data, fs = read_wav(path)
    order = order_from_channels(data.shape[0])
    return ShSignal(order, MultichannelSignal(data / n3d_to_sn3d_factors(order)[:, None], fs))


def write_ambisonic_wav(path, x: ShSignal, subtype: str = "float32"):
    data = x.signal.data * n3d_to_sn3d_factors(x.order)[:, None]
    write_wav(path, data, x.signal.sample_rate, subtype)


@dataclass(frozen=True)
class DecoderMatrix:
    """Loudspeaker gains, one row per loudspeaker, (order+1)**2 columns."""

    layout: str
    order: int
    matrix: np.ndarray
    band: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape[1] != n_channels(self.order):
            raise ShapeError(f"decoder has {m.shape[1]} columns, order {self.order} needs {n_channels(self.order)}")
        if not np.all(np.isfinite(m)):
            raise ValueError("decoder matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        return self.matrix @ other


def _check_layout_size(layout: LoudspeakerLayout, order: int):
    if len(layout) < n_channels(order):
        raise ConfigurationError(
            f"layout {layout.name!r} has {len(layout)} loudspeakers, order {order} needs at least {n_channels(order)}"
        )


def decoder_pinv(layout: LoudspeakerLayout, order: int) -> DecoderMatrix:
    """Mode-matching decoder: Moore-Penrose inverse of the loudspeaker SH matrix."""
    _check_layout_size(layout, order)
    y = sh_matrix(order, layout.vectors).T  # ((N+1)^2, L)
    return DecoderMatrix(layout.name, order, np.linalg.pinv(y, rcond=1e-10), "low")


def maxre_weights(order: int) -> np.ndarray:
    """Per-degree max-rE weights g_n = P_n(cos(137.9 deg / (N + 1.51)))."""
    x = np.cos(np.radians(MAXRE_ANGLE_DEG / (order + MAXRE_ORDER_OFFSET)))
    return np.array([eval_legendre(n, x) for n in range(order + 1)])


def decoder_maxre(layout: LoudspeakerLayout, order: int) -> DecoderMatrix:
    """Pseudo-inverse with max-rE tapering, loudness-matched to the pinv decoder at the front."""
    low = decoder_pinv(layout, order).matrix
    high = low * maxre_weights(order)[acn_degrees(order)]
    front = sh_eval(order, Direction(0.0, 0.0))
    high = high * (np.linalg.norm(low @ front) / np.linalg.norm(high @ front))
    return DecoderMatrix(layout.name, order, high, "high")


def linkwitz_riley_sos(crossover_hz: float, sample_rate: int):
    """4th-order Linkwitz-Riley low/high sections (two cascaded 2nd-order Butterworths)."""
    if not 0 < crossover_hz < sample_rate / 2:
        raise ConfigurationError(f"crossover {crossover_hz} Hz outside (0, fs/2)")
    lp = sps.butter(2, crossover_hz, "lowpass", fs=sample_rate, output="sos")
    hp = sps.butter(2, crossover_hz, "highpass", fs=sample_rate, output="sos")
    return np.vstack([lp, lp]), np.vstack([hp, hp])


def dual_band_decode(x: ShSignal, layout: LoudspeakerLayout, crossover_hz: float = 800.0) -> MultichannelSignal:
    """Split at the crossover, pinv-decode the low band, max-rE-decode the high band, sum."""
    if x.order != layout.order:
        raise ConfigurationError(f"layout {layout.name!r} is decoded at order {layout.order}, got order {x.order}")
    fs = x.signal.sample_rate
    lp, hp = linkwitz_riley_sos(crossover_hz, fs)
    low = sps.sosfilt(lp, x.signal.data, axis=1)
    high = sps.sosfilt(hp, x.signal.data, axis=1)
    feeds = decoder_pinv(layout, x.order) @ low + decoder_maxre(layout, x.order) @ high
    return MultichannelSignal(feeds, fs)
