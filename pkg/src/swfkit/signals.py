"""Sample-rate-tagged signal containers and WAV I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import soundfile as sf

from .errors import ConfigurationError, ShapeError

DEFAULT_SAMPLE_RATE = 48000


@dataclass(frozen=True)
class MultichannelSignal:
    """Audio matrix with one row per channel."""

    data: np.ndarray
    sample_rate: int

    def __post_init__(self):
        data = np.array(self.data, dtype=float, ndmin=2)
        if data.ndim != 2:
            raise ShapeError(f"expected (channels, samples), got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BinauralPair:
    left: np.ndarray
    right: np.ndarray
    sample_rate: int

    def __post_init__(self):
        left = np.array(self.left, dtype=float).ravel()
        right = np.array(self.right, dtype=float).ravel()
        if left.shape != right.shape:
            raise ShapeError(f"ear signals differ in length: {left.size} vs {right.size}")
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise ValueError("non-finite samples in binaural pair")
        left.setflags(write=False)
        right.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def __len__(self):
        return self.left.size

    def scaled(self, k: float) -> "BinauralPair":
        return BinauralPair(self.left * k, self.right * k, self.sample_rate)

    def swapped(self) -> "BinauralPair":
        return BinauralPair(self.right, self.left, self.sample_rate)

    def as_array(self) -> np.ndarray:
        return np.stack([self.left, self.right])


def check_rates(*rates):
    if len(set(int(r) for r in rates)) > 1:
        raise ConfigurationError(f"sample rate mismatch: {rates}")


WAV_SUBTYPES = {"float32": "FLOAT", "int24": "PCM_24"}


def write_wav(path, data: np.ndarray, sample_rate: int, subtype: str = "float32"):
    """Write a (channels, samples) array."""
    if subtype not in WAV_SUBTYPES:
        raise ConfigurationError(f"unsupported WAV subtype {subtype!r}")
    data = np.atleast_2d(np.asarray(data, dtype=float))
    sf.write(str(path), data.T, int(sample_rate), subtype=WAV_SUBTYPES[subtype])


def read_wav(path):
    """Return ``((channels, samples) float array, sample_rate)``."""
    data, fs = sf.read(str(path), dtype="float64", always_2d=True)
    return data.T, int(fs)
