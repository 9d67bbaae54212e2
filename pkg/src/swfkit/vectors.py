"""Velocity/energy vector analysis of loudspeaker gain vectors."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .errors import ConfigurationError, ShapeError, UndefinedVectorError
from .geometry import Direction, LoudspeakerLayout, angular_distance, load_layout
from .shcodec import decoder_maxre, decoder_pinv, linkwitz_riley_sos, sh_eval
from .signals import DEFAULT_SAMPLE_RATE
from .swf import SwfRenderer

SPREAD_FORMULAS = ("arccos", "frank", "variance")
TECHNIQUES = ("ambisonics", "swf")


@dataclass(frozen=True)
class VectorAnalysis:
    pressure: float
    energy: float
    rv: np.ndarray
    re: np.ndarray
    rv_mag: float
    re_mag: float
    spread_deg: float
    rv_defined: bool = True
    spread_formula: str = "arccos"


def spread_from_re(re_mag: float, formula: str = "arccos", gains=None, vectors=None, re=None) -> float:
    """Source spread in degrees from the energy vector.

    arccos:   2 arccos |rE|
    frank:    186.4 (1 - |rE|) + 10.7
    variance: twice the energy-weighted RMS angle between loudspeakers and the rE direction
    """
    if formula == "arccos":
        return float(2.0 * np.degrees(np.arccos(np.clip(re_mag, 0.0, 1.0))))
    if formula == "frank":
        return float(186.4 * (1.0 - re_mag) + 10.7)
    if formula == "variance":
        if re_mag < 1e-12:
            return 180.0
        w = gains**2 / np.sum(gains**2)
        theta = angular_distance(vectors, re / re_mag)
        return float(2.0 * np.sqrt(np.sum(w * theta**2)))
    raise ConfigurationError(f"unknown spread formula {formula!r}; expected one of {SPREAD_FORMULAS}")


def analyze_gains(g, layout: LoudspeakerLayout, spread_formula: str = "arccos", energies=None) -> VectorAnalysis:
    """P, E, rV, rE and spread for real loudspeaker gains.

    ``energies`` optionally replaces g**2 as the per-loudspeaker energy (used
    for band-integrated energies of dual-band decoders).
    """
    g = np.asarray(g, dtype=float).ravel()
    if g.size != len(layout):
        raise ShapeError(f"{g.size} gains for a {len(layout)}-loudspeaker layout")
    e_i = g**2 if energies is None else np.asarray(energies, dtype=float).ravel()
    if not np.any(g) or not np.any(e_i if energies is not None else g):
        raise UndefinedVectorError("all-zero gain vector")
    u = layout.vectors
    p = float(g.sum())
    e = float(e_i.sum())
    # directions from peak-normalised values so tiny gains do not underflow when squared
    gn = g / np.max(np.abs(g))
    en = gn**2 if energies is None else e_i / np.max(np.abs(e_i))
    re = (en @ u) / en.sum()
    pn = gn.sum()
    rv_defined = abs(pn) > 1e-12 * np.abs(gn).sum()
    rv = (gn @ u) / pn if rv_defined else np.full(3, np.nan)
    re_mag = float(np.linalg.norm(re))
    spread = spread_from_re(re_mag, spread_formula, gains=np.sqrt(en), vectors=u, re=re)
    return VectorAnalysis(
        pressure=p,
        energy=e,
        rv=rv,
        re=re,
        rv_mag=float(np.linalg.norm(rv)) if rv_defined else float("nan"),
        re_mag=re_mag,
        spread_deg=spread,
        rv_defined=bool(rv_defined),
        spread_formula=spread_formula,
    )


@lru_cache(maxsize=None)
def band_energy_weights(crossover_hz: float = 800.0, sample_rate: int = DEFAULT_SAMPLE_RATE,
                        f_lo: float = 20.0, f_hi: float = 20000.0):
    """Pink-spectrum energy shares of the crossover bands.

    Returns (a, b, c) such that a loudspeaker fed g_low through the low band
    and g_high through the high band receives energy a g_low^2 + b g_high^2
    + c g_low g_high, integrated over f_lo..f_hi with a 1/f power spectrum.
    Normalised so a + b + c = 1.
    """
    lp, hp = linkwitz_riley_sos(crossover_hz, sample_rate)
    f = np.geomspace(f_lo, f_hi, 8192)
    _, hl = sps.sosfreqz(lp, worN=f, fs=sample_rate)
    _, hh = sps.sosfreqz(hp, worN=f, fs=sample_rate)
    # 1/f spectrum on a log grid: d(ln f) is uniform, so plain trapezoid over ln f
    x = np.log(f)
    a = np.trapezoid(np.abs(hl) ** 2, x)
    b = np.trapezoid(np.abs(hh) ** 2, x)
    c = np.trapezoid(2.0 * np.real(hl * np.conj(hh)), x)
    total = a + b + c
    return float(a / total), float(b / total), float(c / total)


@lru_cache(maxsize=None)
def _layout(name):
    return load_layout(name)


@lru_cache(maxsize=None)
def _decoders(name):
    layout = _layout(name)
    return decoder_pinv(layout, layout.order), decoder_maxre(layout, layout.order)


@lru_cache(maxsize=None)
def _swf_renderer(name, finest_level):
    return SwfRenderer(_layout(name), finest_level)


def ambisonic_band_gains(layout_name: str, d):
    """Low-band (pinv) and high-band (max-rE) loudspeaker gains for a unit plane wave."""
    low, high = _decoders(layout_name)
    y = sh_eval(low.order, d)
    return low @ y, high @ y


def analyze_rendering(technique: str, layout, d, spread_formula: str = "arccos",
                      ambisonic_energy: str = "broadband", crossover_hz: float = 800.0,
                      finest_level: int = 2) -> VectorAnalysis:
    """Vector analysis of a unit broadband source rendered by one of the techniques.

    SWF gains are frequency independent. For Ambisonics rV is taken from the
    low-band (pinv) gains. rE and spread use either the pink-programme energy
    of the dual-band feed (``ambisonic_energy='broadband'``) or the high-band
    max-rE gains alone (``'highband'``).
    """
    name = layout.name if isinstance(layout, LoudspeakerLayout) else str(layout)
    lay = _layout(name)
    if technique == "swf":
        return analyze_gains(_swf_renderer(name, finest_level).gains(d), lay, spread_formula)
    if technique != "ambisonics":
        raise ConfigurationError(f"unknown technique {technique!r}; expected one of {TECHNIQUES}")
    g_low, g_high = ambisonic_band_gains(name, d)
    if ambisonic_energy == "broadband":
        a, b, c = band_energy_weights(float(crossover_hz))
        energies = a * g_low**2 + b * g_high**2 + c * g_low * g_high
    elif ambisonic_energy == "highband":
        energies = g_high**2
    else:
        raise ConfigurationError(f"unknown ambisonic energy mode {ambisonic_energy!r}")
    v = analyze_gains(g_low, lay, spread_formula, energies=energies)
    return v
