"""Binaural auditory metrics: IACC/ITD, gammatone ILD and a perceptual spectral difference."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .errors import ConfigurationError, MetricError
from .signals import BinauralPair, check_rates

ITD_MAX_LAG_S = 1e-3
ENVELOPE_CUTOFF_HZ = 3000.0
ENVELOPE_FILTER_ORDER = 5
N_BANDS = 42
BAND_RANGE_HZ = (20.0, 20000.0)
ILD_HF_THRESHOLD_HZ = 1500.0
GAMMATONE_ORDER = 4
PSD_NFFT = 65536
FULL_SCALE_DB_SPL = 100.0  # rms 1.0 is taken as 100 dB SPL


# ---------------------------------------------------------------- ERB scale


def erb_bandwidth(f):
    """Equivalent rectangular bandwidth (Hz) at frequency f."""
    return 24.7 * (4.37e-3 * np.asarray(f, dtype=float) + 1.0)


def hz_to_erb_rate(f):
    return 21.4 * np.log10(4.37e-3 * np.asarray(f, dtype=float) + 1.0)


def erb_rate_to_hz(e):
    return (10 ** (np.asarray(e, dtype=float) / 21.4) - 1.0) / 4.37e-3


def erb_space(f_lo: float = BAND_RANGE_HZ[0], f_hi: float = BAND_RANGE_HZ[1], n: int = N_BANDS) -> np.ndarray:
    """n centre frequencies uniformly spaced on the ERB-rate scale, inclusive of both ends."""
    return erb_rate_to_hz(np.linspace(hz_to_erb_rate(f_lo), hz_to_erb_rate(f_hi), n))


# ---------------------------------------------------------------- IACC / ITD


@dataclass(frozen=True)
class IaccItdResult:
    iacc: float
    itd: float  # seconds, positive when the right ear lags
    iacf: np.ndarray = None
    lags: np.ndarray = None


def _envelopes(p: BinauralPair, center: bool):
    if p.sample_rate < 8000:
        raise ConfigurationError(f"sample rate {p.sample_rate} below 8 kHz")
    sos = sps.butter(ENVELOPE_FILTER_ORDER, ENVELOPE_CUTOFF_HZ, "lowpass", fs=p.sample_rate, output="sos")
    out = []
    for x in (p.left, p.right):
        if not np.any(x):
            raise MetricError("silent ear signal; cross-correlation is undefined")
        lp = sps.sosfiltfilt(sos, x)
        env = np.abs(sps.hilbert(lp))
        out.append(env - env.mean() if center else env)
    return out


def compute_iacc_itd(p: BinauralPair, center: bool = True) -> IaccItdResult:
    """MaxIACCe-LP: cross-correlation of low-passed Hilbert envelopes within +-1 ms.

    The 3 kHz low-pass runs forward-backward, so it adds no delay. The
    correlation is normalised by the full-signal envelope energies. With
    ``center`` the envelope means are removed first; without it the raw
    (non-negative) envelopes are correlated, which bounds IACC away from 0
    for unrelated signals.
    """
    el, er = _envelopes(p, center)
    den = np.sqrt(np.dot(el, el) * np.dot(er, er))
    if den == 0:
        raise MetricError("constant envelope; cross-correlation is undefined")
    max_lag = min(int(np.floor(ITD_MAX_LAG_S * p.sample_rate + 1e-9)), len(el) - 1)
    full = sps.correlate(er, el, mode="full", method="direct" if len(el) < 4096 else "fft")
    mid = len(el) - 1
    lags = np.arange(-max_lag, max_lag + 1)
    iacf = full[mid + lags] / den
    k = int(np.argmax(np.abs(iacf)))
    return IaccItdResult(
        iacc=float(min(abs(iacf[k]), 1.0)),
        itd=float(lags[k] / p.sample_rate),
        iacf=iacf,
        lags=lags / p.sample_rate,
    )


# ---------------------------------------------------------------- gammatone ILD


@dataclass(frozen=True)
class GammatoneBank:
    """All-pole complex gammatone filters run as cascades of one-pole stages.

    The real output is twice the real part of the complex output. Each band
    is scaled so its real-signal gain at the centre frequency is 0 dB.
    """

    sample_rate: int
    centre_frequencies: np.ndarray
    poles: np.ndarray  # one complex pole per band, repeated ``order`` times
    gains: np.ndarray  # overall real gain per band
    order: int = GAMMATONE_ORDER

    def filter(self, x) -> np.ndarray:
        """Band signals, shape (bands, samples)."""
        x = np.asarray(x, dtype=float)
        out = np.empty((len(self.poles), x.size))
        for k, (pole, g) in enumerate(zip(self.poles, self.gains)):
            y = x.astype(complex)
            for _ in range(self.order):
                y = sps.lfilter([1 - abs(pole)], [1, -pole], y)
            out[k] = 2.0 * g * y.real
        return out

    def response(self, f) -> np.ndarray:
        """Real-signal complex gain per band at frequencies f, shape (bands, len(f))."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        return np.array([g * _real_response(pole, self.order, f, self.sample_rate)
                         for pole, g in zip(self.poles, self.gains)])


def _real_response(pole, order, f, fs):
    def h(freq):
        z = np.exp(-2j * np.pi * freq / fs)
        return ((1 - abs(pole)) / (1 - pole * z)) ** order

    return h(f) + np.conj(h(-f))


@lru_cache(maxsize=8)
def gammatone_bank(sample_rate: int, n_bands: int = N_BANDS, order: int = GAMMATONE_ORDER) -> GammatoneBank:
    fcs = erb_space(n=n_bands)
    if fcs[-1] >= sample_rate / 2:
        raise ConfigurationError(f"top band {fcs[-1]:.0f} Hz is above Nyquist for {sample_rate} Hz")
    # 1.019 ERB bandwidth for a 4th-order gammatone
    poles = np.exp((-2 * np.pi * 1.019 * erb_bandwidth(fcs) + 2j * np.pi * fcs) / sample_rate)
    gains = np.array([1.0 / abs(_real_response(p, order, fc, sample_rate)) for p, fc in zip(poles, fcs)])
    return GammatoneBank(sample_rate, fcs, poles, gains, order)


@dataclass(frozen=True)
class IldResult:
    per_band: np.ndarray  # dB, NaN where a band was excluded
    broadband_hf: float
    centre_frequencies: np.ndarray
    valid: np.ndarray  # False where a band was silent in at least one ear

    @property
    def excluded_bands(self):
        return np.flatnonzero(~self.valid)


def compute_ild(p: BinauralPair, silence_rel: float = 1e-10) -> IldResult:
    """Per-band 20 log10(rms_L / rms_R) over a 42-band gammatone bank.

    A band whose rms in either ear is below ``silence_rel`` times the largest
    band rms is excluded (NaN) and flagged in ``valid``. ``broadband_hf`` is
    the mean over valid bands centred above 1.5 kHz (NaN if there are none).
    """
    bank = gammatone_bank(p.sample_rate)
    rl = np.sqrt(np.mean(bank.filter(p.left) ** 2, axis=1))
    rr = np.sqrt(np.mean(bank.filter(p.right) ** 2, axis=1))
    top = max(rl.max(), rr.max())
    if top == 0:
        raise MetricError("both ears silent in every band")
    valid = (rl > silence_rel * top) & (rr > silence_rel * top)
    if not valid.any():
        raise MetricError("no band carries energy in both ears")
    ild = np.full(len(rl), np.nan)
    # difference of logs, so swapping the ears negates every value exactly
    ild[valid] = 20.0 * (np.log10(rl[valid]) - np.log10(rr[valid]))
    hf = valid & (bank.centre_frequencies > ILD_HF_THRESHOLD_HZ)
    broadband = float(np.mean(ild[hf])) if hf.any() else float("nan")
    return IldResult(ild, broadband, bank.centre_frequencies, valid)


# ---------------------------------------------------------------- ISO 226 / PSD

# ISO 226:2003 equal-loudness parameters
_ISO_F = np.array([20, 25, 31.5, 40, 50, 63, 80, 100, 125, 160, 200, 250, 315, 400, 500, 630, 800,
                   1000, 1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000, 10000, 12500])
_ISO_AF = np.array([0.532, 0.506, 0.480, 0.455, 0.432, 0.409, 0.387, 0.367, 0.349, 0.330, 0.315,
                    0.301, 0.288, 0.276, 0.267, 0.259, 0.253, 0.250, 0.246, 0.244, 0.243, 0.243,
                    0.243, 0.242, 0.242, 0.245, 0.254, 0.271, 0.301])
_ISO_LU = np.array([-31.6, -27.2, -23.0, -19.1, -15.9, -13.0, -10.3, -8.1, -6.2, -4.5, -3.1, -2.0,
                    -1.1, -0.4, 0.0, 0.3, 0.5, 0.0, -2.7, -4.1, -1.0, 1.7, 2.5, 1.2, -2.1, -7.1,
                    -11.2, -10.7, -3.1])
_ISO_TF = np.array([78.5, 68.7, 59.5, 51.1, 44.0, 37.5, 31.5, 26.5, 22.1, 17.9, 14.4, 11.4, 8.6, 6.2,
                    4.4, 3.0, 2.2, 2.4, 3.5, 1.7, -1.3, -4.2, -6.0, -5.4, -1.5, 6.0, 12.6, 13.9, 12.3])


def _iso_params(f):
    """Parameters interpolated over log frequency; held constant outside 20 Hz..12.5 kHz."""
    x = np.log(np.clip(np.asarray(f, dtype=float), _ISO_F[0], _ISO_F[-1]))
    xs = np.log(_ISO_F)
    return np.interp(x, xs, _ISO_AF), np.interp(x, xs, _ISO_LU), np.interp(x, xs, _ISO_TF)


def phon_to_spl(phon, f):
    """Sound pressure level (dB) of a tone at f with the given loudness level."""
    af, lu, tf = _iso_params(f)
    a = 4.47e-3 * (10 ** (0.025 * np.asarray(phon, dtype=float)) - 1.15) + (0.4 * 10 ** ((tf + lu) / 10 - 9)) ** af
    return 10.0 / af * np.log10(a) - lu + 94.0


def spl_to_phon(spl, f):
    """Loudness level (phon) of a tone at f; exact inverse of ``phon_to_spl``, 0 at or below threshold."""
    af, lu, tf = _iso_params(f)
    spl = np.asarray(spl, dtype=float)
    a = 10 ** ((spl + lu - 94.0) * af / 10.0)
    arg = (a - (0.4 * 10 ** ((tf + lu) / 10 - 9)) ** af) / 4.47e-3 + 1.15
    with np.errstate(divide="ignore", invalid="ignore"):
        phon = 40.0 * np.log10(arg)
    return np.where(arg > 0, np.maximum(phon, 0.0), 0.0)


def phon_to_sone(phon):
    phon = np.asarray(phon, dtype=float)
    return np.where(phon >= 40.0, 2.0 ** ((phon - 40.0) / 10.0), (np.maximum(phon, 0.0) / 40.0) ** 2.642)


def sone_to_phon(sone):
    sone = np.asarray(sone, dtype=float)
    with np.errstate(divide="ignore"):
        hi = 40.0 + 10.0 * np.log2(np.maximum(sone, 1e-300))
    return np.where(sone >= 1.0, hi, 40.0 * np.maximum(sone, 0.0) ** (1 / 2.642))


def erb_band_levels(x, sample_rate: int, centres=None, nfft: int = PSD_NFFT) -> np.ndarray:
    """Band levels (dB SPL) of a signal over ERB-wide rectangular bands.

    Magnitude spectrum of the zero-padded signal (at least ``nfft`` points);
    each band sums the power of the bins within half an ERB-rate unit of
    its centre.
    """
    x = np.asarray(x, dtype=float)
    n = max(nfft, x.size)
    spec = np.fft.rfft(x, n)
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    power = np.abs(spec) ** 2 * 2.0 / n**2  # per-bin contribution to the mean square
    centres = erb_space() if centres is None else np.asarray(centres)
    e = hz_to_erb_rate(f)
    ec = hz_to_erb_rate(centres)
    edges = np.concatenate([[ec[0] - 0.5], (ec[:-1] + ec[1:]) / 2, [ec[-1] + 0.5]])
    idx = np.searchsorted(edges, e, side="right") - 1
    inside = (idx >= 0) & (idx < len(centres))
    band = np.bincount(idx[inside], weights=power[inside], minlength=len(centres))
    return 10.0 * np.log10(np.maximum(band, 1e-30)) + FULL_SCALE_DB_SPL


def loudness_spectrum(x, sample_rate: int, centres=None) -> np.ndarray:
    """Loudness level (phon) per ERB band via ISO 226 and the sone scale."""
    centres = erb_space() if centres is None else np.asarray(centres)
    sones = phon_to_sone(spl_to_phon(erb_band_levels(x, sample_rate, centres), centres))
    return sone_to_phon(sones)


def compute_psd(p: BinauralPair, ref: BinauralPair) -> float:
    """Mean absolute loudness-level difference (phon) over ERB bands and both ears.

    No loudness normalisation is applied, so level offsets count.
    """
    check_rates(p.sample_rate, ref.sample_rate)
    for pair, label in ((p, "test"), (ref, "reference")):
        if not (np.any(pair.left) and np.any(pair.right)):
            raise MetricError(f"silent {label} signal")
    diffs = [
        np.abs(loudness_spectrum(a, p.sample_rate) - loudness_spectrum(b, ref.sample_rate))
        for a, b in ((p.left, ref.left), (p.right, ref.right))
    ]
    return float(np.mean(diffs))


def signed_error(system_value: float, reference_value: float) -> float:
    """System minus reference."""
    return float(system_value) - float(reference_value)
