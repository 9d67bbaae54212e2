import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal as sps
from scipy.special import sph_harm_y

from swfkit.errors import ConfigurationError, ShapeError
from swfkit.geometry import Direction, fibonacci_sphere, load_layout, quadrature_weights
from swfkit.shcodec import (
    ShSignal,
    acn,
    acn_degrees,
    decoder_maxre,
    decoder_pinv,
    dual_band_decode,
    encode_plane_wave,
    linkwitz_riley_sos,
    maxre_weights,
    n_channels,
    order_from_channels,
    read_ambisonic_wav,
    sh_eval,
    sh_matrix,
    write_ambisonic_wav,
)
from swfkit.signals import MultichannelSignal, read_wav
from swfkit.vectors import analyze_gains


def _real_sh_reference(order, vectors):
    """Real N3D harmonics built from scipy's complex orthonormal ones, Condon-Shortley phase removed."""
    x, y, z = vectors.T
    theta = np.arccos(np.clip(z, -1, 1))
    phi = np.arctan2(y, x)
    out = np.zeros((len(vectors), n_channels(order)))
    for n in range(order + 1):
        for m in range(-n, n + 1):
            ylm = sph_harm_y(n, abs(m), theta, phi) * np.sqrt(4 * np.pi) * (-1) ** abs(m)
            if m == 0:
                out[:, acn(n, m)] = ylm.real
            elif m > 0:
                out[:, acn(n, m)] = np.sqrt(2) * ylm.real
            else:
                out[:, acn(n, m)] = np.sqrt(2) * ylm.imag
    return out


def test_sh_matches_independent_construction():
    pts = fibonacci_sphere(200)
    np.testing.assert_allclose(sh_matrix(6, pts), _real_sh_reference(6, pts), atol=1e-10)


def test_order0_is_one():
    assert sh_eval(0, Direction(123.0, -20.0)).tolist() == [1.0]


def test_first_order_front():
    np.testing.assert_allclose(sh_eval(1, Direction(0, 0)), [1, 0, 0, np.sqrt(3)], atol=1e-12)


def test_first_order_closed_form(rng):
    v = fibonacci_sphere(50)
    x, y, z = v.T
    expected = np.stack([np.ones(50), np.sqrt(3) * y, np.sqrt(3) * z, np.sqrt(3) * x], axis=1)
    np.testing.assert_allclose(sh_matrix(1, v), expected, atol=1e-12)


def test_gram_over_lebedev50_is_identity():
    lay = load_layout("lebedev50")
    y = sh_matrix(5, lay.vectors)
    gram = y.T @ (quadrature_weights(lay)[:, None] * y)
    np.testing.assert_allclose(gram, np.eye(36), atol=1e-10)


def test_addition_theorem(rng):
    v = rng.standard_normal((100, 3))
    y = sh_matrix(5, v / np.linalg.norm(v, axis=1, keepdims=True))
    deg = acn_degrees(5)
    for n in range(6):
        np.testing.assert_allclose((y[:, deg == n] ** 2).sum(axis=1), 2 * n + 1, atol=1e-9)


def test_channel_helpers():
    assert [n_channels(k) for k in range(4)] == [1, 4, 9, 16]
    assert order_from_channels(36) == 5
    with pytest.raises(ShapeError):
        order_from_channels(10)


def test_encode_impulse():
    imp = np.zeros(16)
    imp[0] = 1
    x = encode_plane_wave(1, Direction(0, 0), imp)
    np.testing.assert_allclose(x.signal.data[:, 0], [1, 0, 0, np.sqrt(3)], atol=1e-12)
    assert np.all(x.signal.data[:, 1:] == 0)
    np.testing.assert_array_equal(encode_plane_wave(0, Direction(40, 10), imp).signal.data[0], imp)


@given(st.floats(-10, 10, allow_nan=False))
def test_encode_linear(a):
    s = np.linspace(-1, 1, 32)
    d = Direction(30, 20)
    np.testing.assert_array_equal(encode_plane_wave(3, d, a * s).signal.data,
                                  np.outer(sh_eval(3, d), a * s))


def test_encode_rejects_empty():
    with pytest.raises(ShapeError):
        encode_plane_wave(1, Direction(0, 0), [])


def test_pinv_defining_property():
    lay = load_layout("lebedev50")
    d = decoder_pinv(lay, 5)
    assert d.matrix.shape == (50, 36)
    np.testing.assert_allclose(sh_matrix(5, lay.vectors).T @ d.matrix, np.eye(36), atol=1e-8)


def test_pinv_velocity_matched_on_octahedron():
    lay = load_layout("octahedron")
    d = decoder_pinv(lay, 1)
    for v in lay.vectors:
        a = analyze_gains(d @ sh_eval(1, v), lay)
        assert abs(a.rv_mag - 1) < 1e-9


def test_layout_too_small():
    with pytest.raises(ConfigurationError):
        decoder_pinv(load_layout("octahedron"), 2)


def test_maxre_weights():
    g = maxre_weights(1)
    assert g[0] == 1.0
    assert g[1] == pytest.approx(np.cos(np.radians(137.9 / 2.51)), abs=1e-15)
    assert g[1] == pytest.approx(0.5774, abs=5e-3)
    for order in range(1, 6):
        assert np.all(np.diff(maxre_weights(order)) < 0)


@pytest.mark.parametrize("name", ["octahedron", "tdesign24", "lebedev50"])
def test_maxre_loudness_matched_at_front(name):
    lay = load_layout(name)
    y = sh_eval(lay.order, Direction(0, 0))
    e_low = np.sum((decoder_pinv(lay, lay.order) @ y) ** 2)
    e_high = np.sum((decoder_maxre(lay, lay.order) @ y) ** 2)
    assert abs(e_high - e_low) < 1e-9 * e_low


def test_maxre_raises_energy_vector_on_lebedev():
    lay = load_layout("lebedev50")
    low, high = decoder_pinv(lay, 5), decoder_maxre(lay, 5)
    for v in lay.vectors:
        y = sh_eval(5, v)
        assert analyze_gains(high @ y, lay).re_mag > analyze_gains(low @ y, lay).re_mag


def test_decoders_deterministic():
    lay = load_layout("tdesign24")
    assert np.array_equal(decoder_maxre(lay, 3).matrix, decoder_maxre(lay, 3).matrix)


def test_crossover_flat_sum():
    lp, hp = linkwitz_riley_sos(800, 48000)
    f = np.geomspace(20, 20000, 2000)
    _, hl = sps.sosfreqz(lp, worN=f, fs=48000)
    _, hh = sps.sosfreqz(hp, worN=f, fs=48000)
    assert np.max(np.abs(20 * np.log10(np.abs(hl + hh)))) < 0.1
    # -6 dB per band at the crossover
    _, h0 = sps.sosfreqz(lp, worN=[800], fs=48000)
    assert 20 * np.log10(abs(h0[0])) == pytest.approx(-6.02, abs=0.05)


def test_dual_band_dc_is_pinv_decode():
    lay = load_layout("tdesign24")
    x = encode_plane_wave(3, Direction(30, 10), np.ones(48000))
    feeds = dual_band_decode(x, lay)
    target = decoder_pinv(lay, 3) @ x.signal.data[:, -1]
    err = np.max(np.abs(feeds.data[:, -1] - target)) / np.max(np.abs(target))
    assert 20 * np.log10(err + 1e-300) < -60


def test_dual_band_silence_and_linearity(rng):
    lay = load_layout("octahedron")
    z = dual_band_decode(encode_plane_wave(1, Direction(0, 0), np.zeros(64)), lay)
    assert not np.any(z.data)
    s1, s2 = rng.standard_normal(256), rng.standard_normal(256)
    d = Direction(70, -20)
    lhs = dual_band_decode(encode_plane_wave(1, d, 2 * s1 - 3 * s2), lay).data
    rhs = 2 * dual_band_decode(encode_plane_wave(1, d, s1), lay).data - 3 * dual_band_decode(
        encode_plane_wave(1, d, s2), lay).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_dual_band_order_mismatch():
    with pytest.raises(ConfigurationError):
        dual_band_decode(encode_plane_wave(3, Direction(0, 0), np.ones(8)), load_layout("octahedron"))


def test_shsignal_checks_channels():
    with pytest.raises(ShapeError):
        ShSignal(1, MultichannelSignal(np.zeros((3, 4)), 48000))
    with pytest.raises(ConfigurationError):
        ShSignal(0, MultichannelSignal(np.zeros((1, 4)), 48000), normalisation="SN3D")


def test_ambisonic_wav_sn3d_on_disk(tmp_path):
    x = encode_plane_wave(2, Direction(45, 30), np.linspace(-0.2, 0.2, 100))
    path = tmp_path / "a.wav"
    write_ambisonic_wav(path, x)
    raw, _ = read_wav(path)
    # SN3D: first-order channels are the N3D ones divided by sqrt(3)
    np.testing.assert_allclose(raw[1:4], x.signal.data[1:4] / np.sqrt(3), atol=1e-7)
    back = read_ambisonic_wav(path)
    assert back.order == 2
    np.testing.assert_allclose(back.signal.data, x.signal.data, atol=1e-6)
