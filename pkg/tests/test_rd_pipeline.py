import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fmcw_rdd.radar_sim import PAPER_CONFIG, ObjectSpec, synth_objects
from fmcw_rdd.rd_pipeline import (
    DB_FLOOR,
    doppler_dft,
    from_channels,
    hann,
    magnitude_db,
    range_dft,
    rd_map,
    to_channels,
)


def naive_dft(x):
    n = len(x)
    return [sum(x[k] * cmath.exp(-2j * math.pi * f * k / n) for k in range(n)) for f in range(n)]


def test_periodic_hann_values():
    w = hann(8)
    ref = [0.5 * (1 - math.cos(2 * math.pi * k / 8)) for k in range(8)]
    np.testing.assert_allclose(w, ref, atol=1e-15)
    assert w[0] == 0.0 and w[4] == pytest.approx(1.0)


def test_rd_map_matches_brute_force_dft(rng):
    N, M = 8, 6
    x = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    wn = [0.5 * (1 - math.cos(2 * math.pi * k / N)) for k in range(N)]
    wm = [0.5 * (1 - math.cos(2 * math.pi * k / M)) for k in range(M)]
    cols = [naive_dft([x[n, m] * wn[n] for n in range(N)]) for m in range(M)]
    S_R = np.array(cols).T
    np.testing.assert_allclose(range_dft(x), S_R, atol=1e-10)
    rows = [naive_dft([S_R[n, m] * wm[m] for m in range(M)]) for n in range(N)]
    # centre shift: zero Doppler moves to index M // 2
    ref = np.array([[r[(m - M // 2) % M] for m in range(M)] for r in rows])
    np.testing.assert_allclose(rd_map(x), ref, atol=1e-9)


def test_zero_frame_stays_zero():
    assert not rd_map(np.zeros((16, 8), complex)).any()


def test_tone_peaks_at_its_bin():
    N, k = 64, 11
    x = np.exp(2j * np.pi * k * np.arange(N) / N)[:, None] * np.ones((1, 4))
    assert (np.argmax(np.abs(range_dft(x)), axis=0) == k).all()


def test_constant_row_peaks_at_centre():
    rd = doppler_dft(np.ones((4, 16), complex))
    assert (np.argmax(np.abs(rd), axis=1) == 8).all()


def test_worked_example_range_and_doppler_bins():
    # f_D = 2 * 5 * 79e9 / c = 2635 Hz -> 4.3 bins over 128 ramps of 12.8 us
    fd = 2 * 5 * 79e9 / 299792458
    assert fd == pytest.approx(2635, abs=1)
    rd = rd_map(synth_objects(PAPER_CONFIG, [ObjectSpec(50.0, 5.0)]))
    n, m = np.unravel_index(np.argmax(np.abs(rd)), rd.shape)
    assert (n, m) == (90, 64 + round(fd * 128 * 12.8e-6))


def test_parseval_per_column(rng):
    x = rng.standard_normal((32, 5)) + 1j * rng.standard_normal((32, 5))
    w = hann(32)[:, None]
    lhs = np.sum(np.abs(range_dft(x)) ** 2, axis=0)
    rhs = 32 * np.sum(np.abs(w * x) ** 2, axis=0)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


def test_modulation_shifts_range_spectrum(rng):
    N, k = 32, 5
    x = rng.standard_normal((N, 3)) + 1j * rng.standard_normal((N, 3))
    w = hann(N)[:, None]
    mod = np.exp(2j * np.pi * k * np.arange(N) / N)[:, None]
    # window after modulation: DFT(w * mod * x) is DFT(w * x) rolled by k
    a = np.fft.fft(w * (mod * x), axis=0)
    np.testing.assert_allclose(a, np.roll(range_dft(x), k, axis=0), atol=1e-10)


def test_shape_validation():
    with pytest.raises(ValueError):
        range_dft(np.zeros((4, 4)), PAPER_CONFIG)
    with pytest.raises(ValueError):
        range_dft(np.zeros(4))


complex_maps = hnp.arrays(
    np.complex128,
    st.tuples(st.integers(2, 9), st.integers(2, 9)),
    elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
)


@given(x=complex_maps, a=st.complex_numbers(max_magnitude=10), b=st.complex_numbers(max_magnitude=10))
def test_linearity(x, a, b):
    y = np.roll(x[::-1], 1, axis=1)
    lhs = rd_map(a * x + b * y)
    rhs = a * rd_map(x) + b * rd_map(y)
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1.0)
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale * 100


@given(x=complex_maps)
def test_channel_roundtrip_bit_identical(x):
    t = to_channels(x)
    assert t.shape == (2,) + x.shape
    assert from_channels(t).tobytes() == x.tobytes()


def test_channels_of_real_and_rotated_maps(rng):
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert not to_channels(x.real)[1].any()
    t = to_channels(1j * x)
    np.testing.assert_array_equal(t[0], -x.imag)
    np.testing.assert_array_equal(t[1], x.real)


def test_batched_channels_and_bad_shape():
    x = np.zeros((3, 4, 5), complex)
    assert to_channels(x).shape == (3, 2, 4, 5)
    with pytest.raises(ValueError):
        from_channels(np.zeros((3, 4, 5)))


def test_magnitude_db_values():
    assert magnitude_db(np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-9)
    assert magnitude_db(np.array([10j]))[0] == pytest.approx(20.0)
    z = magnitude_db(np.zeros((2, 2)))
    assert np.all(z == 20 * np.log10(DB_FLOOR))
