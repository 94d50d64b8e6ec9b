import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal as sps

from neuroframe.errors import DesignError, UsageError
from neuroframe.signal import (DB_FLOOR, EegRecording, FilterCascade, apply_filter, chain,
                               design_bandpass, design_notch, frequency_response, preprocess,
                               sosfilt)


def butterworth_bandpass_db(f, low, high, order, fs):
    # analytic magnitude after pre-warping: |H|^2 = 1 / (1 + ((W^2 - W0^2) / (W * BW))^(2n))
    warp = lambda x: 2 * fs * math.tan(math.pi * x / fs)
    wl, wh, w = warp(low), warp(high), warp(f)
    n = order // 2
    ratio = (w * w - wl * wh) / (w * (wh - wl))
    return -10 * math.log10(1 + ratio ** (2 * n))


@pytest.fixture
def bandpass():
    return design_bandpass(0.1, 70, 4, 1000)


@pytest.fixture
def notch():
    return design_notch(60, 30, 1000)


def test_bandpass_passband_gain(bandpass):
    assert abs(frequency_response(bandpass, 10, 1000)) <= 1.0


def test_bandpass_stopband_matches_analytic(bandpass):
    expected = butterworth_bandpass_db(200, 0.1, 70, 4, 1000)
    assert expected <= -20
    assert frequency_response(bandpass, 200, 1000) == pytest.approx(expected, abs=1e-6)
    assert frequency_response(bandpass, 200, 1000) <= -20


@pytest.mark.parametrize("f", [0.05, 0.1, 1, 10, 35, 70, 100, 200, 400])
def test_bandpass_matches_analytic_everywhere(bandpass, f):
    assert frequency_response(bandpass, f, 1000) == pytest.approx(
        butterworth_bandpass_db(f, 0.1, 70, 4, 1000), abs=1e-6)


def test_bandpass_matches_scipy_design(bandpass):
    ref = sps.butter(2, [0.1, 70], btype="band", fs=1000, output="sos")
    freqs = np.linspace(0.5, 499, 60)
    _, h_ref = sps.sosfreqz(ref, worN=freqs, fs=1000)
    ours = np.array([frequency_response(bandpass, f, 1000) for f in freqs])
    np.testing.assert_allclose(ours, 20 * np.log10(np.abs(h_ref)), atol=1e-8)


@pytest.mark.parametrize("args", [(70, 0.1, 4, 1000), (10, 10, 4, 1000), (0.1, 70, 3, 1000),
                                  (0.1, 600, 4, 1000), (0, 70, 4, 1000), (0.1, 70, 0, 1000)])
def test_bandpass_rejects_bad_design(args):
    with pytest.raises(DesignError):
        design_bandpass(*args)


def test_notch_targets(notch):
    assert frequency_response(notch, 60, 1000) <= -30
    assert abs(frequency_response(notch, 10, 1000)) <= 1
    assert abs(frequency_response(notch, 120, 1000)) <= 1


def test_notch_matches_scipy(notch):
    b, a = sps.iirnotch(60, 30, fs=1000)
    freqs = np.array([5.0, 10, 55, 59, 61, 65, 120, 300])
    _, h = sps.freqz(b, a, worN=freqs, fs=1000)
    ours = [frequency_response(notch, f, 1000) for f in freqs]
    np.testing.assert_allclose(ours, 20 * np.log10(np.abs(h)), atol=1e-8)


@pytest.mark.parametrize("freq", [600, 500, 0, -5])
def test_notch_rejects_out_of_range(freq):
    with pytest.raises(DesignError):
        design_notch(freq, 30, 1000)


def test_all_designed_stages_are_stable(bandpass, notch):
    for cascade in (bandpass, notch, chain(bandpass, notch), design_bandpass(1, 40, 8, 1000)):
        assert cascade.is_stable()
        assert np.all(cascade.pole_radii() < 1)


@settings(max_examples=40, deadline=None)
@given(low=st.floats(0.05, 50), width=st.floats(1, 300), half_order=st.integers(1, 4))
def test_random_bandpass_designs_stable(low, width, half_order):
    high = min(low + width, 490)
    cascade = design_bandpass(low, high, 2 * half_order, 1000)
    assert cascade.is_stable()
    assert len(cascade.stages) == half_order


def test_identity_cascade_is_flat():
    ident = FilterCascade.identity()
    for f in (0, 1, 100, 499):
        assert frequency_response(ident, f, 1000) == 0.0


def test_dc_zero_clamped_to_floor(bandpass):
    assert frequency_response(bandpass, 0, 1000) == DB_FLOOR


def test_frequency_response_rejects_above_nyquist(bandpass):
    with pytest.raises(UsageError):
        frequency_response(bandpass, 501, 1000)


def test_sosfilt_matches_scipy(bandpass, notch):
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 2000))
    stages = chain(bandpass, notch).stages
    b0, b1, b2, a1, a2 = stages.T
    sos = np.column_stack([b0, b1, b2, np.ones_like(a1), a1, a2])
    np.testing.assert_allclose(sosfilt(stages, x), sps.sosfilt(sos, x, axis=-1),
                               rtol=0, atol=1e-10)


def test_zero_in_zero_out(bandpass):
    rec = EegRecording(np.zeros((4, 500)))
    out = apply_filter(bandpass, rec)
    assert np.all(out.samples == 0)
    assert out.samples.shape == (4, 500)


def test_passband_sinusoid_amplitude(bandpass):
    t = np.arange(4000) / 1000
    rec = EegRecording(np.sin(2 * np.pi * 10 * t)[None])
    out = apply_filter(bandpass, rec).samples[0, 1000:]
    assert abs(np.max(np.abs(out)) - 1) <= 0.12


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2 ** 16),
       n=st.integers(1, 400), c=st.integers(1, 3))
def test_filter_is_linear_and_length_preserving(a, b, seed, n, c):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, c, n))
    cascade = chain(design_bandpass(0.1, 70, 4, 1000), design_notch(60, 30, 1000))
    fx = apply_filter(cascade, EegRecording(x)).samples
    fy = apply_filter(cascade, EegRecording(y)).samples
    fxy = apply_filter(cascade, EegRecording(a * x + b * y)).samples
    assert fxy.shape == (c, n)
    np.testing.assert_allclose(fxy, a * fx + b * fy, rtol=0, atol=1e-9)


def test_preprocess_removes_hum():
    t = np.arange(3000) / 1000
    hum = np.sin(2 * np.pi * 60 * t)
    out = preprocess(EegRecording(hum[None])).samples[0, 1500:]
    assert np.sqrt(np.mean(out ** 2)) < 0.05


def test_recording_validates_shape():
    with pytest.raises(UsageError):
        EegRecording(np.zeros(10))
