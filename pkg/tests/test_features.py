import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special, stats

from neuroframe.errors import DegenerateWindowError, UsageError
from neuroframe.features import (FEATURE_NAMES, WindowConfig, extract_features, kurtosis,
                                 moving_window_average, n_ticks, power_spectral_entropy, rms,
                                 window_features, zero_crossing_rate)
from neuroframe.signal import EegRecording

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
windows = arrays(np.float64, st.integers(4, 128), elements=finite)


def white_noise_pse_expectation(fft_len):
    """Mean normalised entropy of a white-noise periodogram (no zero padding).

    Normalised periodogram bins are Dirichlet distributed: one unit of shape
    per complex bin, one half for the real Nyquist bin.
    """
    alpha = np.r_[np.ones(fft_len // 2 - 1), 0.5]
    a = alpha.sum()
    h = special.digamma(a + 1) - np.sum(alpha / a * special.digamma(alpha + 1))
    return h / np.log(fft_len // 2)


# ---- scalar oracles -------------------------------------------------------

def test_rms_examples():
    assert rms([2, 2, 2]) == 2
    assert rms([0, 0, 0]) == 0
    assert rms([3, 4]) == pytest.approx(3.5355339, abs=1e-7)


def test_zcr_examples():
    assert zero_crossing_rate([1, -1, 1, -1]) == 1.0
    assert zero_crossing_rate([5, 5, 5]) == 0
    assert zero_crossing_rate([1, 2, -3, 4, 5]) == 0.5


def test_zcr_zero_samples_carry_previous_sign():
    assert zero_crossing_rate([1, 0, 1]) == 0
    assert zero_crossing_rate([1, 0, -1]) == 0.5
    assert zero_crossing_rate([0, 0, -1]) == 0.5


def test_mwa_examples():
    assert moving_window_average([1, 2, 3]) == 2
    assert moving_window_average([7.5] * 9) == 7.5
    assert moving_window_average([-1, 4, 7]) == pytest.approx(3.3333333, abs=1e-7)


def test_kurtosis_examples():
    assert kurtosis([1, 1, -1, -1]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateWindowError):
        kurtosis([2.5, 2.5, 2.5, 2.5])


def test_kurtosis_matches_scipy():
    x = np.random.default_rng(11).standard_normal(257)
    assert kurtosis(x) == pytest.approx(stats.kurtosis(x, fisher=False, bias=True), rel=1e-12)


@pytest.mark.parametrize("height", [1.0, 4.8e-151, 1e-300, 1e150])
def test_kurtosis_single_spike_at_any_scale(height):
    # one spike in N samples: (N^2 - 3N + 3) / (N - 1)
    x = np.zeros(100)
    x[0] = height
    assert kurtosis(x) == pytest.approx(9703 / 99, rel=1e-12)
    assert window_features(x[None, :], WindowConfig())[0, 3] == pytest.approx(9703 / 99, rel=1e-12)


def test_kurtosis_gaussian_monte_carlo():
    x = np.random.default_rng(0).standard_normal(100_000)
    assert 2.8 <= kurtosis(x) <= 3.2


def test_pse_zero_window():
    assert power_spectral_entropy(np.zeros(100)) == 0


@pytest.mark.parametrize("k", [1, 5, 20, 63])
def test_pse_on_bin_sinusoid(k):
    cfg = WindowConfig(window_len=128, fft_len=128)
    x = np.sin(2 * np.pi * k * np.arange(128) / 128)
    assert power_spectral_entropy(x, cfg) <= 0.05


def test_pse_flat_spectrum_is_one():
    cfg = WindowConfig(window_len=128, fft_len=128)
    impulse = np.zeros(128)
    impulse[0] = 1
    assert power_spectral_entropy(impulse, cfg) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("fft_len", [128, 256])
def test_pse_white_noise_matches_dirichlet_expectation(fft_len):
    cfg = WindowConfig(window_len=fft_len, fft_len=fft_len)
    noise = np.random.default_rng(5).standard_normal((10_000, fft_len))
    mean = window_features(noise, cfg)[:, 4].mean()
    assert mean == pytest.approx(white_noise_pse_expectation(fft_len), abs=1e-3)


def test_pse_rejects_window_longer_than_fft():
    with pytest.raises(UsageError):
        power_spectral_entropy(np.ones(200), WindowConfig(100, 10, 128))


@pytest.mark.parametrize("kwargs", [{"hop": 0}, {"window_len": 1}, {"fft_len": 100},
                                    {"fft_len": 64}])
def test_window_config_validation(kwargs):
    with pytest.raises(UsageError):
        WindowConfig(**kwargs)


# ---- properties -----------------------------------------------------------

@settings(max_examples=80, deadline=None)
@given(windows)
def test_feature_ranges(x):
    cfg = WindowConfig(window_len=max(len(x), 2), fft_len=128)
    assert 0 <= zero_crossing_rate(x) <= 1
    assert 0 <= power_spectral_entropy(x, cfg) <= 1
    assert rms(x) >= 0
    assert rms(x) ** 2 == pytest.approx(moving_window_average(x * x), rel=1e-12, abs=1e-300)


@settings(max_examples=80, deadline=None)
@given(windows, st.floats(0.01, 100), st.floats(-50, 50))
def test_kurtosis_scale_and_shift_invariance(x, a, c):
    assume(np.std(x) > 1e-3 * (np.abs(x).max() + 1))
    k = kurtosis(x)
    assert kurtosis(a * x) == pytest.approx(k, rel=1e-9)
    assert kurtosis(-a * x) == pytest.approx(k, rel=1e-9)
    assert kurtosis(x + c) == pytest.approx(k, rel=1e-9)


# scaling a subnormal can underflow to zero, so keep to normal floats here
normal_windows = arrays(np.float64, st.integers(4, 128),
                        elements=st.floats(-1e3, 1e3, allow_subnormal=False).filter(lambda v: v == 0 or abs(v) > 1e-290))


@settings(max_examples=80, deadline=None)
@given(normal_windows, st.floats(1e-3, 1e3))
def test_zcr_scale_invariance(x, a):
    assert zero_crossing_rate(a * x) == zero_crossing_rate(x)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (3, 100), elements=finite))
def test_batched_features_equal_scalar_definitions(w):
    cfg = WindowConfig()
    batched = window_features(w, cfg)
    for i, x in enumerate(w):
        assert batched[i, 0] == pytest.approx(rms(x), rel=1e-12, abs=1e-300)
        assert batched[i, 1] == zero_crossing_rate(x)
        assert batched[i, 2] == pytest.approx(moving_window_average(x), rel=1e-12, abs=1e-9)
        try:
            assert batched[i, 3] == pytest.approx(kurtosis(x), rel=1e-10)
        except DegenerateWindowError:
            assert batched[i, 3] == 0
        assert batched[i, 4] == pytest.approx(power_spectral_entropy(x, cfg), abs=1e-12)


# ---- extraction -----------------------------------------------------------

def test_155_features_at_100_hz():
    rec = EegRecording(np.random.default_rng(0).standard_normal((31, 730)), 1000)
    seq = extract_features(rec)
    assert seq.dim == 155
    assert seq.rate == 100
    assert len(seq) == 64
    assert seq.channel_layout[:5] == [f"ch0.{n}" for n in FEATURE_NAMES]


def test_window_count_by_hand():
    rec = EegRecording(np.random.default_rng(1).standard_normal((2, 200)), 1000)
    seq = extract_features(rec, WindowConfig(100, 10, 128))
    assert seq.rows.shape == (11, 10)
    assert n_ticks(200, WindowConfig()) == 11
    assert n_ticks(99, WindowConfig()) == 0


def test_tick_t_covers_expected_samples():
    x = np.random.default_rng(2).standard_normal((1, 300))
    rows = extract_features(EegRecording(x)).rows
    assert rows[7, 2] == pytest.approx(x[0, 70:170].mean(), rel=1e-12)
    assert rows[7, 0] == pytest.approx(rms(x[0, 70:170]), rel=1e-12)


@pytest.mark.parametrize("channel", [0, 3, 6])
def test_column_layout_by_impulse(channel):
    x = np.zeros((7, 100))
    x[channel, 40] = 1.0
    rows = extract_features(EegRecording(x)).rows[0]
    expected = np.zeros(35)
    expected[channel * 5 + 0] = rms(x[channel])
    expected[channel * 5 + 1] = zero_crossing_rate(x[channel])
    expected[channel * 5 + 2] = 0.01
    expected[channel * 5 + 3] = kurtosis(x[channel])
    expected[channel * 5 + 4] = power_spectral_entropy(x[channel])
    np.testing.assert_allclose(rows, expected, rtol=1e-12, atol=1e-15)


def test_extract_rejects_short_or_misaligned():
    with pytest.raises(UsageError):
        extract_features(EegRecording(np.zeros((1, 50))))
    with pytest.raises(UsageError):
        extract_features(EegRecording(np.zeros((1, 500)), 1000), WindowConfig(100, 7, 128))
