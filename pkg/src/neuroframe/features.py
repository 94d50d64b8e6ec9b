"""Windowed statistical features for EEG.

Five features per channel per tick, in fixed order: root mean square, zero
crossing rate, moving window average, kurtosis and power spectral entropy.
The scalar functions below define each feature on one window; the batched
versions used by :func:`extract_features` must agree with them exactly
(tests compare the two).
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateWindowError, UsageError

FEATURE_NAMES = ("rms", "zcr", "mwa", "kurt", "pse")
KURTOSIS_VAR_TOL = 1e-12


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = 100
    hop: int = 10
    fft_len: int = 128

    def __post_init__(self):
        if self.hop < 1:
            raise UsageError(f"hop must be >= 1, got {self.hop}")
        if self.window_len < 2:
            raise UsageError(f"window_len must be >= 2, got {self.window_len}")
        n = self.fft_len
        if n < self.window_len or n & (n - 1):
            raise UsageError(f"fft_len must be a power of two >= window_len, got {n}")


@dataclass
class FeatureSequence:
    """Feature rows at ``rate`` Hz, ``rows`` shaped (T, dim)."""

    rows: np.ndarray
    rate: int = 100
    channel_layout: list = field(default_factory=list)

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2:
            raise UsageError(f"feature rows must be 2-D, got shape {rows.shape}")
        self.rows = rows
        if not self.channel_layout:
            self.channel_layout = [f"f{i}" for i in range(rows.shape[1])]
        if len(self.channel_layout) != rows.shape[1]:
            raise UsageError("channel_layout length does not match feature dimension")

    @property
    def dim(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]


def feature_layout(n_channels):
    return [f"ch{c}.{name}" for c in range(n_channels) for name in FEATURE_NAMES]


def _as_window(window, min_len):
    x = np.asarray(window, dtype=np.float64).ravel()
    if x.size < min_len:
        raise UsageError(f"window needs at least {min_len} samples, got {x.size}")
    return x


def rms(window):
    x = _as_window(window, 1)
    return float(np.sqrt(np.mean(x * x)))


def zero_crossing_rate(window):
    """Fraction of adjacent pairs whose signs differ.

    A zero sample carries the sign of the last nonzero sample before it;
    zeros at the start of the window count as positive.
    """
    x = _as_window(window, 2)
    signs = []
    current = 1
    for v in x:
        if v > 0:
            current = 1
        elif v < 0:
            current = -1
        signs.append(current)
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    return changes / (x.size - 1)


def moving_window_average(window):
    x = _as_window(window, 1)
    return float(np.mean(x))


def kurtosis(window):
    """Pearson (non-excess) kurtosis m4 / m2**2 with 1/N central moments."""
    x = _as_window(window, 4)
    peak = np.max(np.abs(x))
    x = x / peak if peak > 0 else x  # scale invariant; keeps d**4 clear of underflow
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= KURTOSIS_VAR_TOL * np.mean(x * x) or m2 == 0.0:
        raise DegenerateWindowError("window variance is numerically zero")
    return float(np.mean(d ** 4) / (m2 * m2))


def power_spectral_entropy(window, cfg=None):
    """Normalised Shannon entropy of the one-sided periodogram, in [0, 1].

    Rectangular window, zero-padded to ``cfg.fft_len``; DC is excluded so the
    bins are 1 .. fft_len/2. A window with no power in those bins gives 0.
    """
    cfg = cfg or WindowConfig()
    x = _as_window(window, 2)
    if x.size > cfg.fft_len:
        raise UsageError(f"window of {x.size} samples exceeds fft_len {cfg.fft_len}")
    return float(_pse(x[None, :], cfg.fft_len)[0])


def _pse(windows, fft_len):
    spec = np.fft.rfft(windows, n=fft_len, axis=-1)[..., 1:]
    power = spec.real ** 2 + spec.imag ** 2
    total = power.sum(axis=-1, keepdims=True)
    safe = np.where(total > 0, total, 1.0)
    p = power / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    ent = -terms.sum(axis=-1) / np.log(power.shape[-1])
    ent = np.where(total[..., 0] > 0, ent, 0.0)
    return np.clip(ent, 0.0, 1.0)


def _zcr(windows):
    s = np.sign(windows)
    n = s.shape[-1]
    idx = np.where(s != 0, np.arange(n), 0)
    np.maximum.accumulate(idx, axis=-1, out=idx)
    carried = np.take_along_axis(s, idx, axis=-1)
    carried = np.where(carried == 0, 1.0, carried)
    return np.count_nonzero(carried[..., 1:] != carried[..., :-1], axis=-1) / (n - 1)


def _kurt(windows):
    peak = np.abs(windows).max(axis=-1, keepdims=True)
    windows = windows / np.where(peak > 0, peak, 1.0)
    mean = windows.mean(axis=-1, keepdims=True)
    d = windows - mean
    d2 = d * d
    m2 = d2.mean(axis=-1)
    m4 = (d2 * d2).mean(axis=-1)
    ms = (windows * windows).mean(axis=-1)
    ok = (m2 > KURTOSIS_VAR_TOL * ms) & (m2 > 0)
    return np.where(ok, m4 / np.where(ok, m2 * m2, 1.0), 0.0)


def window_features(windows, cfg):
    """All five features for windows shaped (..., window_len) -> (..., 5)."""
    w = np.asarray(windows, dtype=np.float64)
    out = np.empty(w.shape[:-1] + (5,))
    out[..., 0] = np.sqrt(np.mean(w * w, axis=-1))
    out[..., 1] = _zcr(w)
    out[..., 2] = w.mean(axis=-1)
    out[..., 3] = _kurt(w)
    out[..., 4] = _pse(w, cfg.fft_len)
    return out


def n_ticks(n_samples, cfg):
    if n_samples < cfg.window_len:
        return 0
    return (n_samples - cfg.window_len) // cfg.hop + 1


def extract_features(recording, cfg=None):
    """Feature stream of a (filtered) recording: (T, channels * 5) rows.

    Tick ``t`` covers samples ``[t*hop, t*hop + window_len)``. Windows with
    zero variance get kurtosis 0.
    """
    cfg = cfg or WindowConfig()
    x = np.asarray(recording.samples, dtype=np.float64)
    n_ch, n = x.shape
    if n < cfg.window_len:
        raise UsageError(f"recording of {n} samples is shorter than one window ({cfg.window_len})")
    if recording.sample_rate % cfg.hop:
        raise UsageError(f"hop {cfg.hop} does not divide sample rate {recording.sample_rate}")
    windows = sliding_window_view(x, cfg.window_len, axis=-1)[:, :: cfg.hop]
    feats = window_features(windows, cfg)  # (channels, T, 5)
    rows = feats.transpose(1, 0, 2).reshape(feats.shape[1], n_ch * 5)
    return FeatureSequence(rows, rate=recording.sample_rate // cfg.hop,
                           channel_layout=feature_layout(n_ch))
