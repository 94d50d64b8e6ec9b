"""IIR filtering of raw multichannel EEG.

Band-pass filters are Butterworth designs mapped to the z-plane with the
bilinear transform (cutoffs pre-warped) and factored into second-order
sections. The mains notch is a single biquad. Filtering is causal,
direct-form II transposed, zero initial state.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DesignError, UsageError

DB_FLOOR = -300.0


@dataclass
class EegRecording:
    """Raw EEG, ``samples`` shaped (channels, n_samples)."""

    samples: np.ndarray
    sample_rate: int = 1000
    subject_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise UsageError(f"samples must be (channels, n_samples), got shape {samples.shape}")
        if samples.shape[0] < 1 or samples.shape[1] < 1:
            raise UsageError("recording needs at least one channel and one sample")
        if int(self.sample_rate) <= 0:
            raise UsageError(f"sample_rate must be positive, got {self.sample_rate}")
        self.samples = samples
        self.sample_rate = int(self.sample_rate)

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]


@dataclass
class FilterCascade:
    """Biquad sections, one row per stage: ``(b0, b1, b2, a1, a2)`` with a0 = 1."""

    stages: np.ndarray
    kind: str = "custom"
    cutoffs: tuple = ()
    order: int = 0
    fs: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        stages = np.asarray(self.stages, dtype=np.float64)
        if stages.ndim != 2 or stages.shape[1] != 5:
            raise DesignError(f"stages must be (n, 5), got {stages.shape}")
        self.stages = stages

    def __len__(self):
        return len(self.stages)

    def pole_radii(self):
        """Largest pole magnitude of every stage."""
        radii = []
        for _, _, _, a1, a2 in self.stages:
            roots = np.roots([1.0, a1, a2]) if a2 != 0 or a1 != 0 else np.zeros(1)
            radii.append(float(np.max(np.abs(roots))) if len(roots) else 0.0)
        return np.array(radii)

    def is_stable(self):
        return bool(np.all(self.pole_radii() < 1.0))

    @classmethod
    def identity(cls):
        return cls(np.array([[1.0, 0.0, 0.0, 0.0, 0.0]]), kind="identity")


def _prewarp(f_hz, fs):
    return 2.0 * fs * math.tan(math.pi * f_hz / fs)


def _stage_gain(b, a, w):
    z1 = np.exp(-1j * w)
    num = b[0] + b[1] * z1 + b[2] * z1 * z1
    den = 1.0 + a[0] * z1 + a[1] * z1 * z1
    return abs(num / den)


def _pair_poles(poles):
    """Group z-plane poles into conjugate (or real) pairs, one per biquad."""
    tol = 1e-12
    upper = sorted((p for p in poles if p.imag > tol), key=lambda p: (abs(p), p.real))
    real = sorted(p.real for p in poles if abs(p.imag) <= tol)
    if len(real) % 2:
        raise DesignError("odd number of real poles cannot be paired into biquads")
    pairs = [(p, p.conjugate()) for p in upper]
    pairs += [(complex(real[i]), complex(real[i + 1])) for i in range(0, len(real), 2)]
    return pairs


def design_bandpass(low_hz, high_hz, order=4, fs=1000):
    """Butterworth band-pass of total ``order`` as ``order // 2`` biquads.

    The low-pass prototype has order ``order / 2``; the band-pass transform
    doubles it. Every section carries zeros at z = +1 and z = -1 and is
    scaled to unit gain at the digital centre frequency, where the ideal
    Butterworth band-pass also has unit gain.
    """
    if not (isinstance(order, (int, np.integer)) and order >= 2 and order % 2 == 0):
        raise DesignError(f"order must be an even integer >= 2, got {order!r}")
    nyq = fs / 2.0
    if not (0 < low_hz < high_hz < nyq):
        raise DesignError(f"need 0 < low ({low_hz}) < high ({high_hz}) < Nyquist ({nyq})")

    n = order // 2
    w_lo = _prewarp(low_hz, fs)
    w_hi = _prewarp(high_hz, fs)
    bw = w_hi - w_lo
    w0_sq = w_lo * w_hi

    proto = [np.exp(1j * math.pi * (2 * k + n + 1) / (2 * n)) for k in range(n)]
    analog = []
    for p in proto:
        pb = p * bw
        disc = np.sqrt(pb * pb - 4.0 * w0_sq + 0j)
        analog += [(pb + disc) / 2.0, (pb - disc) / 2.0]

    k2 = 2.0 * fs
    digital = [(k2 + s) / (k2 - s) for s in analog]

    w_centre = 2.0 * math.atan(math.sqrt(w0_sq) / k2)
    stages = []
    for p, q in _pair_poles(digital):
        a1 = float(-(p + q).real)
        a2 = float((p * q).real)
        b = np.array([1.0, 0.0, -1.0])
        g = _stage_gain(b, (a1, a2), w_centre)
        b = b / g
        stages.append([b[0], b[1], b[2], a1, a2])

    cascade = FilterCascade(np.array(stages), kind="bandpass", cutoffs=(low_hz, high_hz),
                            order=order, fs=fs)
    if not cascade.is_stable():
        raise DesignError(f"unstable band-pass design, pole radii {cascade.pole_radii()}")
    return cascade


def design_notch(freq_hz, q=30.0, fs=1000):
    """Second-order notch at ``freq_hz`` with -3 dB bandwidth ``freq_hz / q``."""
    nyq = fs / 2.0
    if not (0 < freq_hz < nyq):
        raise DesignError(f"notch frequency {freq_hz} must lie in (0, {nyq})")
    if q <= 0:
        raise DesignError(f"quality factor must be positive, got {q}")
    w0 = 2.0 * math.pi * freq_hz / fs
    bw = w0 / q
    gain = 1.0 / (1.0 + math.tan(bw / 2.0))
    c = math.cos(w0)
    stage = [gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0]
    cascade = FilterCascade(np.array([stage]), kind="notch", cutoffs=(freq_hz,), order=2, fs=fs,
                            meta={"q": q})
    if not cascade.is_stable():
        raise DesignError(f"unstable notch design, pole radii {cascade.pole_radii()}")
    return cascade


def chain(*cascades):
    """Concatenate cascades into one (stages applied in the given order)."""
    stages = np.vstack([c.stages for c in cascades])
    return FilterCascade(stages, kind="+".join(c.kind for c in cascades),
                         fs=cascades[0].fs if cascades else 0.0)


def transfer(cascade, freq, fs):
    """Complex transfer function of the cascade at ``freq`` Hz."""
    w = 2.0 * math.pi * freq / fs
    z1 = np.exp(-1j * w)
    h = 1.0 + 0j
    for b0, b1, b2, a1, a2 in cascade.stages:
        h *= (b0 + b1 * z1 + b2 * z1 * z1) / (1.0 + a1 * z1 + a2 * z1 * z1)
    return h


def frequency_response(cascade, freq, fs):
    """Magnitude in dB at ``freq`` Hz; exact zeros clamp to -300 dB."""
    if not (0 <= freq <= fs / 2.0):
        raise UsageError(f"frequency {freq} outside [0, {fs / 2.0}]")
    mag = abs(transfer(cascade, freq, fs))
    if mag == 0.0:
        return DB_FLOOR
    return max(20.0 * math.log10(mag), DB_FLOOR)


def sosfilt(stages, x):
    """Filter ``x`` along its last axis through biquad ``stages`` (DF2T)."""
    y = np.array(x, dtype=np.float64, copy=True)
    lead = y.shape[:-1]
    for b0, b1, b2, a1, a2 in np.asarray(stages, dtype=np.float64):
        s1 = np.zeros(lead)
        s2 = np.zeros(lead)
        src = y.T.copy()
        out = np.empty_like(src)
        for n, xn in enumerate(src):
            yn = b0 * xn + s1
            s1 = b1 * xn - a1 * yn + s2
            s2 = b2 * xn - a2 * yn
            out[n] = yn
        y = out.T
    return np.ascontiguousarray(y)


def apply_filter(cascade, recording):
    """Filter every channel independently; returns a new recording."""
    if recording.n_samples < 1:
        raise UsageError("cannot filter an empty recording")
    filtered = sosfilt(cascade.stages, recording.samples)
    return EegRecording(filtered, recording.sample_rate, recording.subject_id)


def preprocess(recording, band=(0.1, 70.0), order=4, notch_hz=60.0, q=30.0):
    """Band-pass then notch, the standard cleaning chain for raw EEG."""
    fs = recording.sample_rate
    stages = [design_bandpass(band[0], band[1], order, fs)]
    if notch_hz:
        stages.append(design_notch(notch_hz, q, fs))
    return apply_filter(chain(*stages), recording)
