"""Synthetic paired EEG/video recordings with a shared latent driver.

Each subject gets fixed random maps from a low-dimensional latent
trajectory ``z(t)`` to (a) EEG channel mixtures and (b) the geometry and
brightness of a filled "mouth" ellipse drawn on a static face canvas. Every
utterance draws fresh sinusoid phases, so ``z`` differs across utterances
while the maps stay fixed per subject. Cross-modal prediction is therefore
learnable by construction.
"""

from dataclasses import dataclass, field
import os

import numpy as np

from ..errors import UsageError
from ..features import WindowConfig
from ..signal import EegRecording, design_bandpass, sosfilt
from .formats import VideoSequence, save_eegr, save_vidg
from .manifest import DatasetManifest, Entry, save_manifest, split_dataset


@dataclass(frozen=True)
class SynthConfig:
    subjects: int = 7
    utterances: int = 10
    ticks: int = 64
    latent_dim: int = 4
    noise: float = 0.3
    seed: int = 0
    channels: int = 31
    sample_rate: int = 1000
    frame_shape: tuple = (100, 100)
    window: WindowConfig = field(default_factory=WindowConfig)
    n_sinusoids: int = 3
    freq_range: tuple = (0.5, 3.0)
    amplitude_uv: float = 20.0

    def __post_init__(self):
        for name in ("subjects", "utterances", "ticks", "latent_dim", "channels", "n_sinusoids"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.noise < 0:
            raise UsageError(f"noise must be >= 0, got {self.noise}")

    @property
    def n_samples(self):
        """EEG samples per utterance so that feature extraction yields ``ticks`` rows."""
        return (self.ticks - 1) * self.window.hop + self.window.window_len


@dataclass
class Utterance:
    subject: str
    utterance: str
    eeg: EegRecording
    video: VideoSequence
    latent_frames: np.ndarray  # z at each frame time, (ticks, latent_dim)


@dataclass
class SynthDataset:
    config: SynthConfig
    utterances: list
    manifest: DatasetManifest

    def get(self, subject, utterance):
        for u in self.utterances:
            if u.subject == subject and u.utterance == utterance:
                return u
        raise KeyError((subject, utterance))


def _subject_maps(rng, cfg):
    k = cfg.latent_dim
    freqs = rng.uniform(*cfg.freq_range, size=(k, cfg.n_sinusoids))
    amps = rng.uniform(0.5, 1.0, size=(k, cfg.n_sinusoids))
    amps *= np.sqrt(2.0 / np.sum(amps ** 2, axis=1, keepdims=True))  # unit variance per latent
    mixing = rng.standard_normal((cfg.channels, k)) / np.sqrt(k)
    # ellipse parameters: centre x, centre y, half-width, half-height, brightness
    geom = rng.standard_normal((5, k))
    geom /= np.linalg.norm(geom, axis=1, keepdims=True)
    face_shade = rng.uniform(120, 160)
    return {"freqs": freqs, "amps": amps, "mixing": mixing, "geom": geom, "face": face_shade}


def _latent(t, freqs, amps, phases):
    # t (n,), freqs/amps/phases (k, m) -> (n, k)
    arg = 2 * np.pi * freqs[None] * t[:, None, None] + phases[None]
    return np.sum(amps[None] * np.sin(arg), axis=2)


def render_frame(z, geom, face_shade, shape=(100, 100)):
    """Draw the face canvas and the latent-driven mouth ellipse (no anti-aliasing)."""
    h, w = shape
    p = geom @ z
    sy, sx = h / 100.0, w / 100.0
    cx = (50.0 + 6.0 * p[0]) * sx
    cy = (68.0 + 4.0 * p[1]) * sy
    ax = max(2.0, (18.0 + 4.0 * p[2]) * sx)
    ay = max(1.0, (8.0 + 3.0 * p[3]) * sy)
    shade = 50.0 + 30.0 * p[4]
    rows, cols = np.mgrid[0:h, 0:w]
    frame = np.full(shape, 40.0)
    face = ((cols - 50.0 * sx) / (38.0 * sx)) ** 2 + ((rows - 50.0 * sy) / (46.0 * sy)) ** 2 <= 1.0
    frame[face] = face_shade
    mouth = ((cols - cx) / ax) ** 2 + ((rows - cy) / ay) ** 2 <= 1.0
    frame[mouth] = shade
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def synth_generate(cfg=SynthConfig(), ratios=(0.85, 0.05, 0.10)):
    """Generate the paired dataset and a split manifest (paths left empty)."""
    rng = np.random.default_rng(cfg.seed)
    fs = cfg.sample_rate
    hop, win = cfg.window.hop, cfg.window.window_len
    noise_band = design_bandpass(1.0, 40.0, 4, fs).stages
    t_eeg = np.arange(cfg.n_samples) / fs
    # frame t is taken at the centre of feature window t
    t_frames = (np.arange(cfg.ticks) * hop + win / 2.0) / fs

    utterances = []
    entries = []
    for s in range(cfg.subjects):
        subject = f"s{s + 1:02d}"
        maps = _subject_maps(rng, cfg)
        for u in range(cfg.utterances):
            utt = f"u{u + 1:03d}"
            phases = rng.uniform(0, 2 * np.pi, size=maps["freqs"].shape)
            z = _latent(t_eeg, maps["freqs"], maps["amps"], phases)
            signal = cfg.amplitude_uv * (z @ maps["mixing"].T).T
            white = rng.standard_normal((cfg.channels, cfg.n_samples))
            hum_phase = rng.uniform(0, 2 * np.pi, size=(cfg.channels, 1))
            if cfg.noise > 0:
                coloured = sosfilt(noise_band, white)
                coloured /= coloured.std() or 1.0
                hum = 0.5 * np.sin(2 * np.pi * 60.0 * t_eeg[None] + hum_phase)
                signal = signal + cfg.noise * cfg.amplitude_uv * (coloured + hum)
            eeg = EegRecording(signal.astype(np.float32), fs, subject)
            zf = _latent(t_frames, maps["freqs"], maps["amps"], phases)
            frames = np.stack([render_frame(zt, maps["geom"], maps["face"], cfg.frame_shape)
                               for zt in zf])
            utterances.append(Utterance(subject, utt, eeg, VideoSequence(frames, 100, subject), zf))
            entries.append(Entry(subject, utt, "", ""))
    manifest = split_dataset(DatasetManifest(entries), ratios, seed=cfg.seed)
    return SynthDataset(cfg, utterances, manifest)


def write_dataset(ds, out_dir):
    """Write EEGR/VIDG files per utterance plus ``manifest.json``; returns the manifest path."""
    os.makedirs(os.path.join(out_dir, "eeg"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "video"), exist_ok=True)
    by_key = {(u.subject, u.utterance): u for u in ds.utterances}
    entries = []
    for e in ds.manifest.entries:
        u = by_key[(e.subject, e.utterance)]
        eeg_rel = os.path.join("eeg", f"{e.subject}_{e.utterance}.eegr")
        vid_rel = os.path.join("video", f"{e.subject}_{e.utterance}.vidg")
        save_eegr(u.eeg, os.path.join(out_dir, eeg_rel))
        save_vidg(u.video, os.path.join(out_dir, vid_rel))
        entries.append(Entry(e.subject, e.utterance, eeg_rel, vid_rel, e.split))
    manifest = DatasetManifest(entries, ds.manifest.seed, ds.manifest.ratios, out_dir)
    path = os.path.join(out_dir, "manifest.json")
    save_manifest(manifest, path)
    return path
