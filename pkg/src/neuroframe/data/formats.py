"""On-disk formats: EEGR, FEAT, VIDG binaries, PGM frames and CSV text.

All binaries are little-endian with a 4-byte magic and a u32 version.
Loaders check magic, version, extents and payload length, and raise
:class:`~neuroframe.errors.FormatError` naming the offending field.
"""

from dataclasses import dataclass
import csv
import os
import re

import numpy as np

from .. import _binio
from ..errors import FormatError, UsageError
from ..features import FeatureSequence
from ..signal import EegRecording

VERSION = 1


@dataclass
class VideoSequence:
    """Grayscale frames shaped (T, H, W), uint8."""

    frames: np.ndarray
    fps: int = 100
    subject_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 3:
            raise UsageError(f"frames must be (T, H, W), got shape {frames.shape}")
        if frames.dtype != np.uint8:
            raise UsageError(f"frames must be uint8, got {frames.dtype}")
        self.frames = frames

    def __len__(self):
        return self.frames.shape[0]


# ---- EEGR ------------------------------------------------------------------

def dumps_eegr(rec):
    c, n = rec.samples.shape
    return b"".join([b"EEGR", _binio.pack("IIIQ", VERSION, c, rec.sample_rate, n),
                     _binio.le_bytes(rec.samples, "f4")])


def loads_eegr(blob, subject_id=""):
    r = _binio.Reader(blob, "EEGR")
    r.magic(b"EEGR")
    r.version(VERSION)
    c = r.scalar("I", "channels")
    rate = r.scalar("I", "sample_rate")
    n = r.scalar("Q", "samples")
    if c == 0 or n == 0:
        raise FormatError("EEGR.extents", f"empty recording ({c} channels x {n} samples)")
    if rate == 0:
        raise FormatError("EEGR.sample_rate", "must be positive")
    data = r.array("f4", c * n, "payload").reshape(c, n)
    r.finish()
    return EegRecording(data, rate, subject_id)


def save_eegr(rec, path):
    _binio.write_file(path, dumps_eegr(rec))


def load_eegr(path, subject_id=""):
    return loads_eegr(_binio.read_file(path), subject_id)


def load_eeg_csv(path, sample_rate=1000, subject_id=""):
    """One column per channel, header ``ch0 .. chN``, one row per sample."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("csv.header", "empty file")
    header = rows[0]
    expected = [f"ch{i}" for i in range(len(header))]
    if header != expected:
        raise FormatError("csv.header", f"expected {expected[:3]}..., got {header[:3]}...")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError("csv.row", str(exc)) from exc
    if data.size == 0 or data.ndim != 2 or data.shape[1] != len(header):
        raise FormatError("csv.rows", "ragged or empty sample rows")
    return EegRecording(data.T, sample_rate, subject_id)


def save_eeg_csv(rec, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"ch{i}" for i in range(rec.n_channels)])
        for row in rec.samples.T:
            writer.writerow([repr(float(v)) for v in row])


# ---- FEAT ------------------------------------------------------------------

def dumps_feat(seq):
    t, d = seq.rows.shape
    return b"".join([b"FEAT", _binio.pack("IIIQ", VERSION, d, seq.rate, t),
                     _binio.le_bytes(seq.rows, "f4")])


def loads_feat(blob):
    r = _binio.Reader(blob, "FEAT")
    r.magic(b"FEAT")
    r.version(VERSION)
    d = r.scalar("I", "dim")
    rate = r.scalar("I", "rate")
    t = r.scalar("Q", "rows")
    if d == 0:
        raise FormatError("FEAT.dim", "must be positive")
    rows = r.array("f4", t * d, "payload").reshape(t, d)
    r.finish()
    return FeatureSequence(rows, rate)


def save_feat(seq, path):
    _binio.write_file(path, dumps_feat(seq))


def load_feat(path):
    return loads_feat(_binio.read_file(path))


def save_feature_csv(seq, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(seq.channel_layout)
        for row in seq.rows:
            writer.writerow([repr(float(v)) for v in row])


def load_feature_csv(path, rate=100):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("csv.header", "empty file")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FormatError("csv.row", str(exc)) from exc
    data = data.reshape(-1, len(rows[0]))
    return FeatureSequence(data, rate, list(rows[0]))


# ---- VIDG ------------------------------------------------------------------

def dumps_vidg(video):
    t, h, w = video.frames.shape
    return b"".join([b"VIDG", _binio.pack("IIII", VERSION, t, h, w),
                     np.ascontiguousarray(video.frames, dtype=np.uint8).tobytes()])


def loads_vidg(blob, subject_id=""):
    r = _binio.Reader(blob, "VIDG")
    r.magic(b"VIDG")
    r.version(VERSION)
    t = r.scalar("I", "T")
    h = r.scalar("I", "H")
    w = r.scalar("I", "W")
    if h == 0 or w == 0:
        raise FormatError("VIDG.extents", f"invalid frame size {h}x{w}")
    frames = r.array("u1", t * h * w, "pixels").reshape(t, h, w)
    r.finish()
    return VideoSequence(frames, 100, subject_id)


def save_vidg(video, path):
    _binio.write_file(path, dumps_vidg(video))


def load_vidg(path, subject_id=""):
    return loads_vidg(_binio.read_file(path), subject_id)


# ---- PGM -------------------------------------------------------------------

def dumps_pgm(frame):
    frame = np.asarray(frame)
    if frame.ndim != 2 or frame.dtype != np.uint8:
        raise UsageError(f"PGM frames must be 2-D uint8, got {frame.dtype} {frame.shape}")
    h, w = frame.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(frame).tobytes()


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def loads_pgm(blob):
    """Binary P5 with maxval <= 255; comments in the header are skipped."""
    pos = 0
    fields = []
    for name in ("magic", "width", "height", "maxval"):
        m = _PGM_TOKEN.match(blob, pos)
        if not m:
            raise FormatError(f"PGM.{name}", "truncated header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise FormatError("PGM.magic", f"expected b'P5', got {fields[0]!r}")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise FormatError("PGM.header", str(exc)) from exc
    if not 0 < maxval < 256:
        raise FormatError("PGM.maxval", f"only 8-bit maxval supported, got {maxval}")
    if w <= 0 or h <= 0:
        raise FormatError("PGM.extents", f"invalid size {w}x{h}")
    if pos >= len(blob) or not blob[pos:pos + 1].isspace():
        raise FormatError("PGM.header", "missing whitespace before raster")
    raster = blob[pos + 1:]
    if len(raster) != w * h:
        raise FormatError("PGM.raster", f"expected {w * h} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()


def save_pgm(frame, path):
    _binio.write_file(path, dumps_pgm(frame))


def load_pgm(path):
    return loads_pgm(_binio.read_file(path))


def export_frames(frames, out_dir, prefix="frame"):
    """Write each (H, W) uint8 frame as ``<prefix>_<index>.pgm``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    width = max(5, len(str(max(len(frames) - 1, 0))))
    paths = []
    for i, frame in enumerate(frames):
        path = os.path.join(out_dir, f"{prefix}_{i:0{width}d}.pgm")
        save_pgm(frame, path)
        paths.append(path)
    return paths
