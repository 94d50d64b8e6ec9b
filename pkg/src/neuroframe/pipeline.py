"""End-to-end glue: raw EEG + frames -> reduced features -> trained models -> RMSE.

The steps mirror the CLI subcommands but keep everything in memory, which
is what the acceptance run and the ``eval`` command use.
"""

from dataclasses import dataclass, field
import json
import os

import numpy as np

from . import kpca as kp
from .data.formats import load_eegr, load_feat, load_vidg
from .errors import FormatError, UsageError
from .evaluate import SubjectResult, mean_baseline, rmse
from .features import WindowConfig, extract_features
from .models import build, predict, train
from .signal import preprocess


@dataclass
class PipelineConfig:
    band: tuple = (0.1, 70.0)
    order: int = 4
    notch_hz: float = 60.0
    q: float = 30.0
    window: WindowConfig = field(default_factory=WindowConfig)
    kpca_dim: int = 30
    kpca_degree: int = 3
    kpca_max_rows: int = kp.DEFAULT_MAX_ROWS
    kpca_scope: str = "subject"   # or "pooled"
    chunk: int = 16

    def __post_init__(self):
        if self.kpca_scope not in ("subject", "pooled"):
            raise UsageError(f"kpca_scope must be 'subject' or 'pooled', got {self.kpca_scope!r}")
        if self.chunk < 1:
            raise UsageError(f"chunk must be >= 1, got {self.chunk}")


@dataclass
class Pair:
    """One utterance: raw feature rows and frames at the same 100 Hz ticks."""

    subject: str
    utterance: str
    split: str
    features: np.ndarray   # (T, channels * 5)
    frames: np.ndarray     # (T, H, W) uint8
    reduced: np.ndarray | None = None


def eeg_features(recording, cfg=PipelineConfig()):
    """Filter a raw recording and extract its feature rows."""
    clean = preprocess(recording, cfg.band, cfg.order, cfg.notch_hz, cfg.q)
    return extract_features(clean, cfg.window).rows


def _pair(subject, utterance, split, feats, frames):
    if len(feats) != len(frames):
        raise UsageError(f"{subject}/{utterance}: {len(feats)} feature ticks vs {len(frames)} frames")
    return Pair(subject, utterance, split, feats, frames)


def pairs_from_synth(ds, cfg=PipelineConfig()):
    splits = {(e.subject, e.utterance): e.split for e in ds.manifest.entries}
    return [_pair(u.subject, u.utterance, splits[(u.subject, u.utterance)],
                  eeg_features(u.eeg, cfg), u.video.frames)
            for u in ds.utterances]


def pairs_from_manifest(manifest, cfg=PipelineConfig()):
    """Load every manifest entry. EEG paths may be raw EEGR or pre-extracted FEAT."""
    pairs = []
    for e in manifest.entries:
        path = manifest.path(e.eeg)
        with open(path, "rb") as fh:
            magic = fh.read(4)
        if magic == b"FEAT":
            feats = load_feat(path).rows.astype(np.float64)
        else:
            feats = eeg_features(load_eegr(path, e.subject), cfg)
        frames = load_vidg(manifest.path(e.video), e.subject).frames
        pairs.append(_pair(e.subject, e.utterance, e.split, feats, frames))
    return pairs


def reducer_key(subject, cfg):
    return subject if cfg.kpca_scope == "subject" else "pooled"


@dataclass
class Reducer:
    """Kernel PCA followed by per-component standardisation.

    The standardised scores are what the networks see (e2v input, v2e
    target); ``mean``/``std`` come from the training rows.
    """

    kpca: kp.KpcaModel
    mean: np.ndarray
    std: np.ndarray

    def transform(self, rows):
        return (kp.transform(self.kpca, rows) - self.mean) / self.std

    def unstandardize(self, scores):
        return scores * self.std + self.mean


def fit_reducers(pairs, cfg=PipelineConfig()):
    """Fit kernel PCA plus score scaling on training rows, per subject or pooled."""
    rows = {}
    for p in pairs:
        if p.split == "train":
            rows.setdefault(reducer_key(p.subject, cfg), []).append(p.features)
    if not rows:
        raise UsageError("no training entries to fit the feature reducer on")
    kcfg = kp.KernelConfig(degree=cfg.kpca_degree)
    out = {}
    for key, r in sorted(rows.items()):
        X = np.concatenate(r)
        model = kp.fit(X, cfg.kpca_dim, kcfg, max_rows=cfg.kpca_max_rows)
        scores = kp.transform(model, X)
        std = scores.std(axis=0)
        out[key] = Reducer(model, scores.mean(axis=0), np.where(std > 0, std, 1.0))
    return out


def apply_reducers(pairs, reducers, cfg=PipelineConfig()):
    for p in pairs:
        key = reducer_key(p.subject, cfg)
        if key not in reducers:
            raise UsageError(f"no fitted reducer for {key!r}")
        p.reduced = reducers[key].transform(p.features)
    return pairs


SCALING_FILE = "scaling.json"


def save_reducers(reducers, directory):
    """One ``<key>.kpca`` file per reducer plus a shared ``scaling.json``."""
    os.makedirs(directory, exist_ok=True)
    scaling = {}
    for key, r in reducers.items():
        kp.save(r.kpca, os.path.join(directory, f"{key}.kpca"))
        scaling[key] = {"mean": [float(v) for v in r.mean], "std": [float(v) for v in r.std]}
    with open(os.path.join(directory, SCALING_FILE), "w") as fh:
        json.dump(scaling, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_reducers(directory):
    with open(os.path.join(directory, SCALING_FILE)) as fh:
        scaling = json.load(fh)
    out = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".kpca"):
            continue
        key = name[:-5]
        if key not in scaling:
            raise FormatError(f"{SCALING_FILE}.{key}", "missing scaling for reducer")
        out[key] = Reducer(kp.load(os.path.join(directory, name)),
                           np.asarray(scaling[key]["mean"], np.float64),
                           np.asarray(scaling[key]["std"], np.float64))
    return out


def chunk(seq, length):
    """Non-overlapping windows of ``length`` ticks; a short tail is dropped."""
    n = len(seq) // length
    return seq[: n * length].reshape((n, length) + seq.shape[1:])


def arrays(pairs, direction, length, split=None, subject=None):
    """Stack chunked (input, target) arrays for one direction."""
    xs, ys = [], []
    for p in pairs:
        if (split is not None and p.split != split) or (subject is not None and p.subject != subject):
            continue
        feats = chunk(p.reduced.astype(np.float32), length)
        frames = chunk(p.frames.astype(np.float32), length)
        xs.append(feats if direction == "e2v" else frames)
        ys.append(frames if direction == "e2v" else feats)
    if direction == "e2v":
        empty = (np.zeros((0, length, 0), np.float32), np.zeros((0, length, 0, 0), np.float32))
    else:
        empty = (np.zeros((0, length, 0, 0), np.float32), np.zeros((0, length, 0), np.float32))
    if not xs:
        return empty
    return np.concatenate(xs), np.concatenate(ys)


def model_kwargs(direction, pairs):
    p = pairs[0]
    frame_shape = tuple(p.frames.shape[1:])
    dim = p.reduced.shape[1]
    if direction == "e2v":
        return {"in_dim": dim, "frame_shape": frame_shape}
    return {"out_dim": dim, "frame_shape": frame_shape}


def train_direction(pairs, direction, tcfg, cfg=PipelineConfig(), subject=None, on_epoch=None):
    """Build and train one model on the train split, validating on the val split."""
    X, Y = arrays(pairs, direction, cfg.chunk, "train", subject)
    if len(X) == 0:
        raise UsageError("no training chunks; check the split and the chunk length")
    Xv, Yv = arrays(pairs, direction, cfg.chunk, "val", subject)
    model = build(direction, seed=tcfg.seed, **model_kwargs(direction, pairs))
    if len(Xv) == 0:
        Xv, Yv = X[:0], Y[:0]
    log = train(model, X, Y, tcfg, validation=(Xv, Yv), on_epoch=on_epoch)
    return model, log


def evaluate_direction(model, pairs, direction, cfg=PipelineConfig(), reducers=None, subjects=None):
    """Per-subject test RMSE of a model and of the training-mean baseline.

    v2e is scored in the standardised reduced space it was trained in; when
    ``reducers`` are given the same figures in raw kernel-PCA units are
    reported alongside.
    """
    results = []
    subjects = subjects or sorted({p.subject for p in pairs})
    for s in subjects:
        Xte, Yte = arrays(pairs, direction, cfg.chunk, "test", s)
        _, Ytr = arrays(pairs, direction, cfg.chunk, "train", s)
        if len(Xte) == 0:
            continue
        pred = predict(model, Xte, batch_size=100).astype(np.float64)
        truth = Yte.astype(np.float64)
        res = SubjectResult(s, direction, rmse(pred, truth), mean_baseline(Ytr, truth))
        if direction == "v2e" and reducers:
            r = reducers[reducer_key(s, cfg)]
            raw_truth = r.unstandardize(truth)
            res.model_rmse_raw = rmse(r.unstandardize(pred), raw_truth)
            res.baseline_rmse_raw = mean_baseline(r.unstandardize(Ytr.astype(np.float64)), raw_truth)
        results.append(res)
    return results


def pooled_test_rmse(model, pairs, direction, cfg=PipelineConfig()):
    """(model RMSE, baseline RMSE) over every test element of every subject."""
    Xte, Yte = arrays(pairs, direction, cfg.chunk, "test")
    _, Ytr = arrays(pairs, direction, cfg.chunk, "train")
    pred = predict(model, Xte, batch_size=100).astype(np.float64)
    return rmse(pred, Yte.astype(np.float64)), mean_baseline(Ytr, Yte.astype(np.float64))
