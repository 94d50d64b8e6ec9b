"""The two cross-modal architectures, their training loop and checkpoints.

``eeg2video``: reduced EEG features (B, T, 30) -> grayscale frames
(B, T, 100, 100). ``video2eeg`` goes the other way. Both are trained with
MSE and Adam on fixed-length chunks of aligned sequences.
"""

from dataclasses import dataclass, field
import csv
import io
import math
import time

import numpy as np

from .errors import FormatError, NumericError, ShapeError, UsageError
from .nn import checkpoint
from .nn.layers import (Conv2D, Conv2DTranspose, DenseTD, FlattenTD, MaxPool2D, Offset,
                        Rescale, Reshape, Sequential, TCN, UpSampling2D)
from .nn.optim import Adam
from .nn.tensor import Tensor, mse_loss

PAPER_EPOCHS = {"e2v": 500, "v2e": 1000}
FRAME_SHAPE = (100, 100)
FEATURE_DIM = 30


def build_eeg2video(seed=0, in_dim=FEATURE_DIM, frame_shape=FRAME_SHAPE, tcn_filters=128,
                    conv_filters=100, n_transpose=2, offset=True, dtype=np.float32):
    """TCN -> dense -> frame-shaped stack. With ``offset`` the output is shifted
    by the mean training frame (fixed, set by ``train``)."""
    h, w = frame_shape
    layers = [
        TCN(tcn_filters, kernel_size=3, dilations=(1, 2)),
        DenseTD(h * w, "linear"),
        Reshape((h, w)),
    ]
    layers += [Conv2DTranspose(conv_filters, (1, 1), activation="relu") for _ in range(n_transpose)]
    layers += [UpSampling2D((1, 1)), DenseTD(w, "linear")]
    if offset:
        layers.append(Offset())
    model = Sequential(layers, (None, in_dim), seed=seed, dtype=dtype, arch="e2v")
    model.build_args = {"in_dim": in_dim, "frame_shape": list(frame_shape),
                        "tcn_filters": tcn_filters, "conv_filters": conv_filters,
                        "n_transpose": n_transpose, "offset": bool(offset)}
    return model


def build_video2eeg(seed=0, out_dim=FEATURE_DIM, frame_shape=FRAME_SHAPE, conv_filters=100,
                    n_conv=2, input_scale=1 / 255, dtype=np.float32):
    """Conv stack -> pool -> flatten -> dense. Frames are taken in 0-255 and
    multiplied by ``input_scale`` first (1 disables the rescale)."""
    h, w = frame_shape
    layers = [Rescale(input_scale)] if input_scale != 1 else []
    layers += [Conv2D(conv_filters, (1, 3), activation="relu") for _ in range(n_conv)]
    layers += [MaxPool2D((1, 2)), FlattenTD(), DenseTD(out_dim, "linear")]
    model = Sequential(layers, (None, h, w), seed=seed, dtype=dtype, arch="v2e")
    model.build_args = {"out_dim": out_dim, "frame_shape": list(frame_shape),
                        "conv_filters": conv_filters, "n_conv": n_conv,
                        "input_scale": float(input_scale)}
    return model


BUILDERS = {"e2v": build_eeg2video, "v2e": build_video2eeg}


def build(arch, seed=0, **kwargs):
    try:
        builder = BUILDERS[arch]
    except KeyError:
        raise UsageError(f"unknown architecture {arch!r}; expected one of {sorted(BUILDERS)}") from None
    if "frame_shape" in kwargs:
        kwargs["frame_shape"] = tuple(kwargs["frame_shape"])
    return builder(seed=seed, **kwargs)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 100
    val_split: float = 0.05
    lr: float = 1e-3
    seed: int = 0
    adapt: bool = True   # fit fixed layers (output offset) to the training targets first

    def __post_init__(self):
        if not 0 < self.val_split < 1:
            raise UsageError(f"val_split must lie in (0, 1), got {self.val_split}")
        if self.batch_size < 1:
            raise UsageError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise UsageError(f"epochs must be >= 0, got {self.epochs}")
        if self.lr < 0:
            raise UsageError(f"lr must be >= 0, got {self.lr}")


@dataclass
class TrainingLog:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    initial_train_mse: float = float("nan")
    checkpoint: str = ""

    def __len__(self):
        return len(self.train_mse)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for i, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
            writer.writerow([i, repr(float(tr)), repr(float(va))])
        return buf.getvalue()

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def holdout_split(n, val_split):
    """Number of leading items kept for training when the tail is held out."""
    return int(math.floor(n * (1.0 - val_split) + 1e-9))


def _batches(n, batch_size, order):
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def evaluate_mse(model, X, Y, batch_size=100):
    """Element-weighted MSE over a dataset, computed in float64."""
    n = len(X)
    if n == 0:
        return float("nan")
    total = 0.0
    count = 0
    for start in range(0, n, batch_size):
        pred = predict(model, X[start:start + batch_size])
        diff = pred.astype(np.float64) - Y[start:start + batch_size]
        total += float(np.sum(diff * diff))
        count += diff.size
    return total / count


def train(model, X, Y, cfg=TrainConfig(), validation=None, on_epoch=None):
    """Fit ``model`` to inputs ``X`` and targets ``Y`` (aligned along axis 0).

    Without ``validation`` the last ``cfg.val_split`` fraction of the pairs is
    held out, as given (before any shuffling). Pass ``validation=(Xv, Yv)`` to
    use an explicit held-out set instead; an empty set disables validation.
    Training pairs are reshuffled every epoch from a generator seeded with
    ``cfg.seed``; the last partial batch is kept. With ``cfg.adapt`` any fixed
    layers are fitted to the training targets before the initial MSE is taken;
    turn it off when resuming from a checkpoint.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    if len(X) == 0:
        raise UsageError("cannot train on an empty dataset")
    if len(X) != len(Y):
        raise ShapeError(f"{len(X)} inputs vs {len(Y)} targets")
    if validation is None:
        n_train = holdout_split(len(X), cfg.val_split)
        if n_train < 1:
            raise UsageError("validation split leaves no training data")
        Xv, Yv = X[n_train:], Y[n_train:]
        X, Y = X[:n_train], Y[:n_train]
    else:
        Xv, Yv = (np.asarray(a) for a in validation)

    dtype = model.dtype
    X = X.astype(dtype, copy=False)
    Y = Y.astype(dtype, copy=False)
    model.check_input(X.shape)

    if cfg.adapt:
        model.adapt(Y)
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(model.parameters(), lr=cfg.lr)
    log = TrainingLog()
    log.initial_train_mse = evaluate_mse(model, X, Y, cfg.batch_size)
    n = len(X)
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        total = 0.0
        for idx in _batches(n, cfg.batch_size, order):
            opt.zero_grad()
            loss = mse_loss(model(Tensor(X[idx])), Y[idx])
            value = float(loss.data)
            if not math.isfinite(value):
                raise NumericError(f"non-finite training loss at epoch {epoch + 1}")
            loss.backward()
            opt.step()
            total += value * len(idx)
        log.train_mse.append(total / n)
        log.val_mse.append(evaluate_mse(model, Xv, Yv, cfg.batch_size))
        log.seconds.append(time.perf_counter() - t0)
        if on_epoch is not None:
            on_epoch(epoch + 1, log)
    return log


def predict(model, x, batch_size=None):
    """Forward pass without keeping the graph; returns a numpy array."""
    x = np.asarray(x, dtype=model.dtype)
    model.check_input(x.shape)
    if batch_size is None or len(x) <= batch_size:
        return model(Tensor(x)).data
    return np.concatenate([model(Tensor(x[i:i + batch_size])).data
                           for i in range(0, len(x), batch_size)])


def to_pixels(frames):
    """Clamp raw e2v outputs into displayable 8-bit grayscale."""
    return np.clip(np.rint(frames), 0, 255).astype(np.uint8)


def save_checkpoint(model, path, **meta):
    metadata = {"arch": model.arch, "seed": model.seed, "build_args": model.build_args,
                "architecture": model.spec()}
    metadata.update(meta)
    checkpoint.save(path, model.state_dict(), metadata)


def load_checkpoint(path):
    """Rebuild the architecture recorded in a checkpoint and load its weights."""
    state, meta = checkpoint.load(path)
    try:
        model = build(meta["arch"], seed=meta.get("seed", 0), **meta.get("build_args", {}))
    except (KeyError, TypeError) as exc:
        raise FormatError("NNCK.metadata", f"cannot rebuild architecture: {exc}") from exc
    model.load_state_dict(state)
    return model, meta
