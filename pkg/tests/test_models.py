import numpy as np
import pytest

from neuroframe.errors import NumericError, ShapeError, UsageError
from neuroframe.models import (PAPER_EPOCHS, TrainConfig, TrainingLog, build, build_eeg2video,
                               build_video2eeg, holdout_split, load_checkpoint, predict,
                               save_checkpoint, to_pixels, train)

SMALL = {"frame_shape": (6, 6)}


def small_e2v(seed=0, **kw):
    return build_eeg2video(seed=seed, in_dim=5, tcn_filters=8, conv_filters=4, **SMALL, **kw)


def small_v2e(seed=0):
    return build_video2eeg(seed=seed, out_dim=5, conv_filters=4, **SMALL)


def toy_pairs(n=12, t=4, seed=0):
    rng = np.random.default_rng(seed)
    feats = rng.normal(size=(n, t, 5)).astype(np.float32)
    frames = (128 + 40 * np.tanh(feats[..., :1, None] + feats[..., 1:2, None])
              * np.ones((1, 1, 6, 6))).astype(np.float32)
    return feats, frames


# ---- architecture ----------------------------------------------------------

def test_e2v_full_size_shape():
    model = build_eeg2video(seed=0)
    out = predict(model, np.zeros((2, 4, 30)))
    assert out.shape == (2, 4, 100, 100)
    assert np.isfinite(out).all()


def test_v2e_full_size_shape_and_flatten_width():
    model = build_video2eeg(seed=0)
    assert predict(model, np.zeros((2, 4, 100, 100))).shape == (2, 4, 30)
    flat = [layer for layer in model.layers if layer.kind == "flatten_td"][0]
    dense = model.layers[model.layers.index(flat) + 1]
    assert dense.kernel.data.shape == (5000, 30)


def test_v2e_rescales_pixels_first():
    model = build_video2eeg(seed=0)
    assert model.layers[0].kind == "rescale" and model.layers[0].factor == 1 / 255
    assert build_video2eeg(seed=0, input_scale=1).layers[0].kind == "conv2d"


def test_parameter_count_independent_of_seed():
    assert build_eeg2video(seed=1).n_params() == build_eeg2video(seed=2).n_params()
    assert build_video2eeg(seed=1).n_params() == build_video2eeg(seed=2).n_params()


def test_v2e_zero_input_finite():
    assert np.isfinite(predict(build_video2eeg(seed=3), np.zeros((1, 2, 100, 100)))).all()


def test_wrong_frame_height_rejected():
    model = build_video2eeg(seed=0)
    with pytest.raises(ShapeError):
        predict(model, np.zeros((1, 2, 99, 100)))


def test_wrong_feature_width_rejected():
    with pytest.raises(ShapeError):
        predict(small_e2v(), np.zeros((1, 3, 4)))


def test_unknown_architecture():
    with pytest.raises(UsageError):
        build("gan")


def test_paper_epoch_presets():
    assert PAPER_EPOCHS == {"e2v": 500, "v2e": 1000}


def test_offset_layer_is_not_trainable_but_saved():
    model = small_e2v()
    names = {p.name for p in model.parameters()}
    assert "offset_1.value" not in names
    assert "offset_1.value" in model.state_dict()
    assert "offset_1.value" not in small_e2v(offset=False).state_dict()


def test_train_sets_offset_to_mean_training_frame():
    X, Y = toy_pairs()
    model = small_e2v()
    train(model, X, Y, TrainConfig(epochs=0, batch_size=4))
    n_train = holdout_split(len(X), 0.05)
    expect = Y[:n_train].reshape(-1, 6, 6).mean(axis=0)
    np.testing.assert_allclose(model.buffers()["offset_1.value"].data, expect, rtol=1e-6)


# ---- training --------------------------------------------------------------

def test_holdout_95_5():
    assert holdout_split(100, 0.05) == 95


def test_train_config_validation():
    for bad in ({"val_split": 0.0}, {"val_split": 1.0}, {"batch_size": 0}, {"epochs": -1}, {"lr": -1}):
        with pytest.raises(UsageError):
            TrainConfig(**bad)


def test_train_holds_out_tail_for_validation():
    X, Y = toy_pairs(n=20)
    log = train(small_v2e(), Y, X, TrainConfig(epochs=1, batch_size=8, val_split=0.25))
    assert len(log) == 1 and np.isfinite(log.val_mse[0])


def test_zero_lr_keeps_loss_constant():
    X, Y = toy_pairs()
    model = small_e2v()
    train(model, X, Y, TrainConfig(epochs=0))  # adapt the offset only
    start = {k: v.copy() for k, v in model.state_dict().items()}
    log = train(model, X, Y, TrainConfig(epochs=3, batch_size=4, lr=0.0, adapt=False))
    for k, v in model.state_dict().items():
        assert np.array_equal(v, start[k])
    assert log.val_mse[0] == log.val_mse[1] == log.val_mse[2]
    # batches are reshuffled, so float32 batch means only agree to rounding
    assert log.train_mse == pytest.approx([log.initial_train_mse] * 3, rel=1e-6)


def test_loss_drops_within_five_epochs():
    X, Y = toy_pairs(n=24)
    for model, x, y in ((small_e2v(), X, Y), (small_v2e(), Y, X)):
        log = train(model, x, y, TrainConfig(epochs=5, batch_size=4))
        assert log.train_mse[4] < log.initial_train_mse


def test_training_is_deterministic():
    X, Y = toy_pairs()
    cfg = TrainConfig(epochs=2, batch_size=5, seed=4)
    a, b = small_e2v(seed=2), small_e2v(seed=2)
    la, lb = train(a, X, Y, cfg), train(b, X, Y, cfg)
    assert la.to_csv() == lb.to_csv()
    for k, v in a.state_dict().items():
        assert np.array_equal(v, b.state_dict()[k])


def test_empty_and_mismatched_data_rejected():
    X, Y = toy_pairs()
    with pytest.raises(UsageError):
        train(small_e2v(), X[:0], Y[:0])
    with pytest.raises(ShapeError):
        train(small_e2v(), X, Y[:-1])


def test_nan_loss_aborts():
    X, Y = toy_pairs()
    Y[0, 0, 0, 0] = np.nan
    with pytest.raises(NumericError):
        train(small_e2v(), X, Y, TrainConfig(epochs=1, batch_size=100, adapt=False))


def test_log_csv_rows():
    log = TrainingLog(train_mse=[2.0, 1.0], val_mse=[3.0, 2.5])
    assert log.to_csv().splitlines() == ["epoch,train_mse,val_mse", "1,2.0,3.0", "2,1.0,2.5"]


# ---- prediction and checkpoints --------------------------------------------

def test_to_pixels_clamps_and_rounds():
    out = to_pixels(np.array([-5.0, 0.4, 127.5, 254.6, 300.0]))
    assert out.dtype == np.uint8
    assert out.tolist() == [0, 0, 128, 255, 255]


@pytest.mark.parametrize("make", [small_e2v, small_v2e])
def test_checkpoint_round_trip_predicts_identically(make, tmp_path):
    X, Y = toy_pairs()
    model = make(seed=5)
    x, y = (X, Y) if model.arch == "e2v" else (Y, X)
    train(model, x, y, TrainConfig(epochs=1, batch_size=4))
    before = predict(model, x[:3])
    path = tmp_path / "m.nnck"
    save_checkpoint(model, path, epoch=1)
    loaded, meta = load_checkpoint(path)
    assert meta["epoch"] == 1 and meta["arch"] == model.arch
    assert np.array_equal(predict(loaded, x[:3]), before)
    assert np.array_equal(predict(loaded, x[:3]), predict(loaded, x[:3]))
