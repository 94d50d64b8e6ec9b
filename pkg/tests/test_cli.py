import os
import subprocess
import sys

import numpy as np
import pytest

from neuroframe.cli import build_parser, main
from neuroframe.data import formats as fmt
from neuroframe.evaluate import read_report
from neuroframe.kpca import load as load_kpca

SUBCOMMANDS = [["synth"], ["filter"], ["features"], ["kpca"], ["kpca", "fit"], ["kpca", "transform"],
               ["train"], ["predict"], ["eval"]]


def files(root):
    out = {}
    for base, _, names in os.walk(root):
        for n in names:
            path = os.path.join(base, n)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out


@pytest.mark.parametrize("words", SUBCOMMANDS, ids=" ".join)
def test_help_documents_every_flag(words, capsys):
    with pytest.raises(SystemExit) as exc:
        main(words + ["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[words[0]]
    if len(words) == 2:
        sub = sub._subparsers._group_actions[0].choices[words[1]]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text
        if action.option_strings and action.default not in (None, False, "==SUPPRESS==") \
                and action.dest != "help":
            assert "default" in text


def test_train_defaults_follow_published_settings():
    args = build_parser().parse_args(["train", "e2v", "--manifest", "m.json", "--out", "x"])
    assert (args.batch, args.val_split, args.lr, args.dim, args.degree) == (100, 0.05, 1e-3, 30, 3)


def test_missing_manifest_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "e2v", "--out", "x.nnck"])
    assert exc.value.code == 1
    assert "--manifest" in capsys.readouterr().err


def test_missing_file_exits_1(tmp_path, capsys):
    assert main(["features", "--in", str(tmp_path / "nope.eegr"), "--out", str(tmp_path / "f")]) == 1
    assert capsys.readouterr().err.count("\n") == 1


def test_corrupt_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.eegr"
    bad.write_bytes(b"NOPE" + bytes(40))
    assert main(["filter", "--in", str(bad), "--out", str(tmp_path / "o.eegr")]) == 2
    err = capsys.readouterr().err
    assert err.startswith("format error") and err.count("\n") == 1


def test_rank_deficient_kpca_exits_3(tmp_path):
    feat = tmp_path / "f.feat"
    fmt.save_feat(fmt.FeatureSequence(np.ones((10, 4), np.float32)), feat)
    assert main(["kpca", "fit", "--in", str(feat), "--dim", "3", "--out", str(tmp_path / "m.kpca")]) == 3


def test_bad_band_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["filter", "--in", "x", "--out", "y", "--band", "70"])
    assert exc.value.code == 1


def test_console_script_module_runs():
    out = subprocess.run([sys.executable, "-m", "neuroframe.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "synth" in out.stdout


# ---- end to end ----------------------------------------------------------------

@pytest.fixture(scope="module")
def run(tmp_path_factory):
    """Whole pipeline on a small synthetic set, run twice into separate trees."""
    trees = []
    for name in ("a", "b"):
        root = tmp_path_factory.mktemp(name)
        d = str(root / "data")
        steps = [
            ["synth", "--seed", "1", "--subjects", "2", "--utterances", "6", "--ticks", "64", "--out", d],
            ["filter", "--in", f"{d}/eeg/s01_u001.eegr", "--out", f"{root}/filt.eegr"],
            ["features", "--in", f"{root}/filt.eegr", "--out", f"{root}/f.feat"],
            ["kpca", "fit", "--in", f"{root}/f.feat", "--dim", "10", "--out", f"{root}/m.kpca",
             "--evr", f"{root}/evr.csv"],
            ["kpca", "transform", "--model", f"{root}/m.kpca", "--in", f"{root}/f.feat",
             "--out", f"{root}/r.feat"],
            ["train", "e2v", "--manifest", f"{d}/manifest.json", "--epochs", "2", "--batch", "8",
             "--out", f"{root}/e2v.nnck", "--samples", f"{root}/samples"],
            ["train", "v2e", "--manifest", f"{d}/manifest.json", "--epochs", "2", "--batch", "8",
             "--out", f"{root}/v2e.nnck"],
            ["predict", "e2v", "--ckpt", f"{root}/e2v.nnck", "--in", f"{d}/eeg/s02_u002.eegr",
             "--subject", "s02", "--out", f"{root}/frames"],
            ["predict", "v2e", "--ckpt", f"{root}/v2e.nnck", "--in", f"{d}/video/s02_u002.vidg",
             "--out", f"{root}/pred.feat"],
            ["eval", "--manifest", f"{d}/manifest.json", "--ckpt-e2v", f"{root}/e2v.nnck",
             "--ckpt-v2e", f"{root}/v2e.nnck", "--report", f"{root}/report.csv", "--svg", f"{root}/r.svg"],
        ]
        codes = [main(s) for s in steps]
        trees.append((root, codes))
    return trees


def test_pipeline_completes(run):
    root, codes = run[0]
    assert codes == [0] * len(codes)
    assert load_kpca(root / "m.kpca").alphas.shape[1] == 10
    assert fmt.load_feat(root / "r.feat").rows.shape == (64, 10)
    assert len(os.listdir(root / "frames")) == 64
    assert fmt.load_pgm(root / "frames" / "frame_00000.pgm").shape == (100, 100)
    assert sorted(os.listdir(root / "samples")) == ["epoch_00001.pgm", "epoch_00002.pgm"]
    assert fmt.load_feat(root / "pred.feat").rows.shape == (64, 30)
    assert (root / "e2v.nnck.log.csv").read_text().startswith("epoch,train_mse,val_mse\n")
    rows = read_report(root / "report.csv")
    assert {(r.subject, r.direction) for r in rows} <= {(s, d) for s in ("s01", "s02") for d in ("e2v", "v2e")}
    assert rows and all(np.isfinite(r.model_rmse) for r in rows)


def test_every_output_is_byte_identical_across_runs(run):
    (a, _), (b, _) = run
    fa, fb = files(a), files(b)
    assert fa.keys() == fb.keys()
    for name in fa:
        assert fa[name] == fb[name], name


def test_predict_rejects_wrong_direction(run, capsys):
    root, _ = run[0]
    assert main(["predict", "v2e", "--ckpt", str(root / "e2v.nnck"), "--in", "x", "--out", "y"]) == 1
