"""Command-line entry point: ``neuroframe <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 format error, 3 numeric failure.
"""

import argparse
import os
import sys

import numpy as np

from . import kpca as kp
from .data import formats as fmt
from .data.manifest import DEFAULT_RATIOS, load_manifest, split_dataset
from .data.synth import SynthConfig, synth_generate, write_dataset
from .errors import FormatError, NumericError, UsageError
from .evaluate import write_report
from .features import FeatureSequence, WindowConfig, extract_features
from .models import PAPER_EPOCHS, TrainConfig, load_checkpoint, predict, save_checkpoint, to_pixels
from .signal import apply_filter, chain, design_bandpass, design_notch
from . import pipeline as pl

EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _band(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}") from None
    return lo, hi


def _read_eeg(path, sample_rate):
    if path.endswith(".csv"):
        return fmt.load_eeg_csv(path, sample_rate)
    return fmt.load_eegr(path)


def _read_features(path):
    return fmt.load_feature_csv(path) if path.endswith(".csv") else fmt.load_feat(path)


def _write_features(seq, path):
    if path.endswith(".csv"):
        fmt.save_feature_csv(seq, path)
    else:
        fmt.save_feat(seq, path)


def _pipeline_config(args):
    return pl.PipelineConfig(kpca_dim=args.dim, kpca_degree=args.degree, chunk=args.chunk,
                             kpca_scope=args.kpca_scope, kpca_max_rows=args.max_rows)


# ---- subcommands -----------------------------------------------------------

def cmd_synth(args):
    cfg = SynthConfig(subjects=args.subjects, utterances=args.utterances, ticks=args.ticks,
                      latent_dim=args.latent_dim, noise=args.noise, seed=args.seed)
    path = write_dataset(synth_generate(cfg), args.out)
    print(path)


def cmd_filter(args):
    rec = _read_eeg(args.input, args.sample_rate)
    stages = [design_bandpass(args.band[0], args.band[1], args.order, rec.sample_rate)]
    if args.notch > 0:
        stages.append(design_notch(args.notch, args.q, rec.sample_rate))
    fmt.save_eegr(apply_filter(chain(*stages), rec), args.out)


def cmd_features(args):
    rec = _read_eeg(args.input, args.sample_rate)
    seq = extract_features(rec, WindowConfig(args.window, args.hop, args.fft))
    _write_features(seq, args.out)


def cmd_kpca_fit(args):
    rows = np.concatenate([_read_features(p).rows for p in args.input]).astype(np.float64)
    cfg = kp.KernelConfig(args.degree, args.gain, args.offset)
    model = kp.fit(rows, args.dim, cfg, max_rows=args.max_rows)
    kp.save(model, args.out)
    if args.evr:
        with open(args.evr, "w") as fh:
            fh.write("component,cumulative_explained_variance\n")
            for i, v in enumerate(kp.cumulative_explained_variance(model), start=1):
                fh.write(f"{i},{v!r}\n")


def cmd_kpca_transform(args):
    model = kp.load(args.model)
    seq = _read_features(args.input)
    out = kp.transform(model, seq.rows.astype(np.float64))
    _write_features(FeatureSequence(out, seq.rate, [f"kpc{i}" for i in range(out.shape[1])]),
                    args.out)


def _prepare_pairs(args, cfg):
    manifest = load_manifest(args.manifest)
    if any(not e.split for e in manifest.entries):
        manifest = split_dataset(manifest, DEFAULT_RATIOS, seed=args.seed)
    pairs = pl.pairs_from_manifest(manifest, cfg)
    if getattr(args, "subject", None):
        pairs = [p for p in pairs if p.subject == args.subject]
        if not pairs:
            raise UsageError(f"subject {args.subject!r} not in manifest")
    return pairs


def cmd_train(args):
    cfg = _pipeline_config(args)
    epochs = args.epochs if args.epochs is not None else PAPER_EPOCHS[args.direction]
    tcfg = TrainConfig(epochs=epochs, batch_size=args.batch, val_split=args.val_split,
                       lr=args.lr, seed=args.seed)
    pairs = _prepare_pairs(args, cfg)
    reducers = pl.fit_reducers(pairs, cfg)
    pl.apply_reducers(pairs, reducers, cfg)
    kpca_dir = args.kpca_dir or args.out + ".kpca"
    pl.save_reducers(reducers, kpca_dir)

    has_val = any(p.split == "val" for p in pairs)
    X, Y = pl.arrays(pairs, args.direction, cfg.chunk, "train")
    if len(X) == 0:
        raise UsageError("no training chunks; check the split and --chunk")
    validation = pl.arrays(pairs, args.direction, cfg.chunk, "val") if has_val else None

    on_epoch = None
    if args.samples and args.direction == "e2v":
        probe = (validation[0] if validation is not None and len(validation[0]) else X)[:1]
        os.makedirs(args.samples, exist_ok=True)

        def export_sample(epoch, log):
            frame = to_pixels(predict(model, probe)[0, 0])
            fmt.save_pgm(frame, os.path.join(args.samples, f"epoch_{epoch:05d}.pgm"))
        on_epoch = export_sample

    model = pl.build(args.direction, seed=args.seed, **pl.model_kwargs(args.direction, pairs))
    log = pl.train(model, X, Y, tcfg, validation=validation, on_epoch=on_epoch)
    log_path = args.log or args.out + ".log.csv"
    log.save_csv(log_path)
    save_checkpoint(model, args.out, epoch=len(log), train_seed=args.seed,
                    kpca_dir=os.path.relpath(kpca_dir, os.path.dirname(os.path.abspath(args.out))),
                    kpca_scope=cfg.kpca_scope, chunk=cfg.chunk,
                    loss_history=os.path.basename(log_path))
    print(f"{args.direction}: {len(log)} epochs, final train_mse={log.train_mse[-1]:.6g}"
          if len(log) else f"{args.direction}: 0 epochs")


def _checkpoint_reducers(ckpt_path, meta):
    rel = meta.get("kpca_dir")
    if not rel:
        return {}
    path = os.path.join(os.path.dirname(os.path.abspath(ckpt_path)), rel)
    return pl.load_reducers(path) if os.path.isdir(path) else {}


def cmd_predict(args):
    model, meta = load_checkpoint(args.ckpt)
    if args.direction != meta.get("arch"):
        raise UsageError(f"checkpoint holds a {meta.get('arch')} model, not {args.direction}")
    if args.direction == "e2v":
        with open(args.input, "rb") as fh:
            magic = fh.read(4)
        if magic == b"EEGR":
            rows = pl.eeg_features(fmt.load_eegr(args.input))
        else:
            rows = _read_features(args.input).rows.astype(np.float64)
        in_dim = model.input_shape[-1]
        if rows.shape[1] != in_dim:
            reducers = _checkpoint_reducers(args.ckpt, meta)
            key = args.subject or ("pooled" if "pooled" in reducers else None)
            if key not in reducers:
                raise UsageError("input needs dimension reduction: pass --subject matching a "
                                 f"fitted reducer (available: {sorted(reducers)})")
            rows = reducers[key].transform(rows)
        frames = predict(model, rows[None].astype(np.float32))[0]
        fmt.export_frames(to_pixels(frames), args.out)
    else:
        video = fmt.load_vidg(args.input)
        out = predict(model, video.frames[None].astype(np.float32))[0]
        _write_features(FeatureSequence(out.astype(np.float64), 100,
                                        [f"kpc{i}" for i in range(out.shape[1])]), args.out)


def cmd_eval(args):
    results = []
    for direction, ckpt in (("e2v", args.ckpt_e2v), ("v2e", args.ckpt_v2e)):
        if not ckpt:
            continue
        model, meta = load_checkpoint(ckpt)
        if meta.get("arch") != direction:
            raise UsageError(f"{ckpt} holds a {meta.get('arch')} model, expected {direction}")
        cfg = pl.PipelineConfig(chunk=int(meta.get("chunk", 16)),
                                kpca_scope=meta.get("kpca_scope", "subject"))
        pairs = _prepare_pairs(args, cfg)
        reducers = _checkpoint_reducers(ckpt, meta)
        if not reducers:
            raise UsageError(f"{ckpt}: fitted reducers not found next to the checkpoint")
        pl.apply_reducers(pairs, reducers, cfg)
        results += pl.evaluate_direction(model, pairs, direction, cfg, reducers)
    if not results:
        raise UsageError("nothing to evaluate: pass --ckpt-e2v and/or --ckpt-v2e")
    write_report(results, args.report, args.svg)
    for r in results:
        print(f"{r.subject} {r.direction} rmse={r.model_rmse:.4f} baseline={r.baseline_rmse:.4f}")


# ---- parser ----------------------------------------------------------------

def _add_kpca_flags(p, dim=True):
    if dim:
        p.add_argument("--dim", type=int, default=30, help="reduced dimension (default: 30)")
    p.add_argument("--degree", type=int, default=3, help="polynomial kernel degree (default: 3)")
    p.add_argument("--max-rows", type=int, default=kp.DEFAULT_MAX_ROWS,
                   help=f"subsample cap for the Gram matrix (default: {kp.DEFAULT_MAX_ROWS})")


def build_parser():
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="neuroframe", formatter_class=fmt_cls,
                     description="EEG <-> video-frame translation pipeline.",
                     epilog="exit codes: 0 success, 1 usage error, 2 format error, 3 numeric failure. "
                            "NEUROFRAME_THREADS caps BLAS worker threads.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic paired dataset", formatter_class=fmt_cls)
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--subjects", type=int, default=7, help="number of subjects")
    p.add_argument("--utterances", type=int, default=10, help="utterances per subject")
    p.add_argument("--ticks", type=int, default=64, help="100 Hz ticks per utterance")
    p.add_argument("--latent-dim", type=int, default=4, help="latent trajectory dimension")
    p.add_argument("--noise", type=float, default=0.3, help="EEG noise level relative to signal")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("filter", help="band-pass + notch filter a raw recording", formatter_class=fmt_cls)
    p.add_argument("--in", dest="input", required=True, help="EEGR or CSV recording")
    p.add_argument("--out", required=True, help="output EEGR file")
    p.add_argument("--band", type=_band, default=(0.1, 70.0), help="band edges LOW:HIGH in Hz")
    p.add_argument("--order", type=int, default=4, help="band-pass order (even)")
    p.add_argument("--notch", type=float, default=60.0, help="notch frequency in Hz, 0 disables")
    p.add_argument("--q", type=float, default=30.0, help="notch quality factor")
    p.add_argument("--sample-rate", type=int, default=1000, help="sample rate for CSV input")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("features", help="extract windowed statistical features", formatter_class=fmt_cls)
    p.add_argument("--in", dest="input", required=True, help="filtered EEGR or CSV recording")
    p.add_argument("--out", required=True, help="output FEAT (or .csv) file")
    p.add_argument("--window", type=int, default=100, help="window length in samples")
    p.add_argument("--hop", type=int, default=10, help="hop in samples")
    p.add_argument("--fft", type=int, default=128, help="FFT length for spectral entropy")
    p.add_argument("--sample-rate", type=int, default=1000, help="sample rate for CSV input")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("kpca", help="fit or apply kernel PCA", formatter_class=fmt_cls)
    ksub = p.add_subparsers(dest="kpca_command", required=True, parser_class=_Parser)
    q = ksub.add_parser("fit", help="fit a reducer on feature files", formatter_class=fmt_cls)
    q.add_argument("--in", dest="input", nargs="+", required=True, help="FEAT or CSV feature files")
    _add_kpca_flags(q)
    q.add_argument("--gain", type=float, default=None, help="kernel gain (default: 1/input_dim)")
    q.add_argument("--offset", type=float, default=1.0, help="kernel offset")
    q.add_argument("--out", required=True, help="output KPCA model file")
    q.add_argument("--evr", help="write cumulative explained variance CSV here")
    q.set_defaults(func=cmd_kpca_fit)
    q = ksub.add_parser("transform", help="project a feature file", formatter_class=fmt_cls)
    q.add_argument("--model", required=True, help="KPCA model file")
    q.add_argument("--in", dest="input", required=True, help="FEAT or CSV feature file")
    q.add_argument("--out", required=True, help="output FEAT (or .csv) file")
    q.set_defaults(func=cmd_kpca_transform)

    p = sub.add_parser("train", help="train the e2v or v2e model", formatter_class=fmt_cls)
    p.add_argument("direction", choices=("e2v", "v2e"))
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--epochs", type=int, default=None,
                   help="epochs (default: 500 for e2v, 1000 for v2e)")
    p.add_argument("--batch", type=int, default=100, help="mini-batch size in chunks")
    p.add_argument("--val-split", type=float, default=0.05,
                   help="held-out fraction when the manifest has no val entries")
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0, help="init/shuffle seed")
    p.add_argument("--chunk", type=int, default=16, help="ticks per training chunk")
    p.add_argument("--subject", help="train on this subject only")
    p.add_argument("--kpca-scope", choices=("subject", "pooled"), default="subject",
                   help="fit one reducer per subject or one for all")
    p.add_argument("--kpca-dir", help="where to write reducers (default: CKPT.kpca)")
    _add_kpca_flags(p)
    p.add_argument("--out", required=True, help="output NNCK checkpoint")
    p.add_argument("--log", help="training log CSV (default: CKPT.log.csv)")
    p.add_argument("--samples", help="directory for per-epoch PGM sample frames (e2v)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="run a trained model", formatter_class=fmt_cls)
    p.add_argument("direction", choices=("e2v", "v2e"))
    p.add_argument("--ckpt", required=True, help="NNCK checkpoint")
    p.add_argument("--in", dest="input", required=True,
                   help="e2v: EEGR or FEAT; v2e: VIDG")
    p.add_argument("--out", required=True,
                   help="e2v: directory of PGM frames; v2e: FEAT file of standardised reduced scores")
    p.add_argument("--subject", help="reducer to use when the input is not yet reduced")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="per-subject test RMSE report", formatter_class=fmt_cls)
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--ckpt-e2v", help="e2v checkpoint")
    p.add_argument("--ckpt-v2e", help="v2e checkpoint")
    p.add_argument("--report", required=True, help="output CSV")
    p.add_argument("--svg", help="optional bar chart")
    p.add_argument("--seed", type=int, default=0, help="split seed for unsplit manifests")
    p.set_defaults(func=cmd_eval)
    return parser


def _limit_threads():
    n = os.environ.get("NEUROFRAME_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def main(argv=None):
    args = build_parser().parse_args(argv)
    limiter = _limit_threads()
    try:
        args.func(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if limiter is not None:
            limiter.unregister()
    return 0


if __name__ == "__main__":
    sys.exit(main())
