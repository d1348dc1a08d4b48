"""Command-line interface.

Subcommands: ``synth`` (materialize a synthetic corpus), ``train``,
``predict``, ``evaluate``, and ``gradcheck``. Every output file embeds
its configuration (seed included) in ``#`` header comments, and repeated
runs with identical configs produce byte-identical checkpoint files and
CSV bodies.

Exit codes: 0 success, 2 malformed input, 3 consistency error (e.g. a
checkpoint trained on a different vocabulary), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import GrammarPredictor, NearestNeighborPredictor, build_grammar
from .cnn import (
    CnnConfig,
    CnnModel,
    CnnPredictor,
    cnn_loss_and_grads,
    dump_matrix_csv,
    encode_matrix,
    init_cnn_model,
    load_cnn_model,
    make_cnn_examples,
    save_cnn_model,
    train_cnn,
)
from .dataio import generate_synthetic, load_corpus, load_split, load_synthetic_spec, save_corpus
from .errors import (
    AnticipateError,
    ConsistencyError,
    DataFormatError,
    NumericalError,
)
from .evaluation import (
    OBSERVED_DECODED,
    OBSERVED_GROUND_TRUTH,
    EvaluationReport,
    evaluate_grid,
    write_per_video_csv,
)
from .nn.gradcheck import grad_check
from .rnn import (
    RnnConfig,
    RnnModel,
    RnnPredictor,
    encode_tokens,
    init_rnn_model,
    load_rnn_model,
    make_rnn_examples,
    rnn_loss_and_grads,
    save_rnn_model,
    train_rnn,
)
from .timeline import FrameTimeline, floor_frac, segments_from_frames

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONSISTENCY = 3
EXIT_NUMERICAL = 4

MODEL_KINDS = ("rnn", "cnn", "grammar", "nn-baseline")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anticipate",
        description="Forecast future frame-wise activity labels from an observed video prefix.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus from a grammar spec")
    synth.add_argument("--spec", required=True, help="JSON grammar spec file")
    synth.add_argument("--out", required=True, help="output corpus directory")

    train = sub.add_parser("train", help="train the rnn or cnn predictor")
    _add_data_args(train)
    train.add_argument("--model", required=True, choices=("rnn", "cnn"))
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", default=".", help="output directory for checkpoint and loss curve")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--hidden", type=int, default=None,
                       help="rnn hidden units (default 256) / cnn dense width (default scaled)")
    train.add_argument("--rows", type=int, default=128, help="cnn matrix rows (S)")
    train.add_argument("--sigma", type=float, default=3.0, help="cnn smoothing sigma")
    train.add_argument("--loss", choices=("squared", "xent"), default="squared",
                       help="cnn training loss")
    train.add_argument("--batch-size", type=int, default=32)

    predict = sub.add_parser("predict", help="predict one video's future labels")
    _add_data_args(predict)
    predict.add_argument("--model", required=True, choices=MODEL_KINDS)
    predict.add_argument("--checkpoint", help="model checkpoint (rnn/cnn only)")
    predict.add_argument("--video", required=True, help="video id to predict")
    predict.add_argument("--obs", type=float, required=True, help="observed fraction")
    predict.add_argument("--pred", type=float, required=True, help="predicted fraction")
    predict.add_argument("--observed", choices=("gt", "decoded"), default="gt")
    predict.add_argument("--seed", type=int, default=0)
    predict.add_argument("--out", required=True, help="output label file")
    predict.add_argument("--dump-matrices", help="debug directory for cnn input/output matrices")

    evaluate = sub.add_parser("evaluate", help="score models over an observation/prediction grid")
    _add_data_args(evaluate)
    evaluate.add_argument(
        "--model",
        action="append",
        required=True,
        metavar="KIND[=CHECKPOINT]",
        help="model to evaluate; repeatable (rnn/cnn need =CHECKPOINT)",
    )
    evaluate.add_argument("--obs", type=float, nargs="+", default=[0.2, 0.3])
    evaluate.add_argument("--pred", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.5])
    evaluate.add_argument("--observed", choices=("gt", "decoded"), default="gt")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--out", required=True, help="output directory")
    evaluate.add_argument("--metric", choices=("moc", "actions", "buckets"), default="moc")
    evaluate.add_argument("--bucket-edges", type=int, nargs="+",
                          help="frame-count edges for --metric buckets")
    evaluate.add_argument("--no-plots", action="store_true", help="skip SVG plot files")

    gradcheck = sub.add_parser("gradcheck", help="verify analytic gradients by finite differences")
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _add_data_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", required=True, help="directory of frame label files")
    sub.add_argument("--vocab", required=True, help="vocabulary file")
    sub.add_argument("--split", required=True, help="split file listing test video ids")
    sub.add_argument("--decoded", help="directory of decoded (noisy) label files")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "synth": cmd_synth,
        "train": cmd_train,
        "predict": cmd_predict,
        "evaluate": cmd_evaluate,
        "gradcheck": cmd_gradcheck,
    }[args.command]
    try:
        return handler(args)
    except (DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (NumericalError, AnticipateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _load(args):
    for name in ("data", "vocab", "split"):
        path = Path(getattr(args, name))
        if not path.exists():
            raise FileNotFoundError(f"--{name} path does not exist: {path}")
    if args.decoded is not None and not Path(args.decoded).exists():
        raise FileNotFoundError(f"--decoded path does not exist: {args.decoded}")
    corpus = load_corpus(args.data, args.vocab, args.decoded)
    split = load_split(args.split, corpus)
    return corpus, split


def _train_sequences(corpus, split):
    return [segments_from_frames(corpus.by_id[vid].ground_truth) for vid in split.train_ids]


def cmd_synth(args) -> int:
    spec = load_synthetic_spec(args.spec)
    corpus = generate_synthetic(spec)
    save_corpus(args.out, corpus)
    print(f"wrote {len(corpus)} videos, {len(corpus.vocabulary)} classes -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus, split = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_hash = corpus.vocabulary.content_hash()
    train_seqs = _train_sequences(corpus, split)
    if args.model == "rnn":
        scale = sum(len(s) for s in train_seqs) / len(train_seqs)
        config = RnnConfig(
            num_classes=len(corpus.vocabulary),
            hidden_size=args.hidden or 256,
            learning_rate=args.lr,
            epochs=args.epochs if args.epochs is not None else 20,
            seed=args.seed,
            length_scale=scale,
        )
        model, curve = train_rnn(train_seqs, config, vocab_hash)
        ckpt_path = out_dir / "rnn.ckpt"
        save_rnn_model(ckpt_path, model)
    else:
        config = CnnConfig(
            rows=args.rows,
            num_classes=len(corpus.vocabulary),
            hidden_width=args.hidden,
            sigma=args.sigma,
            loss_mode=args.loss,
            learning_rate=args.lr,
            epochs=args.epochs if args.epochs is not None else 30,
            batch_size=args.batch_size,
            seed=args.seed,
        )
        timelines = [corpus.by_id[vid].ground_truth for vid in split.train_ids]
        model, curve = train_cnn(timelines, config, vocab_hash)
        ckpt_path = out_dir / "cnn.ckpt"
        save_cnn_model(ckpt_path, model)
    curve_path = out_dir / f"{args.model}_loss.csv"
    lines = [f"# model={args.model}", f"# seed={args.seed}", "epoch,loss"]
    lines += [f"{i},{loss:.6f}" for i, loss in enumerate(curve)]
    curve_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {ckpt_path} and {curve_path} (final loss {curve[-1]:.6f})")
    return EXIT_OK


def _check_vocab(model, corpus) -> None:
    expected = corpus.vocabulary.content_hash()
    if model.vocab_hash and model.vocab_hash != expected:
        raise ConsistencyError(
            "checkpoint was trained with a different vocabulary than this corpus"
        )


def _build_predictor(kind: str, checkpoint: str | None, corpus, split, seed: int):
    if kind in ("rnn", "cnn"):
        if checkpoint is None:
            raise ValueError(f"model {kind!r} requires a checkpoint")
        model = load_rnn_model(checkpoint) if kind == "rnn" else load_cnn_model(checkpoint)
        _check_vocab(model, corpus)
        return RnnPredictor(model) if kind == "rnn" else CnnPredictor(model)
    train_seqs = _train_sequences(corpus, split)
    if kind == "grammar":
        return GrammarPredictor(build_grammar(train_seqs), seed)
    if kind == "nn-baseline":
        return NearestNeighborPredictor(
            [corpus.by_id[vid].ground_truth for vid in split.train_ids]
        )
    raise ValueError(f"unknown model kind {kind!r}")


def cmd_predict(args) -> int:
    corpus, split = _load(args)
    predictor = _build_predictor(args.model, args.checkpoint, corpus, split, args.seed)
    if args.video not in corpus.by_id:
        raise DataFormatError(f"unknown video id {args.video!r}")
    record = corpus.by_id[args.video]
    total = len(record.ground_truth)
    t = floor_frac(args.obs, total)
    if not 1 <= t < total:
        raise ValueError(f"observation fraction {args.obs} is invalid for {total} frames")
    horizon = floor_frac(args.pred, total)
    if horizon < 1:
        raise ValueError(f"prediction fraction {args.pred} is invalid for {total} frames")
    if args.observed == "decoded":
        if record.decoded is None:
            raise ConsistencyError(f"video {args.video!r} has no decoded observation")
        source = record.decoded
    else:
        source = record.ground_truth
    observed = FrameTimeline(source.frames[:t])
    if args.dump_matrices and args.model == "cnn":
        dump_dir = Path(args.dump_matrices)
        dump_dir.mkdir(parents=True, exist_ok=True)
        cfg = predictor.model.config
        x = encode_matrix(segments_from_frames(observed), cfg.rows, cfg.num_classes)
        dump_matrix_csv(dump_dir / f"{args.video}_input.csv", x)
        from .cnn import cnn_forward, smooth_output

        dump_matrix_csv(
            dump_dir / f"{args.video}_output.csv",
            smooth_output(cnn_forward(predictor.model, x), cfg.sigma),
        )
    prediction = predictor.predict(observed, total, horizon)
    names = corpus.vocabulary.names
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(
        "".join(names[i] + "\n" for i in prediction.frames), encoding="utf-8"
    )
    print(f"wrote {len(prediction)} predicted frames -> {out_path}")
    return EXIT_OK


def _parse_model_specs(specs: list[str]) -> list[tuple[str, str | None]]:
    parsed = []
    for spec in specs:
        kind, _, ckpt = spec.partition("=")
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r} (choose from {MODEL_KINDS})")
        parsed.append((kind, ckpt or None))
    return parsed


def _pct(x: float) -> str:
    return f"{round(x * 100):d}"


def cmd_evaluate(args) -> int:
    corpus, split = _load(args)
    if args.metric == "buckets" and not args.bucket_edges:
        raise ValueError("--metric buckets requires --bucket-edges")
    observed_source = OBSERVED_DECODED if args.observed == "decoded" else OBSERVED_GROUND_TRUTH
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_specs = _parse_model_specs(args.model)
    reports: list[EvaluationReport] = []
    for kind, ckpt in model_specs:
        predictor = _build_predictor(kind, ckpt, corpus, split, args.seed)
        report = evaluate_grid(
            predictor,
            corpus,
            split,
            args.obs,
            args.pred,
            observed_source,
            bucket_edges=args.bucket_edges if args.metric == "buckets" else None,
        )
        report.config_echo = {
            "seed": args.seed,
            "obs": " ".join(f"{a:g}" for a in report.alphas),
            "pred": " ".join(f"{b:g}" for b in report.betas),
        }
        reports.append(report)
        write_per_video_csv(report, out_dir / f"per_video_{kind}.csv")
    _write_grid_csv(reports, args, out_dir / "grid.csv")
    if not args.no_plots:
        for a in reports[0].alphas:
            _write_moc_plot(reports, a, out_dir / f"moc_obs{_pct(a)}.svg")
    print(f"evaluated {len(reports)} model(s) on {reports[0].video_count} videos -> {out_dir}")
    return EXIT_OK


def _write_grid_csv(reports: list[EvaluationReport], args, path: Path) -> None:
    first = reports[0]
    header = ["model"]
    cells = [(a, b) for a in first.alphas for b in first.betas]
    header += [f"moc_obs{_pct(a)}_pred{_pct(b)}" for a, b in cells]
    if args.metric == "actions":
        for pos in (1, 2, 3):
            header += [f"act{pos}_obs{_pct(a)}_pred{_pct(b)}" for a, b in cells]
    if args.metric == "buckets":
        edges = list(args.bucket_edges)
        for lo, hi in zip(edges, edges[1:]):
            header += [f"bucket{lo}-{hi}_obs{_pct(a)}_pred{_pct(b)}" for a, b in cells]
    lines = [
        f"# observed={first.observed_source}",
        f"# seed={args.seed}",
        f"# videos={first.video_count}",
        ",".join(header),
    ]
    for report in reports:
        row = [report.model_name]
        row += [f"{report.moc[cell]:.6f}" for cell in cells]
        if args.metric == "actions":
            for pos in range(3):
                for cell in cells:
                    value = report.action_positions[cell][pos]
                    row.append("" if value is None else f"{value:.6f}")
        if args.metric == "buckets":
            edges = list(args.bucket_edges)
            for bucket in zip(edges, edges[1:]):
                for cell in cells:
                    value = report.bucket_moc[cell].get(bucket)
                    row.append("" if value is None else f"{value:.6f}")
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_moc_plot(reports: list[EvaluationReport], alpha: float, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "anticipate"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    betas = reports[0].betas
    for report in reports:
        ax.plot(betas, [report.moc[(alpha, b)] for b in betas], marker="o",
                label=report.model_name)
    ax.set_xlabel("prediction fraction")
    ax.set_ylabel("MoC")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(f"observed {_pct(alpha)}%")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _gradcheck_rnn(seed: int, inject_fault: bool):
    from .timeline import Segment, SegmentSequence

    rng = np.random.default_rng(seed)
    config = RnnConfig(num_classes=4, hidden_size=8, seed=seed, length_scale=1.0)
    model = init_rnn_model(config, rng)
    seq = SegmentSequence(
        (Segment(0, 5), Segment(2, 4), Segment(1, 6), Segment(3, 5)), 20
    )
    examples = make_rnn_examples(seq, 20, 1.0, rng)
    tokens, target = examples[-1]  # three observed segments

    def loss_fn():
        return rnn_loss_and_grads(model, tokens, target)[0]

    def grads_fn():
        grads = rnn_loss_and_grads(model, tokens, target)[1]
        if inject_fault:
            grads["gru1.wz"] = grads["gru1.wz"] + 1e-2
        return grads

    return loss_fn, grads_fn, model.params


def _gradcheck_cnn(seed: int, inject_fault: bool):
    rng = np.random.default_rng(seed)
    config = CnnConfig(rows=16, num_classes=4, seed=seed)
    model = init_cnn_model(config, rng)
    labels = [int(rng.integers(4))]
    while len(labels) < 5:
        nxt = int(rng.integers(4))
        if nxt != labels[-1]:
            labels.append(nxt)
    timeline = FrameTimeline(
        np.concatenate([np.full(int(rng.integers(8, 16)), lab) for lab in labels])
    )
    x, target = make_cnn_examples(timeline, 16, 4)[1]

    def loss_fn():
        return cnn_loss_and_grads(model, x, target)[0]

    def grads_fn():
        grads = cnn_loss_and_grads(model, x, target)[1]
        if inject_fault:
            grads["conv1.w"] = grads["conv1.w"] + 1e-2
        return grads

    return loss_fn, grads_fn, model.params


def cmd_gradcheck(args) -> int:
    failed = False
    for arch, builder in (("rnn", _gradcheck_rnn), ("cnn", _gradcheck_cnn)):
        loss_fn, grads_fn, params = builder(args.seed, args.inject_fault)
        report = grad_check(loss_fn, grads_fn, params)
        status = "ok" if report.passed(args.tolerance) else "FAIL"
        if status == "FAIL":
            failed = True
        print(f"{arch}: max relative error {report.max_rel_error:.3e} [{status}]")
        for block in sorted(report.blocks, key=lambda b: -b.max_rel_error)[:3]:
            print(f"  {block.name}: {block.max_rel_error:.3e}")
    if failed:
        print("gradient check FAILED", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"all gradients within tolerance {args.tolerance:g}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
