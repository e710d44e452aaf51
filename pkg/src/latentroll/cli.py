"""Command-line entry points: preprocess, train, evaluate, serve, plus
helpers for generating a demo corpus and a starter config."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import evaluation, plots
from .checkpoint import load_checkpoint, model_from_checkpoint
from .model import DESK_PROFILE
from .pipeline import PreprocessConfig, build_dataset, load_dataset
from .prior import GenreRingPrior
from .service import serve
from .synthetic import write_demo_corpus
from .training import TrainConfig, load_train_config, train

log = logging.getLogger(__name__)


def _add_preprocess(subparsers) -> None:
    p = subparsers.add_parser("preprocess", help="build dataset shards from a MIDI corpus")
    p.add_argument("--corpus", required=True, help="directory of .mid files")
    p.add_argument("--metadata", required=True, help="JSON file mapping song id to genre tags")
    p.add_argument("--bars", type=int, choices=(2, 16), default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stride-bars", type=int, default=1)
    p.add_argument("--augment", choices=("sampled", "none"), default="sampled")
    p.add_argument("--vocab-size", type=int, default=32)
    p.add_argument("--circle-order", help="JSON file listing the vocabulary tags in ring order")
    p.add_argument("--workers", type=int, default=1)


def _run_preprocess(args) -> int:
    circle_order = None
    if args.circle_order:
        circle_order = json.loads(Path(args.circle_order).read_text())
    config = PreprocessConfig(
        bars=args.bars,
        stride_bars=args.stride_bars,
        augment=args.augment,
        seed=args.seed,
        vocab_size=args.vocab_size,
        circle_order=circle_order,
        workers=args.workers,
    )
    report = build_dataset(args.corpus, args.metadata, args.out, config)
    print(json.dumps(report, indent=1, sort_keys=True))
    return 0


def _add_train(subparsers) -> None:
    p = subparsers.add_parser("train", help="run the optimization loop")
    p.add_argument("--data", required=True, help="shard directory from preprocess")
    p.add_argument("--config", required=True, help="YAML training config")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", help="checkpoint to continue from")


def _run_train(args) -> int:
    config = load_train_config(args.config)
    dataset = load_dataset(args.data)
    final = train(config, dataset, args.out, resume=args.resume)
    print(f"final checkpoint: {final}")
    return 0


def _add_evaluate(subparsers) -> None:
    p = subparsers.add_parser("evaluate", help="accuracy, interpolation, and latent-space reports")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--interp-pairs", type=int, default=256)
    p.add_argument("--interp-steps", type=int, default=11)
    p.add_argument("--genres", nargs=2, metavar=("A", "B"), help="genre tag pair for the PCA projection")
    p.add_argument("--samples-per-component", type=int, default=256)
    p.add_argument("--pca-per-genre", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)


def _run_evaluate(args) -> int:
    report_dir = Path(args.report)
    report_dir.mkdir(parents=True, exist_ok=True)
    ckpt = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(ckpt)
    model.eval()
    dataset = load_dataset(args.data)
    rng = np.random.default_rng(args.seed)
    report: dict = {}

    table = evaluation.reconstruction_accuracy_table(model, dataset.validation.tokens)
    report["accuracy"] = table.to_json()
    log.info("validation accuracy: %.4f (all tracks)", table.mean_dbgs)

    pool = dataset.validation.tokens
    if pool.shape[0] >= 2:
        pairs = min(args.interp_pairs, pool.shape[0] // 2)
        order = rng.permutation(pool.shape[0])
        x1 = pool[order[:pairs]]
        x2 = pool[order[pairs : 2 * pairs]]
        curve = evaluation.interpolation_curve(model, x1, x2, n_steps=args.interp_steps, rng=rng)
        report["interpolation"] = curve
        plots.plot_interpolation_curve(curve, report_dir / "hamming_curve.png")

    if isinstance(ckpt.prior, GenreRingPrior):
        profile = evaluation.genre_metric_profile(
            model, ckpt.prior, samples_per_component=args.samples_per_component, rng=rng
        )
        report["genre_profile"] = profile.to_json()
        component_tags = None
        if ckpt.vocab is not None:
            by_component = {c: t for t, c in zip(ckpt.vocab.tags, ckpt.vocab.component_of)}
            component_tags = [by_component.get(i, f"#{i}") for i in range(ckpt.prior.num_components)]
        plots.plot_genre_profile(profile, report_dir / "genre_profile.png", component_tags)

    if args.genres:
        projection = evaluation.pca_genre_projection(
            model, dataset, args.genres[0], args.genres[1],
            n_per_genre=args.pca_per_genre, rng=rng, split="validation",
        )
        report["pca"] = projection.to_json()
        plots.plot_pca_projection(projection, report_dir / "pca.png")

    (report_dir / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True))
    print(f"report written to {report_dir / 'report.json'}")
    return 0


def _add_serve(subparsers) -> None:
    p = subparsers.add_parser("serve", help="HTTP API over a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="shard directory for exemplars")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")


def _run_serve(args) -> int:
    serve(args.checkpoint, data_dir=args.data, port=args.port, host=args.host)
    return 0


def _add_demo_corpus(subparsers) -> None:
    p = subparsers.add_parser("demo-corpus", help="generate a synthetic MIDI corpus for a quick start")
    p.add_argument("--out", required=True)
    p.add_argument("--songs", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)


def _run_demo_corpus(args) -> int:
    metadata = write_demo_corpus(args.out, n_songs=args.songs, seed=args.seed)
    print(f"corpus written to {args.out} (metadata: {metadata})")
    return 0


def _add_init_config(subparsers) -> None:
    p = subparsers.add_parser("init-config", help="write a starter training config")
    p.add_argument("--out", required=True)
    p.add_argument("--profile", choices=("full", "desk"), default="full")


def _run_init_config(args) -> int:
    config = TrainConfig()
    if args.profile == "desk":
        config = TrainConfig(model=DESK_PROFILE, batch_size=32, max_updates=2000, n_critic=1,
                             log_interval=50, checkpoint_interval=1000)
    Path(args.out).write_text(yaml.safe_dump(config.to_json(), sort_keys=False))
    print(f"config written to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = argparse.ArgumentParser(prog="latentroll")
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_preprocess(subparsers)
    _add_train(subparsers)
    _add_evaluate(subparsers)
    _add_serve(subparsers)
    _add_demo_corpus(subparsers)
    _add_init_config(subparsers)
    args = parser.parse_args(argv)
    runners = {
        "preprocess": _run_preprocess,
        "train": _run_train,
        "evaluate": _run_evaluate,
        "serve": _run_serve,
        "demo-corpus": _run_demo_corpus,
        "init-config": _run_init_config,
    }
    return runners[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
