"""Command-line interface: ``stereo compute|train|extract|gradcheck|ablate|synth``.

Results go to stdout as one JSON object. Failures exit with status 1 and a
single JSON line ``{"error": ..., "message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import costs
from .imaging import colorize, load_image, load_pfm, save_image, save_pfm
from .learn import (
    PatchPairDataset,
    TrainConfig,
    extract_examples,
    gradient_check,
    ranking_accuracy,
    train,
)
from .learn.train import default_loss, random_check_batch, small_spec
from .metrics import error_rate
from .net import ACCURATE, FAST, init_weights, load_weights, save_weights
from .pipeline import COST_SOURCES, ConfigError, StereoPair, ablation_run, run_pipeline
from .presets import PRESETS, STAGES, Hyperparams, get_preset, parse_config
from .synthetic import random_dot_stereogram

log = logging.getLogger("cnnstereo")

GRADCHECK_TOLERANCE = 1e-4


def _hyperparams(args) -> Hyperparams:
    hp = get_preset(args.preset)
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(parse_config(Path(args.config).read_text()))
    for item in getattr(args, "set", None) or []:
        overrides.update(parse_config(item))
    hp = hp.replace(**overrides)
    disabled = getattr(args, "disable", None) or []
    return hp.without(*disabled) if disabled else hp


def _load_mask(path) -> np.ndarray:
    return load_image(path) > 0


def _load_network(path):
    return load_weights(path) if path else None


def _pair_dirs(root: Path) -> list[Path]:
    if (root / "left.pgm").exists():
        return [root]
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "left.pgm").exists())
    if not dirs:
        raise FileNotFoundError(f"no left.pgm/right.pgm/gt.pfm triples under {root}")
    return dirs


def _load_pair(d: Path) -> StereoPair:
    mask = _load_mask(d / "mask.pgm") if (d / "mask.pgm").exists() else None
    return StereoPair(load_image(d / "left.pgm"), load_image(d / "right.pgm"), load_pfm(d / "gt.pfm"), mask)


def _extract(pair: StereoPair, hp: Hyperparams, rng: np.random.Generator) -> PatchPairDataset:
    return extract_examples(
        pair.left, pair.right, pair.gt, hp.input_patch_size,
        hp.dataset_pos, hp.dataset_neg_low, hp.dataset_neg_high, rng, hp.augment,
    )


def cmd_compute(args) -> dict:
    hp = _hyperparams(args)
    left = load_image(args.left)
    right = load_image(args.right)
    network = _load_network(args.weights)
    result = run_pipeline(left, right, hp, args.cost, args.max_disparity, network)
    save_pfm(result.disparity, args.out)
    if args.color:
        Path(args.color).write_bytes(colorize(result.disparity, args.max_disparity))
    if args.dump_cost:
        costs.write_cost_volume(result.raw_cost, args.dump_cost)
    out = {"out": str(args.out), "height": left.shape[0], "width": left.shape[1], "timings": result.timings}
    if args.gt:
        mask = _load_mask(args.mask) if args.mask else None
        report = error_rate(result.disparity, load_pfm(args.gt), args.threshold, mask)
        report.timings = result.timings
        out.update(report.as_dict())
    return out


def cmd_extract(args) -> dict:
    hp = _hyperparams(args)
    pair = StereoPair(load_image(args.left), load_image(args.right), load_pfm(args.gt))
    dataset = _extract(pair, hp, np.random.default_rng(args.seed))
    dataset.save(args.out)
    return {"out": str(args.out), "examples": len(dataset), "pairs": dataset.num_pairs}


def cmd_train(args) -> dict:
    hp = _hyperparams(args)
    if hp.arch != args.arch:
        raise ConfigError(f"preset {hp.name!r} describes the {hp.arch} architecture, not {args.arch}")
    rng = np.random.default_rng(args.seed)
    data = Path(args.data)
    if data.is_file():
        dataset = PatchPairDataset.load(data)
    else:
        dataset = PatchPairDataset.concatenate([_extract(_load_pair(d), hp, rng) for d in _pair_dirs(data)])
    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr if args.lr is not None else hp.learning_rate,
        decay_epoch=min(args.decay_epoch, args.epochs),
        seed=args.seed,
    )
    spec = hp.network_spec()
    augment = None if args.no_augment else hp.augment
    result = train(spec, dataset, config, augment,
                   callback=lambda e, loss: log.info("epoch %d loss %.6f", e, loss))
    save_weights(spec, result.weights, args.out)
    return {
        "out": str(args.out),
        "examples": len(dataset),
        "epoch_losses": result.epoch_losses,
        "ranking_accuracy": ranking_accuracy(spec, result.weights, dataset),
    }


def cmd_gradcheck(args) -> dict:
    rng = np.random.default_rng(args.seed)
    spec = small_spec(args.arch)
    weights = init_weights(spec, rng, dtype=np.float64)
    left, right, labels = random_check_batch(spec, rng)
    loss = args.loss or default_loss(args.arch)
    err = gradient_check(spec, weights, left, right, labels, loss)
    return {"arch": args.arch, "loss": loss, "max_relative_error": err, "passed": err < GRADCHECK_TOLERANCE}


def cmd_ablate(args) -> dict:
    hp = _hyperparams(args)
    pairs = [_load_pair(d) for d in _pair_dirs(Path(args.data))]
    max_disparity = args.max_disparity or int(max(np.nanmax(p.gt) for p in pairs)) + 1
    rows = ablation_run(pairs, hp, args.cost, max_disparity, args.threshold, _load_network(args.weights))
    return {"rows": [{"excluded": r.name, "error_rate": r.error_rate} for r in rows]}


def cmd_synth(args) -> dict:
    rng = np.random.default_rng(args.seed)
    root = Path(args.out)
    written = []
    for i in range(args.count):
        pair = random_dot_stereogram(rng, args.height, args.width, args.max_disparity, noise=args.noise)
        d = root / f"pair{i:03d}"
        d.mkdir(parents=True, exist_ok=True)
        save_image(pair.left, d / "left.pgm")
        save_image(pair.right, d / "right.pgm")
        save_pfm(pair.gt, d / "gt.pfm")
        save_image(pair.nonocc.astype(np.float32), d / "mask.pgm", maxval=255)
        written.append(str(d))
    return {"pairs": written}


def _add_preset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--config", help="file of 'key = value' hyperparameter overrides")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one hyperparameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stereo", description="Stereo matching with learned or classical costs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="disparity map of a rectified pair")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--cost", required=True, choices=COST_SOURCES)
    p.add_argument("--weights")
    p.add_argument("--max-disparity", type=int, required=True)
    _add_preset_args(p)
    p.add_argument("--disable", action="append", choices=STAGES, default=[])
    p.add_argument("--out", required=True)
    p.add_argument("--color")
    p.add_argument("--gt")
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--mask")
    p.add_argument("--dump-cost")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("train", help="train a network on ground-truth pairs")
    p.add_argument("--arch", required=True, choices=(FAST, ACCURATE))
    p.add_argument("--data", required=True, help="directory of pairs or a file written by 'extract'")
    _add_preset_args(p)
    p.add_argument("--epochs", type=int, default=14)
    p.add_argument("--decay-epoch", type=int, default=11)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="write a training set of patch pairs")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--gt", required=True)
    _add_preset_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("gradcheck", help="compare analytic and numeric gradients")
    p.add_argument("--arch", required=True, choices=(FAST, ACCURATE))
    p.add_argument("--loss", choices=("hinge", "bce"))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ablate", help="error with each stage removed")
    p.add_argument("--data", required=True)
    _add_preset_args(p)
    p.add_argument("--cost", required=True, choices=COST_SOURCES)
    p.add_argument("--weights")
    p.add_argument("--max-disparity", type=int)
    p.add_argument("--threshold", type=float, default=3.0)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="generate random-dot stereo pairs")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--max-disparity", type=int, default=12)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        out = args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc).strip("'\"")}), file=sys.stderr)
        return 1
    print(json.dumps(out, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
