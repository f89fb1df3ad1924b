"""Command-line entry point: ``polarface <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import mlp, pipeline
from .imageio import PgmError, load_pgm, save_pgm
from .logpolar import compute_geometry, log_polar_transform


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _base(text: str) -> int:
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError(f"base must be >= 2, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _open_unit(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1), got {text}")
    return v


def _half_open_unit(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return v


def _unit(text: str) -> float:
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {text}")
    return v


def _threshold(text: str) -> float:
    v = float(text)
    if not -1 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must be in [-1, 1], got {text}")
    return v


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset root: <root>/<subject>/*.pgm")
    p.add_argument("--split", type=_open_unit, default=0.56, help="fraction of each subject used for training")
    p.add_argument("--seed", type=int, default=0, help="seed for the train/test shuffle")
    p.add_argument("--base", type=_base, default=2, help="log-polar resize base Z")
    p.add_argument("--variance-keep", type=_half_open_unit, default=0.95,
                   help="eigenvalue mass retained by the eigenspace")
    p.add_argument("--max-u", type=_positive_int, default=None, help="cap on the number of eigenfaces")
    p.add_argument("--hidden", type=_int_list, default=mlp.DEFAULT_HIDDEN,
                   help="sizes of the three hidden layers, comma-separated")
    p.add_argument("--lr", type=float, default=0.02, help="learning rate")
    p.add_argument("--momentum", type=_unit, default=0.9, help="momentum constant")
    p.add_argument("--max-epochs", type=_nonneg_int, default=5000, help="epoch limit")
    p.add_argument("--target-mse", type=_nonneg_float, default=1e-3, help="stop once training MSE reaches this")
    p.add_argument("--mlp-seed", type=int, default=0, help="seed for weight initialisation")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="polarface", formatter_class=fmt,
                                     description="Log-polar eigenface recognition with an MLP classifier.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", formatter_class=fmt, help="log-polar transform one PGM")
    p.add_argument("--input", required=True, help="source PGM")
    p.add_argument("--output", required=True, help="destination PGM")
    p.add_argument("--base", type=_base, default=2, help="resize base Z; output side is Z**q")
    p.add_argument("--maxval", type=_positive_int, default=255, help="maxval of the written PGM")

    p = sub.add_parser("synth", formatter_class=fmt, help="write a synthetic face corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--subjects", type=_positive_int, default=8, help="number of subjects")
    p.add_argument("--images", type=_positive_int, default=20, help="images per subject")
    p.add_argument("--rotation", type=_nonneg_float, default=20.0, help="max rotation in degrees (+-)")
    p.add_argument("--scale", type=_nonneg_float, default=0.1, help="max relative scale change (+-)")
    p.add_argument("--noise", type=_nonneg_float, default=0.02, help="additive noise sigma")
    p.add_argument("--size", type=_positive_int, default=64, help="image side in pixels")
    p.add_argument("--seed", type=int, default=0, help="corpus seed")

    p = sub.add_parser("train", formatter_class=fmt, help="train eigenspace and MLP, write a run directory")
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--no-polar", dest="polar", action="store_false", help="skip the log-polar transform")

    p = sub.add_parser("eval", formatter_class=fmt, help="evaluate a run on its test images")
    p.add_argument("--run", required=True, help="run directory written by train")
    p.add_argument("--data", default=None, help="re-split this dataset root instead of using split.csv")
    p.add_argument("--threshold", type=_threshold, default=None, help="reject when the winning output is below this")
    p.add_argument("--subset-size", type=_positive_int, default=None, help="evaluate only the first N test images")
    p.add_argument("--report", default=None, help="report CSV path (default: <run>/report.csv)")

    p = sub.add_parser("classify", formatter_class=fmt, help="identify the subject of one PGM")
    p.add_argument("--run", required=True, help="run directory written by train")
    p.add_argument("--input", required=True, help="PGM to classify")
    p.add_argument("--threshold", type=_threshold, default=None, help="reject when the winning output is below this")

    p = sub.add_parser("curves", formatter_class=fmt,
                       help="recognition and false rejection rate versus test subset size, both arms")
    _add_model_flags(p)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--subset-sizes", type=_int_list, default=(10, 20, 40), help="comma-separated test subset sizes")
    p.add_argument("--threshold", type=_threshold, default=None, help="reject when the winning output is below this")
    return parser


def _pipeline_config(args, polar: bool = True) -> pipeline.PipelineConfig:
    if len(args.hidden) != 3:
        raise argparse.ArgumentTypeError(f"--hidden needs three sizes, got {len(args.hidden)}")
    train = mlp.TrainConfig(args.lr, args.momentum, args.max_epochs, args.target_mse, args.mlp_seed)
    return pipeline.PipelineConfig(polar, args.base, args.variance_keep, args.max_u, args.hidden, train)


def _print_report(report: pipeline.EvalReport) -> None:
    print(f"arm={report.arm} total={report.total} correct={report.correct} "
          f"rejected={report.rejected} misclassified={report.misclassified}")
    print(f"recognition_rate={report.recognition_rate:.6f} "
          f"false_rejection_rate={report.false_rejection_rate:.6f}")


def cmd_transform(args) -> int:
    img = load_pgm(args.input)
    g = compute_geometry(img.height, img.width, args.base)
    save_pgm(args.output, log_polar_transform(img, args.base), args.maxval)
    print(f"m={g.m} n={g.n} R={g.R:g} q={g.q} S={g.S}")
    return 0


def cmd_synth(args) -> int:
    paths = pipeline.write_corpus(args.out, args.subjects, args.images, args.seed, args.rotation,
                                  args.scale, args.noise, (args.size, args.size))
    print(f"wrote {len(paths)} images for {args.subjects} subjects to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _pipeline_config(args, args.polar)
    ds = pipeline.ingest_dataset(args.data, args.split, args.seed)
    model = pipeline.run_training(ds, cfg)
    pipeline.save_run(args.out, model, ds, {
        "data": str(args.data), "split_fraction": args.split, "split_seed": args.seed})
    print(f"arm={cfg.arm} U={model.space.U} side={model.space.side} epochs={model.state.epoch} "
          f"final_mse={model.state.final_mse:.6g}")
    print(f"wrote run directory {args.out}")
    return 0


def _eval_dataset(args, model):
    if args.data is None:
        _, ds = pipeline.load_run(args.run)
        if ds is None:
            raise pipeline.DatasetError(f"no readable images listed in {Path(args.run) / 'split.csv'}")
        return ds
    config = json.loads((Path(args.run) / "config.json").read_text())
    ds = pipeline.ingest_dataset(args.data, config.get("split_fraction", 0.56), config.get("split_seed", 0))
    return pipeline.dataset_with_split(ds, model.subjects)


def cmd_eval(args) -> int:
    model, _ = pipeline.load_run(args.run)
    ds = _eval_dataset(args, model)
    report = pipeline.run_evaluation(ds, model, args.threshold, args.subset_size)
    out = Path(args.report) if args.report else Path(args.run) / "report.csv"
    out.write_text(pipeline.emit_curves([report]))
    _print_report(report)
    return 0


def cmd_classify(args) -> int:
    model, _ = pipeline.load_run(args.run)
    label = pipeline.classify_image(load_pgm(args.input), model, args.threshold)
    print("REJECT" if label is None else label)
    return 0


def cmd_curves(args) -> int:
    cfg = _pipeline_config(args)
    ds = pipeline.ingest_dataset(args.data, args.split, args.seed)
    reports = pipeline.sweep_curves(ds, cfg, args.subset_sizes, args.threshold)
    text = pipeline.emit_curves(reports)
    Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


COMMANDS = {
    "transform": cmd_transform,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "classify": cmd_classify,
    "curves": cmd_curves,
}


def _cause_chain(exc: BaseException) -> str:
    parts = []
    while exc is not None:
        parts.append(str(exc) or type(exc).__name__)
        exc = exc.__cause__
    return ": ".join(parts)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (pipeline.PipelineError, PgmError, mlp.DivergenceError, OSError, ValueError, KeyError) as exc:
        print(f"error: {_cause_chain(exc)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
