"""End-to-end recognition: ingest, transform, eigenspace, MLP, evaluation and persistence."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import mlp
from .eigenspace import EigenSpace, build_eigenspace, project_many
from .imageio import GrayImage, as_image, load_pgm, random_face, resize_nearest, save_pgm, synth_face
from .logpolar import compute_geometry, log_polar_transform

log = logging.getLogger(__name__)

TRAIN, TEST = "TRAIN", "TEST"


class PipelineError(RuntimeError):
    pass


class DatasetError(PipelineError):
    pass


class DimensionMismatchError(PipelineError):
    pass


@dataclass(frozen=True, eq=False)
class Sample:
    source: str | GrayImage
    subject: int
    split: str

    def load(self) -> GrayImage:
        if isinstance(self.source, GrayImage):
            return self.source
        try:
            return load_pgm(self.source)
        except (OSError, ValueError) as exc:
            raise DatasetError(f"{self.source}: {exc}") from exc

    @property
    def name(self) -> str:
        return self.source if isinstance(self.source, str) else "<memory>"


@dataclass
class LabeledDataset:
    subjects: list[str]
    samples: list[Sample]

    def __post_init__(self):
        if len(self.subjects) < 2:
            raise DatasetError(f"need at least 2 subjects, got {len(self.subjects)}")
        trained = {s.subject for s in self.samples if s.split == TRAIN}
        for s in self.samples:
            if s.split not in (TRAIN, TEST):
                raise DatasetError(f"{s.name}: unknown split {s.split!r}")
            if s.split == TEST and s.subject not in trained:
                raise DatasetError(f"subject {self.subjects[s.subject]!r} has test images "
                                   "but no training images")

    @property
    def train(self) -> list[Sample]:
        return [s for s in self.samples if s.split == TRAIN]

    @property
    def test(self) -> list[Sample]:
        return [s for s in self.samples if s.split == TEST]


def ingest_dataset(root, split_fraction: float = 0.56, seed: int = 0) -> LabeledDataset:
    """Read ``<root>/<subject>/*.pgm`` and split each subject's images with a seeded shuffle.

    round(split_fraction * count) images of every subject go to TRAIN.
    """
    if not 0 < split_fraction < 1:
        raise ValueError(f"split_fraction must be in (0, 1), got {split_fraction}")
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")
    subjects = sorted(p.name for p in root.iterdir() if p.is_dir())
    samples = []
    for idx, label in enumerate(subjects):
        files = sorted(str(p) for p in (root / label).iterdir() if p.suffix.lower() == ".pgm")
        if len(files) < 2:
            raise DatasetError(f"{root / label}: need at least 2 PGM files, found {len(files)}")
        n_train = int(np.floor(split_fraction * len(files) + 0.5))
        order = np.random.default_rng([seed, idx]).permutation(len(files))
        chosen = set(order[:n_train].tolist())
        for i, f in enumerate(files):
            samples.append(Sample(f, idx, TRAIN if i in chosen else TEST))
    return LabeledDataset(subjects, samples)


def _subject_rng(seed: int, subject: int, image: int | None = None) -> np.random.Generator:
    key = [seed, subject] if image is None else [seed, subject, image]
    return np.random.default_rng(key)


def synth_subject(seed: int, subject: int, image: int, rotation_range: float = 0.0,
                  scale_range: float = 0.0, noise_sigma: float = 0.02,
                  shape: Sequence[int] = (64, 64)) -> GrayImage:
    """One rendering of a synthetic subject with random rotation and scale jitter."""
    params = random_face(_subject_rng(seed, subject))
    rng = _subject_rng(seed, subject, image)
    rotation = rng.uniform(-rotation_range, rotation_range)
    scale = 1.0 + rng.uniform(-scale_range, scale_range)
    noise_seed = int(rng.integers(2**31))
    return synth_face(noise_seed, params, rotation, scale, noise_sigma, shape)


def synthetic_dataset(n_subjects: int = 8, n_images: int = 20, split_fraction: float = 0.56,
                      seed: int = 0, rotation_range: float = 20.0, scale_range: float = 0.1,
                      noise_sigma: float = 0.02, shape: Sequence[int] = (64, 64),
                      perturb_train: bool = False) -> LabeledDataset:
    """In-memory corpus. The first round(split_fraction * n_images) images of each
    subject are TRAIN; unless ``perturb_train`` they are upright and unscaled, while
    TEST images get rotation and scale jitter up to the given ranges.
    """
    n_train = int(np.floor(split_fraction * n_images + 0.5))
    samples = []
    for s in range(n_subjects):
        for i in range(n_images):
            split = TRAIN if i < n_train else TEST
            jitter = split == TEST or perturb_train
            img = synth_subject(seed, s, i, rotation_range if jitter else 0.0,
                                scale_range if jitter else 0.0, noise_sigma, shape)
            samples.append(Sample(img, s, split))
    return LabeledDataset([f"s{s:02d}" for s in range(n_subjects)], samples)


def write_corpus(out_dir, n_subjects: int, n_images: int, seed: int = 0,
                 rotation_range: float = 20.0, scale_range: float = 0.1,
                 noise_sigma: float = 0.02, shape: Sequence[int] = (64, 64)) -> list[str]:
    """Write ``<out>/sNN/iNNN.pgm`` for every subject and image; returns the paths."""
    paths = []
    for s in range(n_subjects):
        d = Path(out_dir) / f"s{s:02d}"
        d.mkdir(parents=True, exist_ok=True)
        for i in range(n_images):
            p = d / f"i{i:03d}.pgm"
            save_pgm(p, synth_subject(seed, s, i, rotation_range, scale_range, noise_sigma, shape))
            paths.append(str(p))
    return paths


# --------------------------------------------------------------------------
# Training and evaluation
# --------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    polar: bool = True
    base: int = 2
    variance_keep: float = 0.95
    max_u: int | None = None
    hidden: tuple[int, ...] = mlp.DEFAULT_HIDDEN
    train: mlp.TrainConfig = field(default_factory=mlp.TrainConfig)

    @property
    def arm(self) -> str:
        return "polar" if self.polar else "plain"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        d["hidden"] = tuple(d["hidden"])
        d["train"] = mlp.TrainConfig(**d["train"])
        return cls(**d)


def prepare(img: GrayImage, polar: bool, base: int = 2) -> GrayImage:
    """Log-polar image, or for the plain arm a nearest-neighbour resize to the same S x S."""
    img = as_image(img)
    if polar:
        return log_polar_transform(img, base)
    S = compute_geometry(img.height, img.width, base).S
    return resize_nearest(img, S, S)


@dataclass
class TrainedModel:
    space: EigenSpace
    net: mlp.MlpNetwork
    config: PipelineConfig
    subjects: list[str]
    state: mlp.TrainState | None = None


def _features(samples: Iterable[Sample], space: EigenSpace, cfg: PipelineConfig) -> np.ndarray:
    prepared = []
    for s in samples:
        img = prepare(s.load(), cfg.polar, cfg.base)
        if img.height * img.width != space.dim:
            raise DimensionMismatchError(
                f"{s.name}: image gives dimension {img.height * img.width} "
                f"({img.height}x{img.width}) but the model expects {space.dim} "
                f"({space.side}x{space.side})")
        prepared.append(img.vector())
    return project_many(prepared, space)


def run_training(ds: LabeledDataset, cfg: PipelineConfig | None = None) -> TrainedModel:
    """Transform TRAIN images, build the eigenspace from them and fit the MLP on their projections."""
    cfg = PipelineConfig() if cfg is None else cfg
    train = ds.train
    images = [prepare(s.load(), cfg.polar, cfg.base) for s in train]
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"training images transform to differing sizes {sorted(shapes)}")
    space = build_eigenspace(images, cfg.variance_keep, cfg.max_u)
    if space.U == 0:
        raise PipelineError("eigenspace has rank 0: training images are identical")
    X = project_many(images, space)
    T = mlp.one_hot([s.subject for s in train], len(ds.subjects))
    net = mlp.init_network((space.U, *cfg.hidden, len(ds.subjects)), cfg.train.rng_seed)
    net, state = mlp.train(net, X, T, cfg.train)
    log.info("%s arm: U=%d, %d epochs, final mse %.4g", cfg.arm, space.U, state.epoch, state.final_mse)
    return TrainedModel(space, net, cfg, list(ds.subjects), state)


@dataclass
class EvalReport:
    total: int
    correct: int
    rejected: int
    misclassified: int
    per_subject: dict[str, dict[str, int]] = field(default_factory=dict)
    arm: str = "polar"
    subset_size: int | None = None

    def __post_init__(self):
        if self.correct + self.rejected + self.misclassified != self.total:
            raise ValueError("correct + rejected + misclassified must equal total")

    @property
    def recognition_rate(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def false_rejection_rate(self) -> float:
        return (self.rejected + self.misclassified) / self.total if self.total else 0.0


def run_evaluation(ds: LabeledDataset, model: TrainedModel, threshold: float | None = None,
                   subset_size: int | None = None) -> EvalReport:
    """Classify the TEST images (the first ``subset_size`` of them if given) and tally."""
    test = ds.test
    if subset_size is not None:
        test = test[:subset_size]
    if not test:
        raise DatasetError("no test images to evaluate")
    F = _features(test, model.space, model.config)
    outputs, _ = mlp.forward(model.net, F)
    correct = rejected = wrong = 0
    per = {label: {"total": 0, "correct": 0} for label in model.subjects}
    for s, out in zip(test, outputs):
        k = mlp.decide(out, threshold)
        label = ds.subjects[s.subject]
        per.setdefault(label, {"total": 0, "correct": 0})["total"] += 1
        if k == mlp.REJECT:
            rejected += 1
        elif model.subjects[k] == label:
            correct += 1
            per[label]["correct"] += 1
        else:
            wrong += 1
    return EvalReport(len(test), correct, rejected, wrong, per, model.config.arm, subset_size)


def classify_image(img: GrayImage, model: TrainedModel, threshold: float | None = None) -> str | None:
    """Subject label for a single image, or None when rejected."""
    F = _features([Sample(as_image(img), 0, TEST)], model.space, model.config)
    k = mlp.classify(model.net, F[0], threshold)
    return None if k == mlp.REJECT else model.subjects[k]


def sweep_curves(ds: LabeledDataset, cfg: PipelineConfig, subset_sizes: Sequence[int],
                 threshold: float | None = None) -> list[EvalReport]:
    """Train both arms and evaluate each on growing test subsets."""
    reports = []
    for polar in (True, False):
        arm_cfg = PipelineConfig(polar, cfg.base, cfg.variance_keep, cfg.max_u, cfg.hidden, cfg.train)
        model = run_training(ds, arm_cfg)
        for n in subset_sizes:
            reports.append(run_evaluation(ds, model, threshold, n))
    return reports


def emit_curves(reports: Sequence[EvalReport]) -> str:
    """CSV ``arm,subset_size,recognition_rate,false_rejection_rate`` sorted by (arm, subset_size)."""
    if not reports:
        raise ValueError("no reports to emit")
    rows = sorted(reports, key=lambda r: (r.arm, r.total if r.subset_size is None else r.subset_size))
    buf = io.StringIO()
    buf.write("arm,subset_size,recognition_rate,false_rejection_rate\n")
    for r in rows:
        size = r.total if r.subset_size is None else r.subset_size
        buf.write(f"{r.arm},{size},{r.recognition_rate:.6f},{r.false_rejection_rate:.6f}\n")
    return buf.getvalue()


def parse_curves(text: str) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({"arm": row["arm"], "subset_size": int(row["subset_size"]),
                     "recognition_rate": float(row["recognition_rate"]),
                     "false_rejection_rate": float(row["false_rejection_rate"])})
    return rows


# --------------------------------------------------------------------------
# Run directories
# --------------------------------------------------------------------------


def save_run(run_dir, model: TrainedModel, ds: LabeledDataset, extra: dict | None = None) -> None:
    """Write eigenspace.json, mlp.json, split.csv and config.json."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "eigenspace.json").write_text(model.space.to_json())
    final = model.state.final_mse if model.state is not None else None
    (run_dir / "mlp.json").write_text(mlp.model_to_json(model.net, model.config.train, final))
    with open(run_dir / "split.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject", "arm", "split"])
        for s in ds.samples:
            w.writerow([s.name, ds.subjects[s.subject], model.config.arm, s.split])
    config = {"pipeline": model.config.to_dict(), "subjects": model.subjects}
    config.update(extra or {})
    (run_dir / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))


def load_run(run_dir) -> tuple[TrainedModel, LabeledDataset | None]:
    """Reload a run directory; the dataset is rebuilt from split.csv when its files exist."""
    run_dir = Path(run_dir)
    try:
        space = EigenSpace.from_json((run_dir / "eigenspace.json").read_text())
        net, _, _ = mlp.model_from_json((run_dir / "mlp.json").read_text())
        config = json.loads((run_dir / "config.json").read_text())
    except (OSError, ValueError, KeyError) as exc:
        raise PipelineError(f"cannot load run directory {run_dir}: {exc}") from exc
    model = TrainedModel(space, net, PipelineConfig.from_dict(config["pipeline"]), config["subjects"])
    ds = None
    split_path = run_dir / "split.csv"
    if split_path.exists():
        index = {label: i for i, label in enumerate(model.subjects)}
        with open(split_path, newline="") as fh:
            samples = [Sample(row["path"], index[row["subject"]], row["split"])
                       for row in csv.DictReader(fh) if os.path.exists(row["path"])]
        if samples:
            ds = LabeledDataset(list(model.subjects), samples)
    return model, ds


def dataset_with_split(ds: LabeledDataset, subjects: Sequence[str]) -> LabeledDataset:
    """Relabel ``ds`` so its subject indices follow the model's ``subjects`` order."""
    index = {label: i for i, label in enumerate(subjects)}
    missing = [label for label in ds.subjects if label not in index]
    if missing:
        raise DatasetError(f"subjects {missing} are unknown to the model")
    samples = [Sample(s.source, index[ds.subjects[s.subject]], s.split) for s in ds.samples]
    return LabeledDataset(list(subjects), samples)
