# %% [markdown]
# Full recognition run on a synthetic corpus whose test images are rotated up
# to 20 degrees and rescaled up to 10 percent: log-polar arm against the plain
# resize arm, then recognition and false rejection against test subset size.

# %%
import tempfile
from pathlib import Path

from polarface.pipeline import (
    PipelineConfig, emit_curves, load_run, run_evaluation, run_training, save_run, sweep_curves,
    synthetic_dataset,
)

ds = synthetic_dataset(n_subjects=8, n_images=20, split_fraction=0.56, seed=0)
print(f"{len(ds.subjects)} subjects, {len(ds.train)} train / {len(ds.test)} test images")

# %%
for polar in (True, False):
    model = run_training(ds, PipelineConfig(polar=polar))
    r = run_evaluation(ds, model)
    print(f"{model.config.arm:5s}: U={model.space.U:3d}, {model.state.epoch} epochs, "
          f"recognition {r.recognition_rate:.3f}, false rejection {r.false_rejection_rate:.3f}")

# %%
# a rejection threshold on the winning output trades misclassification for rejection
for thr in (None, 0.0, 0.5, 0.9):
    r = run_evaluation(ds, model, threshold=thr)
    print(f"plain arm, threshold {thr}: correct {r.correct}, rejected {r.rejected}, "
          f"misclassified {r.misclassified}")

# %%
print(emit_curves(sweep_curves(ds, PipelineConfig(), subset_sizes=(10, 20, 40, 70))))

# %%
# run directories hold everything needed to evaluate again without retraining
with tempfile.TemporaryDirectory() as d:
    model = run_training(ds, PipelineConfig())
    save_run(d, model, ds)
    print(sorted(p.name for p in Path(d).iterdir()))
    again, _ = load_run(d)
    print("reloaded recognition", run_evaluation(ds, again).recognition_rate)
