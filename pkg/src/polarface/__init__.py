"""Face recognition from log-polar images, eigenface projection and a momentum-trained MLP."""

from .eigenspace import EigenSpace, build_eigenspace, project, project_many, reconstruct
from .imageio import GrayImage, read_pgm, resize_nearest, synth_face, write_pgm
from .logpolar import (PolarGeometry, cart_to_polar, circular_column_shift, compute_geometry,
                       log_polar_transform)
from .mlp import MlpNetwork, TrainConfig, classify, forward, init_network, train
from .pipeline import (EvalReport, LabeledDataset, PipelineConfig, ingest_dataset, run_evaluation,
                       run_training, synthetic_dataset)

__version__ = "0.1.0"
