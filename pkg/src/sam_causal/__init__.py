"""Causal graph discovery with gated conditional generators and a shared adversarial critic."""

from .benchgen import SyntheticSpec, generate_dataset, toy_parabola, toy_vstructure
from .data import Dataset, read_data_csv
from .errors import (ContractError, DataError, NotPositiveDefiniteError, NumericOverflowError,
                     SamError, TrainingDivergedError)
from .metrics import aupr, evaluate, pr_curve, shd
from .trainer import (CausationScores, TrainConfig, extract_graph, score_fixed_structure,
                      train_ensemble, train_single)

__version__ = "0.1.0"
