"""Robust online learning from noisy labelled batches.

A label-quality model filters each arriving batch, a classifier is trained on
what passes, and both vote on final predictions. Selection schemes range from
plain filtering through two-model voting to oracle-assisted relabelling.
"""
from .datastream import (BatchStream, CsvSchema, DataError, Dataset, Instance, inject_ncar_noise,
                         load_csv, make_synthetic, save_csv, stream_batches)
from .ensemble import ensemble_predict
from .harness import (ConfigError, ExperimentConfig, MetricsRecord, ModelSpec, benchmark_config,
                      run_baseline, run_experiment, run_sweep)
from .metrics import compute_hot_metrics, f1_macro
from .models import EmptyTrainingSet, ModelState, evaluate, fit, predict_proba
from .oracle import Oracle, preselect_random
from .selection import (InactiveList, SelectionOutcome, rank_by_loss, rank_uncertainty, select_active,
                        select_basic, select_slim, select_voting)

__version__ = "0.1.0"
