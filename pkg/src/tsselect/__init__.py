"""Performance estimation methods for model selection in time-series forecasting."""

from .core import EmbeddedDataset, Partition, TimeSeries, embed, load_csv, partition
from .fnn import FnnConfig, select_embedding_dimension
from .harness import ExperimentConfig, RunRecord, run_experiment, run_series
from .learners import LearnerSpec, default_pool, fit, predict
from .metrics import loss_of_estimator, oracle_best, rmse, summarize
from .resampling import ESTIMATORS, ResamplerSpec, SplitPlan, make_plan
from .selection import aggregate_mean, aggregate_rank, evaluate_pool, select
from .synthetic import generate_synthetic

__version__ = "0.1.0"
