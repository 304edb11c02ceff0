"""Federated humor-preference classification with prior-scaled training and inference."""

from .data import DatasetSplit, HeadlineRecord, parse_csv, split_stats
from .evaluation import ConfusionMatrix, EvalReport, confusion, evaluate_population, macro_metrics
from .federation import FederationConfig, aggregate, client_update, run_federation, sample_clients
from .labeling import ClientProfile, default_beta, empirical_priors, generate_labels, make_population
from .model import ModelParams, forward, loss_and_grad, scale_infer, scale_train, sgd_step

__version__ = "0.1.0"

__all__ = [
    "ClientProfile", "ConfusionMatrix", "DatasetSplit", "EvalReport", "FederationConfig",
    "HeadlineRecord", "ModelParams", "aggregate", "client_update", "confusion", "default_beta",
    "empirical_priors", "evaluate_population", "forward", "generate_labels", "loss_and_grad",
    "macro_metrics", "make_population", "parse_csv", "run_federation", "sample_clients",
    "scale_infer", "scale_train", "sgd_step", "split_stats",
]
