"""Synthetic benchmark for correlation-structure clustering of three-variate time series."""
__version__ = "0.1.0"

from .datagen import GenerationConfig, SubjectDataset, generate_dataset, generate_subject
from .degrade import Clustering, build_suite
from .estimators import kendall, pearson, spearman
from .evaluation import EvaluationReport, evaluate
from .patterns import CorrelationVector, catalogue, get_pattern
from .stats import split_consistency, wilcoxon_signed_rank

__all__ = [
    "Clustering", "CorrelationVector", "EvaluationReport", "GenerationConfig", "SubjectDataset",
    "build_suite", "catalogue", "evaluate", "generate_dataset", "generate_subject", "get_pattern",
    "kendall", "pearson", "spearman", "split_consistency", "wilcoxon_signed_rank",
]
