"""Personality-attention bagging of per-subject trees for ECG/GSR emotion recognition.

Pipeline: :mod:`signals` (filtering, windowing) -> :mod:`features` (HRV/GSR
window features) -> :mod:`selection` (three-stage feature selection) ->
:mod:`tree` (CART weak learners) -> :mod:`apex` (attention-weighted
ensemble) -> :mod:`evaluation` (leave-one-subject-out). :mod:`synth`
generates cohorts with a tunable personality-response coupling.
"""
from .apex import (ApexModel, AttentionWeights, SubjectDataset, attention_scores, ensemble_predict,
                   fit_apex, normalize_products, personality_product, predict_subject,
                   uniform_weights)
from .cohort import PersonalityTraits, Subject, Trial
from .errors import (ApexError, ConfigurationError, FitError, IngestionError, InputError,
                     InsufficientSignalError, ProtocolError, SelectionError)
from .evaluation import EvalConfig, EvaluationReport, auc, loso_compare, loso_evaluate, roc_curve
from .kernels import backend_name
from .tree import DecisionTree, TreeParams, fit

__version__ = "0.1.0"

__all__ = [
    "ApexModel", "AttentionWeights", "SubjectDataset", "attention_scores", "ensemble_predict",
    "fit_apex", "normalize_products", "personality_product", "predict_subject", "uniform_weights",
    "PersonalityTraits", "Subject", "Trial", "ApexError", "ConfigurationError", "FitError",
    "IngestionError", "InputError", "InsufficientSignalError", "ProtocolError", "SelectionError",
    "EvalConfig", "EvaluationReport", "auc", "loso_compare", "loso_evaluate", "roc_curve",
    "backend_name", "DecisionTree", "TreeParams", "fit", "__version__",
]
