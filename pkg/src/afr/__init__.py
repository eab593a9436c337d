"""Sparse additive binary classifier trained with a correntropy-induced loss.

Half-quadratic reformulation of the loss, ADMM for the group-penalized
weighted least-squares subproblem, and group-sparse feature selection.
"""
__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend_name
from .basis import (
    BasisConfig,
    DesignMatrix,
    FeatureMatrix,
    NormalizationStats,
    apply_normalizer,
    basis_eval,
    expand,
    fit_normalizer,
)
from .data import Dataset, SyntheticSpec, generate_synthetic, load_csv, split
from .metrics import accuracy, average_precision, kl_divergence
from .model import (
    TrainedModel,
    component_function_curve,
    feature_group_norms,
    load,
    predict_label,
    predict_labels,
    predict_score,
    predict_scores,
    save,
    select_features,
    train,
)
from .optimizer import SolverConfig, closs, fit, fit_design
