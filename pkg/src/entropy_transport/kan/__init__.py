"""Kolmogorov-Arnold network for learning ``S_A(U, n_A)``."""

from .bspline import bspline_basis, bspline_basis_and_derivative, extended_grid
from .network import KanConfig, KanLayer, KanModel
from .training import (
    CrossValidationResult,
    FoldReport,
    StratificationError,
    TrainReport,
    cross_validate,
    features,
    fit_kan,
    per_group_r2,
    stratified_folds,
    train_lbfgs,
)

__all__ = [
    "CrossValidationResult",
    "FoldReport",
    "KanConfig",
    "KanLayer",
    "KanModel",
    "StratificationError",
    "TrainReport",
    "bspline_basis",
    "bspline_basis_and_derivative",
    "cross_validate",
    "extended_grid",
    "features",
    "fit_kan",
    "per_group_r2",
    "stratified_folds",
    "train_lbfgs",
]
