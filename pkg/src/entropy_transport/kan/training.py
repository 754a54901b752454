"""L-BFGS training and stratified cross-validation of the KAN on ``S_A(U, n_A)``."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.model_selection import StratifiedKFold

from ..curvefit import r_squared
from .lbfgs import minimize
from .network import KanConfig, KanModel


class StratificationError(ValueError):
    pass


@dataclass
class TrainReport:
    final_loss: float
    initial_loss: float
    loss_history: list = field(default_factory=list)
    evaluations: int = 0
    iterations: int = 0
    line_search_failures: int = 0


@dataclass
class FoldReport:
    fold: int
    n_train: int
    n_test: int
    test_r2: float
    train_loss: float
    per_group: list = field(default_factory=list)
    train: TrainReport | None = None


@dataclass
class CrossValidationResult:
    folds: list
    mean_r2: float
    std_r2: float

    def worst_fold(self) -> FoldReport:
        return min(self.folds, key=lambda f: f.test_r2)

    def table(self, label: str = "R2") -> str:
        lines = [f"Fold  {label}"]
        lines += [f"{f.fold + 1:>4}  {f.test_r2:.5f}" for f in self.folds]
        lines.append(f"Mean  {self.mean_r2:.5f} ± {self.std_r2:.5f}")
        return "\n".join(lines)


def features(ds) -> tuple[np.ndarray, np.ndarray]:
    """``X = (U, n_A)`` and ``y = S_A`` from a trajectory dataset."""
    return np.column_stack([ds.U, ds.n_A]), ds.S_A.copy()


def train_lbfgs(model: KanModel, X, y, config: KanConfig | None = None):
    """Fit all parameters of ``model`` to ``(X, y)``; returns ``(trained, report)``."""
    config = config or model.config
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("empty training set")

    basis = model.input_basis(X)

    def objective(theta):
        return model.with_parameters(theta).loss_and_gradient(X, y, basis)

    theta0 = model.parameters()
    initial_loss, _ = objective(theta0)
    result = minimize(
        objective,
        theta0,
        epochs=config.epochs,
        lr=config.lr,
        history=config.history,
        iterations_per_epoch=config.iterations_per_epoch,
        max_line_search=config.max_line_search,
    )
    report = TrainReport(
        final_loss=result.f,
        initial_loss=initial_loss,
        loss_history=result.loss_history,
        evaluations=result.evaluations,
        iterations=result.iterations,
        line_search_failures=result.line_search_failures,
    )
    return model.with_parameters(result.x), report


def fit_kan(X, y, config: KanConfig):
    model = KanModel.initialise(config, X)
    return train_lbfgs(model, X, y, config)


def per_group_r2(model: KanModel, X, y) -> list[tuple[float, float]]:
    """R² of ``model`` restricted to each distinct ``U`` (first column of ``X``)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    pred = model(X)
    out = []
    for U in np.unique(X[:, 0]):
        m = X[:, 0] == U
        out.append((float(U), r_squared(y[m], pred[m])))
    return out


def stratified_folds(labels, n_folds: int, seed: int):
    """Deterministic stratified ``(train_idx, test_idx)`` splits."""
    labels = np.asarray(labels)
    values, codes, counts = np.unique(labels, return_inverse=True, return_counts=True)
    small = values[counts < n_folds]
    if small.size:
        raise StratificationError(
            f"group U={small[0]:g} has {counts[counts < n_folds][0]} rows, "
            f"fewer than the {n_folds} folds needed to stratify"
        )
    splitter = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    return list(splitter.split(np.zeros(labels.size), codes))


def _run_fold(args):
    fold, X, y, train_idx, test_idx, config = args
    cfg = replace(config, seed=config.seed + fold)
    model, report = fit_kan(X[train_idx], y[train_idx], cfg)
    pred = model(X[test_idx])
    return FoldReport(
        fold=fold,
        n_train=int(train_idx.size),
        n_test=int(test_idx.size),
        test_r2=r_squared(y[test_idx], pred),
        train_loss=report.final_loss,
        per_group=per_group_r2(model, X[test_idx], y[test_idx]),
        train=report,
    )


def cross_validate(ds, config: KanConfig, n_folds: int = 5, workers: int = 1) -> CrossValidationResult:
    """Stratified-by-U k-fold cross-validation, one fresh model per fold."""
    X, y = features(ds)
    splits = stratified_folds(X[:, 0], n_folds, config.seed)
    jobs = [(k, X, y, tr, te, config) for k, (tr, te) in enumerate(splits)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            folds = list(pool.map(_run_fold, jobs))
    else:
        folds = [_run_fold(job) for job in jobs]
    r2 = np.array([f.test_r2 for f in folds])
    return CrossValidationResult(folds, float(r2.mean()), float(r2.std(ddof=1)) if r2.size > 1 else 0.0)
