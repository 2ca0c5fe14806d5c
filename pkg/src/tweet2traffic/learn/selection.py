"""Penalty grids and inner cross-validation for the L1 models.

The grid multiplies the data-derived critical penalty (smallest value that
zeroes every coefficient of the standardized problem) by the configured
multipliers, giving a warm-startable descending path whose floor is 1% of
critical. Inner CV scores each grid point on contiguous validation blocks.
"""
from __future__ import annotations

import warnings

import numpy as np

from .optimizers import LinearModel, fit_l1_logistic, fit_lasso, sigmoid

_EPS = 1e-12


def _standardized(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > _EPS, scale, 1.0)
    return (X - mean) / scale


def logistic_critical_lambda(X, y) -> float:
    Xs = _standardized(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    return float(np.abs(Xs.T @ (y - y.mean())).max())


def lasso_critical_alpha(X, y) -> float:
    Xs = _standardized(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    return float(2.0 * np.abs(Xs.T @ (y - y.mean())).max())


def penalty_grid(critical: float, multipliers) -> list[float]:
    critical = max(critical, _EPS)
    return sorted((m * critical for m in multipliers), reverse=True)


def contiguous_folds(n: int, k: int) -> list[np.ndarray]:
    """Chronology-preserving blocks; the remainder joins the final block."""
    k = max(1, min(k, n))
    edges = [round(i * n / k) for i in range(k + 1)]
    return [np.arange(edges[i], edges[i + 1]) for i in range(k) if edges[i + 1] > edges[i]]


def _log_loss(y, p) -> float:
    p = np.clip(p, 1e-12, 1 - 1e-12)
    return float(-(y * np.log(p) + (1 - y) * np.log(1 - p)).sum())


def _alive_columns(X) -> np.ndarray:
    return X.std(axis=0) > _EPS


def _expand(model: LinearModel, alive: np.ndarray, feature_names) -> LinearModel:
    """Re-inflate a model fit on live columns to the full column set."""
    weights = np.zeros(alive.size)
    weights[alive] = model.weights
    full = LinearModel(weights, model.bias, list(feature_names), model.l1_strength,
                       model.task, converged=model.converged, n_iter=model.n_iter,
                       objective_path=model.objective_path)
    full._std_state = model._std_state
    return full


def fit_l1_logistic_cv(X, y, multipliers, n_folds: int = 4, tol: float = 1e-6,
                       cv_tol: float = 1e-4, max_iter: int = 10000,
                       feature_names=None) -> LinearModel:
    """Per-level penalty chosen by validation log-loss over contiguous folds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    alive = _alive_columns(X)      # train-constant columns get exact zero weights
    Xa = X[:, alive]
    if Xa.shape[1] == 0:
        return constant_logistic(float(y.mean()), names, X.shape[1])
    # stopping rules scale with the sum-form objective
    tol = tol * max(1.0, float(n))
    cv_tol = cv_tol * max(1.0, float(n))
    grid = penalty_grid(logistic_critical_lambda(Xa, y), multipliers)
    folds = contiguous_folds(n, n_folds)
    scores = np.zeros(len(grid))
    if len(folds) >= 2:
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            if len(set(y[mask])) < 2:
                continue
            warm = None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                for gi, lam in enumerate(grid):
                    model = fit_l1_logistic(Xa[mask], y[mask], lam, tol=cv_tol,
                                            max_iter=200, warm_start=warm)
                    warm = model._std_state
                    scores[gi] += _log_loss(y[fold], model.predict_proba(Xa[fold]))
    best = int(np.argmin(scores))   # argmin takes the largest penalty on ties
    lam = grid[best]
    warm = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for cand in grid[:best]:
            warm = fit_l1_logistic(Xa, y, cand, tol=cv_tol, max_iter=200,
                                   warm_start=warm)._std_state
    model = fit_l1_logistic(Xa, y, lam, tol=tol, max_iter=max_iter, warm_start=warm)
    return _expand(model, alive, names)


def fit_lasso_cv(X, y, multipliers, n_folds: int = 4, tol: float = 1e-8,
                 cv_tol: float = 1e-4, max_iter: int = 10000,
                 feature_names=None) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    alive = _alive_columns(X)
    Xa = X[:, alive]
    if Xa.shape[1] == 0:
        model = LinearModel(np.zeros(X.shape[1]), float(y.mean()), names, 0.0,
                            "LEAST_SQUARES")
        model._std_state = (np.zeros(X.shape[1]), model.bias)
        return model
    scale = max(1.0, float(((y - y.mean()) ** 2).sum()))
    tol = tol * scale
    cv_tol = cv_tol * scale
    grid = penalty_grid(lasso_critical_alpha(Xa, y), multipliers)
    folds = contiguous_folds(n, n_folds)
    scores = np.zeros(len(grid))
    if len(folds) >= 2:
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            warm = None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                for gi, alpha in enumerate(grid):
                    model = fit_lasso(Xa[mask], y[mask], alpha, tol=cv_tol,
                                      max_iter=200, warm_start=warm)
                    warm = model._std_state
                    resid = y[fold] - model.decision(Xa[fold])
                    scores[gi] += float(resid @ resid)
    best = int(np.argmin(scores))
    alpha = grid[best]
    warm = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for cand in grid[:best]:
            warm = fit_lasso(Xa, y, cand, tol=cv_tol, max_iter=200,
                             warm_start=warm)._std_state
    model = fit_lasso(Xa, y, alpha, tol=tol, max_iter=max_iter, warm_start=warm)
    return _expand(model, alive, names)


def constant_logistic(rate: float, feature_names, n_features: int) -> LinearModel:
    """Degenerate-target fallback: zero weights, bias at the clipped base-rate logit."""
    p = min(max(rate, 1e-6), 1 - 1e-6)
    model = LinearModel(np.zeros(n_features), float(np.log(p / (1 - p))),
                        list(feature_names), 0.0, "LOGISTIC")
    model._std_state = (np.zeros(n_features), model.bias)
    return model
