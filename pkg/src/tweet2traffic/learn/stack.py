"""The clustered model stack: road descriptor plus per-segment heads.

The road-level descriptor is a set of one-versus-rest L1 logistic
classifiers over ordered congestion-cluster labels; its sigmoid outputs are
appended to each segment's features. Per segment, an L1 logistic classifier
predicts congestion status on all days and three Lasso regressors predict
start time, duration and planning index on congested days only. KNN and
random-forest variant heads ride on the descriptor outputs / the selected
feature columns.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..congestion import N_SLOTS
from ..config import ModelConfig
from .forest import RandomForestModel, rf_fit
from .knn import KnnModel, knn_fit
from .optimizers import LinearModel
from .selection import constant_logistic, fit_l1_logistic_cv, fit_lasso_cv

log = logging.getLogger(__name__)

REGRESSION_TARGETS = ("cst", "cd", "pti")
FALLBACK_DEFAULTS = {"cst": 36.0, "cd": 12.0, "pti": 1.5}


@dataclass
class OrderedDescriptor:
    n_clusters: int
    classifiers: list[LinearModel]          # level l predicts [label > l]
    feature_names: list[str]

    def predict_scales(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.column_stack([m.predict_proba(X) for m in self.classifiers])
        return out

    @property
    def n_levels(self) -> int:
        return len(self.classifiers)


def descriptor_targets(labels: np.ndarray, level: int) -> np.ndarray:
    return (np.asarray(labels) > level).astype(float)


def fit_ordered_descriptor(X, labels, feature_names, cfg: ModelConfig) -> OrderedDescriptor:
    """C-1 independent one-versus-rest L1 logistic fits, penalty tuned per level."""
    labels = np.asarray(labels)
    n_clusters = int(labels.max()) + 1 if len(labels) else 1
    if n_clusters < 2:
        log.warning("single congestion cluster: descriptor reduces to one constant level")
    classifiers = []
    X = np.asarray(X, dtype=float)
    for level in range(max(n_clusters - 1, 1)):
        y = descriptor_targets(labels, level)
        if y.min() == y.max():
            log.warning("descriptor level %d degenerate (all %d); constant output",
                        level, int(y.max()))
            classifiers.append(constant_logistic(float(y.mean()), feature_names, X.shape[1]))
            continue
        classifiers.append(fit_l1_logistic_cv(
            X, y, cfg.grid_multipliers, n_folds=cfg.inner_folds,
            tol=cfg.logistic_tol, cv_tol=cfg.logistic_tol * cfg.inner_cv_tol_factor,
            max_iter=cfg.logistic_max_iter, feature_names=feature_names))
    return OrderedDescriptor(n_clusters, classifiers, list(feature_names))


@dataclass
class SegmentModelSet:
    segment_id: str
    classifier: LinearModel
    regressors: dict[str, LinearModel]              # may be empty: fallback path
    fallbacks: dict[str, float]
    feature_names: list[str]
    variant: str = "linear"                          # linear | rf | knn
    knn_heads: dict[str, KnnModel] = field(default_factory=dict)
    rf_heads: dict[str, RandomForestModel] = field(default_factory=dict)
    rf_columns: dict[str, list[int]] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)


def _scale_columns(feature_names) -> list[int]:
    return [i for i, n in enumerate(feature_names) if n.startswith("c_")]


def fit_segment_models(segment_id: str, X, quadruples, feature_names,
                       cfg: ModelConfig, variant: str = "linear",
                       road_fallbacks: dict[str, float] | None = None,
                       seed: int = 0) -> SegmentModelSet:
    """Classifier on all days; regressors (and variant heads) on congested days."""
    X = np.asarray(X, dtype=float)
    cs = np.array([1.0 if q.cs else 0.0 for q in quadruples])
    flags = []

    if cs.min() == cs.max():
        flags.append("degenerate_classifier")
        classifier = constant_logistic(float(cs.mean()), feature_names, X.shape[1])
    else:
        classifier = fit_l1_logistic_cv(
            X, cs, cfg.grid_multipliers, n_folds=cfg.inner_folds,
            tol=cfg.logistic_tol, cv_tol=cfg.logistic_tol * cfg.inner_cv_tol_factor,
            max_iter=cfg.logistic_max_iter, feature_names=feature_names)

    congested = np.flatnonzero(cs > 0)
    targets = {
        "cst": np.array([float(q.cst) for q in quadruples]),
        "cd": np.array([float(q.cd) if q.cd is not None else 0.0 for q in quadruples]),
        "pti": np.array([float(q.pti) if q.pti is not None else 1.0 for q in quadruples]),
    }
    fallbacks = dict(road_fallbacks or FALLBACK_DEFAULTS)
    regressors: dict[str, LinearModel] = {}
    if congested.size == 0:
        flags.append("no_congested_days")
        log.warning("segment %s: no congested training days; median fallback in use",
                    segment_id)
    else:
        Xc = X[congested]
        for name in REGRESSION_TARGETS:
            yc = targets[name][congested]
            fallbacks[name] = float(np.median(yc))
            regressors[name] = fit_lasso_cv(
                Xc, yc, cfg.grid_multipliers, n_folds=cfg.inner_folds,
                tol=cfg.lasso_tol, cv_tol=max(cfg.lasso_tol * cfg.inner_cv_tol_factor, 1e-4),
                max_iter=cfg.lasso_max_iter, feature_names=feature_names)

    model = SegmentModelSet(segment_id, classifier, regressors, fallbacks,
                            list(feature_names), variant=variant, flags=flags)

    if variant == "knn":
        cols = _scale_columns(feature_names)
        scales = X[:, cols] if cols else X[:, :1] * 0.0
        model.knn_heads["cs"] = knn_fit(scales, cs, cfg.knn_k, "clf")
        if congested.size:
            for name in REGRESSION_TARGETS:
                model.knn_heads[name] = knn_fit(scales[congested],
                                                targets[name][congested],
                                                cfg.knn_k, "reg")
    elif variant == "rf":
        sel = [i for i, w in enumerate(classifier.weights) if abs(w) > 1e-12]
        if not sel:
            flags.append("rf_no_selected_features_cs")
            log.warning("segment %s: classifier selected no features; linear fallback",
                        segment_id)
        else:
            model.rf_columns["cs"] = sel
            model.rf_heads["cs"] = rf_fit(X[:, sel], cs, "clf",
                                          n_trees=cfg.rf_n_trees,
                                          feature_frac=cfg.rf_feature_frac, seed=seed)
        if congested.size:
            for name in REGRESSION_TARGETS:
                reg = regressors.get(name)
                sel = ([i for i, w in enumerate(reg.weights) if abs(w) > 1e-12]
                       if reg is not None else [])
                if not sel:
                    flags.append(f"rf_no_selected_features_{name}")
                    continue
                model.rf_columns[name] = sel
                model.rf_heads[name] = rf_fit(X[congested][:, sel],
                                              targets[name][congested], "reg",
                                              n_trees=cfg.rf_n_trees,
                                              feature_frac=cfg.rf_feature_frac,
                                              seed=seed + 1)
    return model


@dataclass(frozen=True)
class DayPrediction:
    cs: int
    cst: float               # slots
    cd: float | None
    pti: float | None
    p_congested: float
    raw: dict[str, float]    # regression estimates regardless of the CS decision


def _regression_estimate(model: SegmentModelSet, name: str, row: np.ndarray) -> float:
    if model.variant == "knn" and name in model.knn_heads:
        cols = _scale_columns(model.feature_names)
        q = row[cols] if cols else row[:1] * 0.0
        return float(model.knn_heads[name].predict_one(q))
    if model.variant == "rf" and name in model.rf_heads:
        sel = model.rf_columns[name]
        return float(model.rf_heads[name].predict_values(row[None, sel])[0])
    reg = model.regressors.get(name)
    if reg is None:
        return model.fallbacks[name]
    return float(reg.decision(row[None, :])[0])


def predict_day(model: SegmentModelSet, row, cs_threshold: float = 0.5) -> DayPrediction:
    """One segment-day quadruple with range clamps; raw estimates kept for scoring."""
    row = np.asarray(row, dtype=float)
    p = float(model.classifier.predict_proba(row[None, :])[0])
    if model.variant == "knn" and "cs" in model.knn_heads:
        cols = _scale_columns(model.feature_names)
        q = row[cols] if cols else row[:1] * 0.0
        cs = int(model.knn_heads["cs"].predict_one(q))
    elif model.variant == "rf" and "cs" in model.rf_heads:
        sel = model.rf_columns["cs"]
        cs = int(model.rf_heads["cs"].predict(row[None, sel])[0])
    else:
        cs = int(p >= cs_threshold)
    raw = {
        "cst": float(np.clip(_regression_estimate(model, "cst", row), 0.0, N_SLOTS)),
        "cd": float(np.clip(_regression_estimate(model, "cd", row), 0.0, N_SLOTS)),
        "pti": float(max(_regression_estimate(model, "pti", row), 0.0)),
    }
    if cs:
        return DayPrediction(1, raw["cst"], raw["cd"], raw["pti"], p, raw)
    return DayPrediction(0, 0.0, None, None, p, raw)
