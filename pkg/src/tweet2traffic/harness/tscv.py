"""Nested time-series cross-validation over chronological folds.

The day axis splits into n_outer+1 contiguous folds (remainder days join the
final fold); split k trains on folds 1..k and tests on fold k+1. Everything
leakage-sensitive is refit per split inside build_split/fit_stack; baseline
hyperparameters (HM window, SAR orders) come from inner validation on the
training span.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..congestion import N_SLOTS
from ..errors import InsufficientHistory, TooFewDays
from .baselines import fit_sar, hm_predict, sar_quadruple, sar_rollout
from .metrics import compute_metrics, weighted_aggregate
from .pipeline import PreparedData, build_split, fit_stack, stack_predictions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TsCvPlan:
    n_outer: int = 10
    n_inner: int = 4

    def folds(self, n_days: int) -> list[list[int]]:
        k = self.n_outer + 1
        if n_days < k:
            raise TooFewDays(f"{n_days} days cannot form {k} folds")
        size = n_days // k
        folds = []
        for i in range(k):
            start = i * size
            end = (i + 1) * size if i < k - 1 else n_days
            folds.append(list(range(start, end)))
        return folds

    def splits(self, n_days: int):
        folds = self.folds(n_days)
        for k in range(1, len(folds)):
            train = [i for fold in folds[:k] for i in fold]
            yield k, train, folds[k]


@dataclass
class EvaluationReport:
    per_split: dict = field(default_factory=dict)  # (model, segment, split) -> MetricSet
    aggregate: dict = field(default_factory=dict)  # (model, segment) and (model, "ALL")

    def finalize(self):
        models = sorted({m for m, _s, _k in self.per_split})
        segments = sorted({s for _m, s, _k in self.per_split})
        for m in models:
            entries_all = []
            for s in segments:
                entries = [ms for (mm, ss, _k), ms in self.per_split.items()
                           if mm == m and ss == s]
                if entries:
                    self.aggregate[(m, s)] = weighted_aggregate(entries)
                    entries_all.extend(entries)
            self.aggregate[(m, "ALL")] = weighted_aggregate(entries_all)
        return self

    def aggregate_metric(self, model: str, metric: str, segment: str = "ALL"):
        return self.aggregate.get((model, segment), {}).get(metric)


def _truth_rows(art, sid, days):
    quads, keep = [], []
    for d in days:
        q = art.quads[sid][d]
        if q is not None:
            quads.append(q)
            keep.append(d)
    return quads, keep


def _score_stack(prepared, art, stack, split_id, model_name, report):
    preds = stack_predictions(prepared, art, stack, art.test_days)
    for sid in sorted(preds):
        quads, days = _truth_rows(art, sid, art.test_days)
        if not quads:
            continue
        rows = [preds[sid][d] for d in days]
        ms = compute_metrics(
            quads,
            [p.cs for p in rows],
            [p.raw["cst"] for p in rows],
            [p.raw["cd"] for p in rows],
            [p.raw["pti"] for p in rows],
            prepared.config.congestion.slot)
        report.per_split[(model_name, sid, split_id)] = ms


def _tune_hm_window(prepared, art) -> int | None:
    """Window chosen by CS accuracy on the last quarter of the training span."""
    grid = prepared.config.harness.hm_window_grid
    train = art.train_days
    if len(train) < 8:
        return grid[0] or None
    cut = max(len(train) * 3 // 4, 1)
    fit_days, val_days = train[:cut], train[cut:]
    best, best_acc = None, -1.0
    for w in grid:
        window = w or None
        correct = total = 0
        for sid in sorted(art.quads):
            history = [(d, art.quads[sid][d]) for d in fit_days
                       if art.quads[sid][d] is not None]
            for d in val_days:
                truth = art.quads[sid][d]
                if truth is None:
                    continue
                pred = hm_predict(history, d, window)
                correct += int(pred.cs == int(truth.cs))
                total += 1
        acc = correct / total if total else 0.0
        if acc > best_acc + 1e-12:
            best_acc, best = acc, window
    return best


def _score_hm(prepared, art, split_id, report):
    window = _tune_hm_window(prepared, art)
    for sid in sorted(art.quads):
        history = [(d, art.quads[sid][d]) for d in art.train_days
                   if art.quads[sid][d] is not None]
        quads, days = _truth_rows(art, sid, art.test_days)
        if not quads:
            continue
        preds = [hm_predict(history, d, window) for d in days]
        ms = compute_metrics(quads, [p.cs for p in preds], [p.cst for p in preds],
                             [p.cd for p in preds], [p.pti for p in preds],
                             prepared.config.congestion.slot)
        report.per_split[("hm", sid, split_id)] = ms


def _tune_sar(prepared, art, sid) -> tuple[int, int]:
    """Orders chosen by rollout speed RMSE on the last quarter of the train span."""
    grid = prepared.config.harness.sar_grid
    train_idx = [prepared.day_index[d] for d in art.train_days]
    if len(train_idx) < 16 or len(grid) == 1:
        return grid[0]
    cut = max(len(train_idx) * 3 // 4, 1)
    fit_idx, val_idx = train_idx[:cut], train_idx[cut:]
    speeds = prepared.speeds[sid]
    best, best_err = grid[0], np.inf
    for p_lags, h_seasonal in grid:
        try:
            model = fit_sar(sid, speeds, fit_idx, p_lags, h_seasonal,
                            prepared.morning_offset)
        except InsufficientHistory:
            continue
        err, count = 0.0, 0
        for di in val_idx:
            if di - 7 * model.h_seasonal < 0:
                continue
            pred = sar_rollout(model, speeds, di, prepared.morning_offset)
            actual = speeds[di, prepared.morning_offset:prepared.morning_offset + N_SLOTS]
            ok = np.isfinite(actual)
            if ok.any():
                err += float(((pred[ok] - actual[ok]) ** 2).sum())
                count += int(ok.sum())
        if count and err / count < best_err:
            best_err, best = err / count, (p_lags, h_seasonal)
    return best


def _score_sar(prepared, art, split_id, report):
    params = prepared.config.congestion
    for sid in sorted(art.quads):
        quads, days = _truth_rows(art, sid, art.test_days)
        if not quads:
            continue
        p_lags, h_seasonal = _tune_sar(prepared, art, sid)
        train_idx = [prepared.day_index[d] for d in art.train_days]
        try:
            model = fit_sar(sid, prepared.speeds[sid], train_idx, p_lags,
                            h_seasonal, prepared.morning_offset)
        except InsufficientHistory:
            log.warning("SAR: insufficient history for %s split %d", sid, split_id)
            continue
        cs_list, cst_list, cd_list, pti_list = [], [], [], []
        for d in days:
            di = prepared.day_index[d]
            pred_speeds = sar_rollout(model, prepared.speeds[sid], di,
                                      prepared.morning_offset)
            cs, cst, cd, pti = sar_quadruple(pred_speeds, art.v_ref[sid], params)
            cs_list.append(cs)
            cst_list.append(cst)
            cd_list.append(cd)
            pti_list.append(pti)
        ms = compute_metrics(quads, cs_list, cst_list, cd_list, pti_list, params.slot)
        report.per_split[("sar", sid, split_id)] = ms


def run_nested_tscv(prepared: PreparedData, models=("t2t", "hm", "sar"),
                    plan: TsCvPlan | None = None, seed: int = 0,
                    variant_masks: dict | None = None) -> EvaluationReport:
    """Evaluate the requested models over every outer split.

    `models` may include t2t, t2t_rf, t2t_knn, hm, sar, and any key of
    `variant_masks` mapping a name to fit_stack keyword arguments (feature
    masks, cutoffs, no-cluster).
    """
    plan = plan or TsCvPlan(prepared.config.harness.n_outer)
    report = EvaluationReport()
    variant_masks = variant_masks or {}
    for split_id, train_idx, test_idx in plan.splits(len(prepared.days)):
        train_days = [prepared.days[i] for i in train_idx]
        test_days = [prepared.days[i] for i in test_idx]
        art = build_split(prepared, train_days, test_days, seed=seed + split_id)
        for name in models:
            if name == "hm":
                _score_hm(prepared, art, split_id, report)
            elif name == "sar":
                _score_sar(prepared, art, split_id, report)
            elif name in ("t2t", "t2t_rf", "t2t_knn"):
                variant = {"t2t": "linear", "t2t_rf": "rf", "t2t_knn": "knn"}[name]
                stack = fit_stack(prepared, art, variant=variant, seed=seed + split_id)
                _score_stack(prepared, art, stack, split_id, name, report)
            elif name in variant_masks:
                stack = fit_stack(prepared, art, seed=seed + split_id,
                                  **variant_masks[name])
                _score_stack(prepared, art, stack, split_id, name, report)
            else:
                raise ValueError(f"unknown model {name!r}")
        log.info("split %d scored (%d train days, %d test days)",
                 split_id, len(train_days), len(test_days))
    return report.finalize()
