"""Classification and regression metrics with undefined-as-absent semantics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..congestion import slots_to_hours

METRIC_NAMES = ("accuracy", "precision", "recall", "rmse_cst_h", "rmse_cd_h", "rmse_pti")


@dataclass(frozen=True)
class MetricSet:
    accuracy: float | None
    precision: float | None
    recall: float | None
    rmse_cst_h: float | None
    rmse_cd_h: float | None
    rmse_pti: float | None
    n_days: int
    n_congested: int

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def compute_metrics(truth_quads, pred_cs, pred_cst, pred_cd, pred_pti,
                    slot_minutes: int = 5) -> MetricSet:
    """Score one segment-split; regression errors cover truth-congested days only."""
    truth_cs = np.array([1 if q.cs else 0 for q in truth_quads])
    pred_cs = np.asarray(pred_cs, dtype=int)
    n = len(truth_cs)
    accuracy = float((truth_cs == pred_cs).mean()) if n else None
    tp = int(((truth_cs == 1) & (pred_cs == 1)).sum())
    precision = tp / int((pred_cs == 1).sum()) if (pred_cs == 1).any() else None
    recall = tp / int((truth_cs == 1).sum()) if (truth_cs == 1).any() else None

    congested = np.flatnonzero(truth_cs == 1)
    if congested.size:
        cst_err = [slots_to_hours(truth_quads[i].cst - pred_cst[i], slot_minutes)
                   for i in congested]
        cd_err = [slots_to_hours(truth_quads[i].cd - pred_cd[i], slot_minutes)
                  for i in congested]
        pti_err = [truth_quads[i].pti - pred_pti[i] for i in congested]
        rmse_cst = float(np.sqrt(np.mean(np.square(cst_err))))
        rmse_cd = float(np.sqrt(np.mean(np.square(cd_err))))
        rmse_pti = float(np.sqrt(np.mean(np.square(pti_err))))
    else:
        rmse_cst = rmse_cd = rmse_pti = None
    return MetricSet(accuracy, precision, recall, rmse_cst, rmse_cd, rmse_pti,
                     n_days=n, n_congested=int(congested.size))


def weighted_aggregate(entries) -> dict[str, float | None]:
    """Sample-count weighted mean of metric sets over (weight, MetricSet) pairs.

    Classification metrics weight by test-day counts, regression metrics by
    congested-day counts; metrics undefined everywhere stay absent.
    """
    out: dict[str, float | None] = {}
    for name in METRIC_NAMES:
        total_w, total = 0.0, 0.0
        for ms in entries:
            value = getattr(ms, name)
            if value is None:
                continue
            w = ms.n_congested if name.startswith("rmse") else ms.n_days
            if w <= 0:
                continue
            total_w += w
            total += w * value
        out[name] = total / total_w if total_w > 0 else None
    return out
