"""Reference predictors: day-of-week historical mean and seasonal autoregression.

HM averages the quadruples of the most recent same-weekday history. SAR fits
v_t = c + sum_p w_p v_{t-p} + sum_h W_h v_t^{d-7h} by least squares and rolls
the morning out recursively from the 05:00 cutoff, feeding predictions back
in place of unseen lags; its quadruple comes from the predicted speeds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import CongestionParams
from ..congestion import N_SLOTS, detect_congested_periods, morning_pti
from ..errors import InsufficientHistory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HmPrediction:
    cs: int
    cst: float
    cd: float
    pti: float
    flagged: str = ""


def hm_predict(history, date, window: int | None) -> HmPrediction:
    """Majority CS and congested-day means over the same-weekday window.

    `history` is a chronological list of (date, CongestionMeasurements) pairs
    strictly before `date`; `window` counts same-weekday occurrences
    (None or 0 means unbounded).
    """
    prior = [(d, q) for d, q in history if d < date]
    if not prior:
        return HmPrediction(0, 0.0, 0.0, 1.0, flagged="no_history")
    same_dow = [(d, q) for d, q in prior if d.weekday() == date.weekday()]
    flagged = ""
    if same_dow:
        pool = same_dow
    else:
        pool = prior
        flagged = "global_fallback"
    if window:
        pool = pool[-window:]
    cs_votes = sum(q.cs for _d, q in pool)
    cs = 1 if 2 * cs_votes >= len(pool) else 0    # tie predicts congested
    congested = [q for _d, q in pool if q.cs]
    if not congested:
        congested = [q for _d, q in prior if q.cs]
        if congested:
            flagged = flagged or "no_congested_in_window"
    if congested:
        cst = float(np.mean([q.cst for q in congested]))
        cd = float(np.mean([q.cd for q in congested]))
        pti = float(np.mean([q.pti for q in congested]))
    else:
        cst, cd, pti = 0.0, 0.0, 1.0
        flagged = flagged or "no_congested_history"
    return HmPrediction(cs, cst, cd, pti, flagged)


@dataclass
class SarModel:
    segment_id: str
    p_lags: int
    h_seasonal: int
    weights: np.ndarray       # [c, w_1..w_P, W_1..W_H]
    in_sample_r2: float


def _design_rows(speeds: np.ndarray, day_idx, slots, p_lags, h_seasonal, morning_offset):
    """(rows, targets) for least squares over in-day lags and weekly seasonal terms."""
    days = np.asarray([d for d in day_idx if d - 7 * h_seasonal >= 0], dtype=int)
    cols = np.asarray([morning_offset + t for t in slots
                       if morning_offset + t - p_lags >= 0], dtype=int)
    if days.size == 0 or cols.size == 0:
        return np.empty((0, 0)), np.empty(0)
    sub = speeds[days]                                   # (n_d, emit_slots)
    windows = np.lib.stride_tricks.sliding_window_view(sub, p_lags + 1, axis=1)
    block = windows[:, cols - p_lags, :]                 # (n_d, n_c, p+1)
    targets = block[:, :, -1]
    lags = block[:, :, :-1][:, :, ::-1]                  # most recent lag first
    parts = [np.ones((days.size, cols.size, 1)), lags]
    for h in range(1, h_seasonal + 1):
        parts.append(speeds[days - 7 * h][:, cols][:, :, None])
    X = np.concatenate(parts, axis=2).reshape(-1, 1 + p_lags + h_seasonal)
    y = targets.reshape(-1)
    ok = np.isfinite(X).all(axis=1) & np.isfinite(y)
    return X[ok], y[ok]


def fit_sar(segment_id: str, speeds: np.ndarray, train_day_idx, p_lags: int,
            h_seasonal: int, morning_offset: int) -> SarModel:
    """Least-squares fit on every morning slot of the training days."""
    slots = range(N_SLOTS)
    h = h_seasonal
    X = np.empty((0, 0))
    y = np.empty(0)
    while h >= 0:
        X, y = _design_rows(speeds, train_day_idx, slots, p_lags, h, morning_offset)
        if X.ndim == 2 and X.size and len(y) >= X.shape[1] + 2:
            break
        h -= 1    # early folds may lack weekly history; shrink the seasonal order
    if h < 0:
        raise InsufficientHistory(segment_id)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    pred = X @ coef
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return SarModel(segment_id, p_lags, h, coef, r2)


def sar_rollout(model: SarModel, speeds: np.ndarray, day_idx: int,
                morning_offset: int, cutoff_slot: int = 0) -> np.ndarray:
    """Predicted morning speeds, substituting predictions for unseen lags."""
    work = [float(v) for v in speeds[day_idx]]
    p = model.p_lags
    w = [float(v) for v in model.weights]
    # seasonal contribution is fixed per slot; fold it into the intercept
    seasonal_term = np.zeros(N_SLOTS)
    for h in range(1, model.h_seasonal + 1):
        seasonal_term += (w[1 + p + h - 1]
                          * speeds[day_idx - 7 * h,
                                   morning_offset:morning_offset + N_SLOTS])
    out = np.empty(N_SLOTS)
    for t in range(N_SLOTS):
        col = morning_offset + t
        if t < cutoff_slot:
            out[t] = work[col]
            continue
        v = w[0] + float(seasonal_term[t])
        for i in range(p):
            v += w[1 + i] * work[max(col - 1 - i, 0)]   # clamp under-length history
        if v < 1.0:
            v = 1.0     # speeds stay physical
        out[t] = v
        work[col] = v
    return out


def sar_quadruple(pred_speeds: np.ndarray, v_ref: float, params: CongestionParams):
    """Quadruple of the predicted series; no-congestion days keep PTI diagnostics."""
    tti = v_ref / np.maximum(pred_speeds, 1e-6)
    periods = detect_congested_periods(tti, params)
    pti = morning_pti(tti)
    if not periods:
        return 0, 0.0, 0.0, pti
    first_start = periods[0][0]
    last_end = periods[-1][1]
    return 1, float(N_SLOTS - first_start), float(last_end - first_start), pti
