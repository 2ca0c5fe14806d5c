"""Cyclic calendar encodings and the day-type one-hot features."""
from __future__ import annotations

import math
from datetime import date as date_t
from datetime import timedelta

TIME_FEATURE_NAMES = (
    "mon_sin", "mon_cos", "week_sin", "week_cos",
    "dow_mon", "dow_tue_thu", "dow_fri", "dow_wkd_holiday",
    "nxt_rest", "lst_rest",
)


def cyclic_encode(index: int, period: int) -> tuple[float, float]:
    if period <= 0:
        raise ValueError("period must be positive")
    angle = 2.0 * math.pi * index / period
    return math.sin(angle), math.cos(angle)


def _is_rest(day: date_t, holidays: set) -> bool:
    return day.weekday() >= 5 or day in holidays


def _days_to_rest(day: date_t, holidays: set, step: int) -> int:
    for delta in range(0, 370):
        if _is_rest(day + timedelta(days=step * delta), holidays):
            return delta
    return 370


def time_features(day: date_t, holidays: set,
                  weeks_per_year: int = 52, months_per_year: int = 12) -> dict[str, float]:
    mon_sin, mon_cos = cyclic_encode(day.month - 1, months_per_year)
    week_sin, week_cos = cyclic_encode(day.isocalendar().week - 1, weeks_per_year)
    out = {
        "mon_sin": mon_sin, "mon_cos": mon_cos,
        "week_sin": week_sin, "week_cos": week_cos,
        "dow_mon": 0.0, "dow_tue_thu": 0.0, "dow_fri": 0.0, "dow_wkd_holiday": 0.0,
    }
    if _is_rest(day, holidays):
        out["dow_wkd_holiday"] = 1.0
    elif day.weekday() == 0:
        out["dow_mon"] = 1.0
    elif day.weekday() <= 3:
        out["dow_tue_thu"] = 1.0
    else:
        out["dow_fri"] = 1.0
    out["nxt_rest"] = float(_days_to_rest(day, holidays, +1))
    out["lst_rest"] = float(_days_to_rest(day, holidays, -1))
    return out
