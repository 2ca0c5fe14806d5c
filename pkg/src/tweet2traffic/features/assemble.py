"""Feature vector assembly with stable, named, group-tagged columns.

Column families and names follow the audit-CSV convention: sleep/wake pulses
"21_T03", period counts "EV", neutral shares "Neu_EV", weather "temp_5",
incidents "p_ds_7", time features "dow_mon", cluster scales "c_2".

Each column carries the clock hour (prediction-day frame) at which its input
data is complete, so forecast-horizon ablations can drop everything not yet
available at an earlier cutoff. Time features and incident features carry
-inf (known a priori / kept by design).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import TweetConfig
from ..errors import MissingComponent
from .incident import incident_feature_names
from .timefeat import TIME_FEATURE_NAMES
from .weather import weather_feature_names

ALWAYS = -math.inf


def tweet_feature_layout(tract_ids, cfg: TweetConfig):
    """(name, group, avail_hour) triples for the tweet feature family."""
    cols = []
    for hour in cfg.sleep_hours:
        avail = 0.0 if hour >= 12 else float(hour + 1)
        for tract in sorted(tract_ids):
            cols.append((f"{hour}_{tract}", "tweet_sleep", avail))
    for hour in cfg.wake_hours:
        for tract in sorted(tract_ids):
            cols.append((f"{hour}_{tract}", "tweet_wake", float(hour + 1)))
    for name, _start, end in cfg.periods:
        avail = 0.0 if _start >= 5 or name in ("EV", "LN") else float(end)
        cols.append((name, "tweet_period", avail))
    for name, _start, end in cfg.periods:
        avail = 0.0 if _start >= 5 or name in ("EV", "LN") else float(end)
        cols.append((f"Neu_{name}", "tweet_sentiment", avail))
    return cols


def weather_feature_layout():
    return [(name, "weather", float(int(name.rsplit("_", 1)[1]) + 1))
            for name in weather_feature_names()]


def time_feature_layout():
    return [(name, "time", ALWAYS) for name in TIME_FEATURE_NAMES]


def incident_feature_layout():
    return [(name, "incident", ALWAYS) for name in incident_feature_names()]


def cluster_feature_layout(n_levels: int):
    return [(f"c_{l}", "cluster", ALWAYS) for l in range(1, n_levels + 1)]


def assemble_features(tweet_vec: dict | None, weather_vec: dict | None,
                      time_vec: dict | None, tract_ids, cfg: TweetConfig,
                      incident_vec: dict | None = None,
                      cluster_vec: np.ndarray | None = None):
    """One day's named feature vector; segment level when incident_vec given.

    Returns (names, values). Road vectors omit incident columns entirely;
    cluster outputs are appended last when supplied.
    """
    for part, label in ((tweet_vec, "tweet"), (weather_vec, "weather"), (time_vec, "time")):
        if part is None:
            raise MissingComponent(label)
    layout = tweet_feature_layout(tract_ids, cfg) + weather_feature_layout() + time_feature_layout()
    names = [c[0] for c in layout]
    merged = {}
    merged.update(tweet_vec)
    merged.update(weather_vec)
    merged.update(time_vec)
    values = [float(merged.get(n, 0.0)) for n in names]
    if incident_vec is not None:
        inc_names = [c[0] for c in incident_feature_layout()]
        names += inc_names
        values += [float(incident_vec.get(n, 0.0)) for n in inc_names]
    if cluster_vec is not None:
        names += [f"c_{l}" for l in range(1, len(cluster_vec) + 1)]
        values += [float(v) for v in cluster_vec]
    return names, np.asarray(values)


@dataclass
class FeatureMatrix:
    names: list[str]
    groups: list[str]
    avail_hours: list[float]
    days: list
    values: np.ndarray      # (n_days, n_cols)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index_of(name)]

    def drop_groups(self, groups: set[str]) -> "FeatureMatrix":
        keep = [i for i, g in enumerate(self.groups) if g not in groups]
        return self._take(keep)

    def before_cutoff(self, cutoff_hour: float) -> "FeatureMatrix":
        """Drop tweet/weather columns whose data completes after the cutoff."""
        maskable = {"tweet_sleep", "tweet_wake", "tweet_period", "tweet_sentiment", "weather"}
        keep = [i for i, (g, a) in enumerate(zip(self.groups, self.avail_hours))
                if g not in maskable or a <= cutoff_hour]
        return self._take(keep)

    def with_columns(self, layout, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            names=self.names + [c[0] for c in layout],
            groups=self.groups + [c[1] for c in layout],
            avail_hours=self.avail_hours + [c[2] for c in layout],
            days=self.days,
            values=np.hstack([self.values, values]),
        )

    def rows_for(self, day_subset) -> np.ndarray:
        pos = {d: i for i, d in enumerate(self.days)}
        return self.values[[pos[d] for d in day_subset]]

    def _take(self, idx) -> "FeatureMatrix":
        return FeatureMatrix(
            names=[self.names[i] for i in idx],
            groups=[self.groups[i] for i in idx],
            avail_hours=[self.avail_hours[i] for i in idx],
            days=self.days,
            values=self.values[:, idx],
        )


def build_feature_matrix(days, per_day_vectors: dict, layout) -> FeatureMatrix:
    names = [c[0] for c in layout]
    rows = np.zeros((len(days), len(names)))
    for i, day in enumerate(days):
        vec = per_day_vectors[day]
        for j, name in enumerate(names):
            rows[i, j] = float(vec.get(name, 0.0))
    return FeatureMatrix(
        names=names,
        groups=[c[1] for c in layout],
        avail_hours=[c[2] for c in layout],
        days=list(days),
        values=rows,
    )
