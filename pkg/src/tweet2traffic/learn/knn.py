"""Neighbor models over the learned road-level congestion scales.

Neighbors are the K training days whose descriptor outputs lie closest in
Euclidean distance; predictions use uniform weights (majority vote with ties
resolved to congested, or a plain mean).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KnnModel:
    scales: np.ndarray      # (n_train, n_levels) descriptor outputs
    targets: np.ndarray
    k: int
    task: str               # "clf" | "reg"

    def __post_init__(self):
        self.scales = np.asarray(self.scales, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        self.k = int(min(self.k, len(self.targets)))

    def _neighbors(self, query) -> np.ndarray:
        d2 = ((self.scales - np.asarray(query, dtype=float)) ** 2).sum(axis=1)
        # stable order: distance, then training index
        return np.lexsort((np.arange(len(d2)), d2))[: self.k]

    def predict_one(self, query) -> float:
        idx = self._neighbors(query)
        vals = self.targets[idx]
        if self.task == "clf":
            return 1.0 if vals.sum() * 2 >= len(vals) else 0.0
        return float(vals.mean())

    def predict(self, queries) -> np.ndarray:
        return np.array([self.predict_one(q) for q in np.atleast_2d(queries)])


def knn_fit(scales, targets, k: int, task: str) -> KnnModel:
    return KnnModel(np.atleast_2d(scales), targets, k, task)
