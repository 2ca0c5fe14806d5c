"""Daily congestion / tweeting profile construction and cluster analysis.

Road profiles concatenate per-segment TTI curves (segment order, then slot
order) into one row per day; PCA reduces them to the components covering 90%
of variance and K-means (k-means++ init, elbow-selected K) extracts typical
morning patterns, relabeled so the label index grows with centroid severity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .errors import (
    DegenerateInput,
    DegenerateTable,
    EmptyDay,
    EmptyRoad,
    KTooLarge,
    RangeTooSmall,
)

log = logging.getLogger(__name__)


@dataclass
class RoadProfileMatrix:
    road_id: str
    dates: list
    segment_ids: list[str]
    rows: np.ndarray          # (n_days, n_segments * 72)
    dropped_days: list = field(default_factory=list)


def build_road_profiles(road_id: str, segment_ids, tti_by_segment_day: dict) -> RoadProfileMatrix:
    """Assemble one row per day from per-(segment, day) TTI series.

    `tti_by_segment_day` maps (segment_id, date) -> 72-vector. Days missing
    any segment of the road are dropped road-wide and reported.
    """
    segment_ids = list(segment_ids)
    if not segment_ids:
        raise EmptyRoad(road_id)
    dates = sorted({d for (_s, d) in tti_by_segment_day.keys()})
    kept, dropped, rows = [], [], []
    for d in dates:
        parts = []
        for s in segment_ids:
            v = tti_by_segment_day.get((s, d))
            if v is None:
                parts = None
                break
            parts.append(np.asarray(v, dtype=float))
        if parts is None:
            dropped.append(d)
            continue
        kept.append(d)
        rows.append(np.concatenate(parts))
    if not rows:
        raise EmptyRoad(f"{road_id}: no complete days")
    if dropped:
        log.info("road %s: dropped %d incomplete days", road_id, len(dropped))
    return RoadProfileMatrix(road_id, kept, segment_ids, np.vstack(rows), dropped)


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray            # (p_retained, n_features), orthonormal rows
    explained_variance_ratio: np.ndarray
    n_components: int


def pca_fit(rows, variance_target: float = 0.90) -> PcaModel:
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateInput("need at least two rows")
    if not np.all(np.isfinite(X)):
        raise DegenerateInput("non-finite entries")
    mean = X.mean(axis=0)
    centered = X - mean
    # SVD of the centered matrix factorizes the sample covariance
    _u, s, vt = np.linalg.svd(centered, full_matrices=False)
    var = s ** 2
    total = var.sum()
    if total <= 0:
        log.warning("pca_fit: zero-variance matrix, falling back to identity transform")
        return PcaModel(mean, np.zeros((0, X.shape[1])), np.zeros(0), 0)
    ratio = var / total
    cum = np.cumsum(ratio)
    p = int(np.searchsorted(cum, variance_target - 1e-12) + 1)
    return PcaModel(mean, vt[:p], ratio[:p], p)


def pca_transform(model: PcaModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    if model.n_components == 0:
        return X - model.mean
    return (X - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, reduced) -> np.ndarray:
    R = np.asarray(reduced, dtype=float)
    if model.n_components == 0:
        return R + model.mean
    return R @ model.components + model.mean


@dataclass
class KMeansModel:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    inertia_path: list[float]     # inertia after each Lloyd iteration of the winning restart


def _assign(X, centroids):
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(X.shape[0]), labels].sum())
    return labels, inertia


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = X[rng.integers(n)]
        else:
            probs = d2 / total
            centroids[j] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(rows, k: int, seed: int, n_init: int = 10, max_iter: int = 300) -> KMeansModel:
    """Best of `n_init` k-means++ restarts, Lloyd iterations to a fixpoint."""
    X = np.asarray(rows, dtype=float)
    if k > X.shape[0]:
        raise KTooLarge(f"k={k} > {X.shape[0]} rows")
    if k < 1:
        raise KTooLarge("k must be >= 1")
    best = None
    master = np.random.default_rng(seed)
    restart_seeds = master.integers(0, 2 ** 63 - 1, size=n_init)
    for rs in restart_seeds:
        rng = np.random.default_rng(int(rs))
        centroids = _kmeans_pp_init(X, k, rng)
        labels, inertia = _assign(X, centroids)
        path = [inertia]
        for _ in range(max_iter):
            new_centroids = centroids.copy()
            for j in range(k):
                members = X[labels == j]
                if members.shape[0]:
                    new_centroids[j] = members.mean(axis=0)
            new_labels, new_inertia = _assign(X, new_centroids)
            centroids = new_centroids
            path.append(new_inertia)
            if np.array_equal(new_labels, labels):
                labels = new_labels
                inertia = new_inertia
                break
            labels, inertia = new_labels, new_inertia
        if best is None or inertia < best.inertia:
            best = KMeansModel(centroids, labels, inertia, path)
    return best


def elbow_select_k(rows, k_range, seed: int, n_init: int = 10) -> tuple[int, dict[int, float]]:
    """K at the maximal discrete curvature of the inertia curve (ties: smaller K)."""
    ks = sorted(k_range)
    X = np.asarray(rows, dtype=float)
    if len(ks) < 3:
        raise RangeTooSmall("elbow needs at least 3 candidate K values")
    if ks[0] < 2 or ks[-1] > X.shape[0]:
        raise RangeTooSmall("k_range must lie within [2, n_rows]")
    inertias = {k: kmeans_fit(X, k, seed=seed, n_init=n_init).inertia for k in ks}
    best_k, best_curv = None, -np.inf
    for i in range(1, len(ks) - 1):
        curv = inertias[ks[i - 1]] - 2 * inertias[ks[i]] + inertias[ks[i + 1]]
        if curv > best_curv + 1e-12:
            best_curv, best_k = curv, ks[i]
    return best_k, inertias


@dataclass
class OrderedClusterLabels:
    labels: np.ndarray                # per-day label, 0 = lightest congestion
    centroid_mean_tti: np.ndarray     # mean reconstructed TTI per (new) label
    permutation: np.ndarray           # new_label = permutation[old_label]


def order_clusters_by_mean_tti(kmeans: KMeansModel, pca: PcaModel) -> OrderedClusterLabels:
    """Relabel clusters so mean inverse-transformed centroid TTI is nondecreasing."""
    recon = pca_inverse_transform(pca, kmeans.centroids)
    means = recon.mean(axis=1)
    order = np.argsort(means, kind="stable")     # ties keep original index order
    perm = np.empty_like(order)
    perm[order] = np.arange(order.size)
    return OrderedClusterLabels(
        labels=perm[kmeans.labels],
        centroid_mean_tti=means[order],
        permutation=perm,
    )


def build_tweeting_profiles(tweet_hours_by_day: dict, n_bins: int = 19,
                            start_hour: float = 18.0, bin_minutes: int = 30,
                            smooth_minutes: int = 120) -> dict:
    """Normalized, smoothed tweet-count histograms over the evening/night window.

    `tweet_hours_by_day` maps a profile date to hours-past-midnight floats
    (values past 24 belong to the small hours of the next day). Days with no
    tweets in the window are omitted and logged.
    """
    half_bins = smooth_minutes // (2 * bin_minutes)
    out = {}
    for day in sorted(tweet_hours_by_day):
        hours = np.asarray(tweet_hours_by_day[day], dtype=float)
        counts = np.zeros(n_bins)
        idx = np.floor((hours - start_hour) * 60.0 / bin_minutes).astype(int)
        for i in idx:
            if 0 <= i < n_bins:
                counts[i] += 1
        if counts.sum() == 0:
            log.info("tweeting profile: empty day %s omitted", day)
            continue
        smooth = np.empty(n_bins)
        for i in range(n_bins):
            lo, hi = max(0, i - half_bins), min(n_bins, i + half_bins + 1)
            smooth[i] = counts[lo:hi].mean()   # truncated window at the edges
        out[day] = smooth / smooth.sum()
    if not out:
        raise EmptyDay("no non-empty tweeting profiles")
    return out


def chi_squared_cramers_v(labels_a, labels_b, bias_corrected: bool = False):
    """Pearson chi-squared test plus Cramer's V between two labelings."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise DegenerateTable("label sequences must be equal-length vectors")
    cats_a = sorted(set(a.tolist()))
    cats_b = sorted(set(b.tolist()))
    table = np.zeros((len(cats_a), len(cats_b)))
    ia = {c: i for i, c in enumerate(cats_a)}
    ib = {c: i for i, c in enumerate(cats_b)}
    for x, y in zip(a.tolist(), b.tolist()):
        table[ia[x], ib[y]] += 1
    # empty marginals cannot arise from observed categories, but guard anyway
    keep_r = table.sum(axis=1) > 0
    keep_c = table.sum(axis=0) > 0
    if not keep_r.all() or not keep_c.all():
        log.warning("chi-squared: dropping empty categories")
        table = table[keep_r][:, keep_c]
    r, c = table.shape
    if r < 2 or c < 2:
        raise DegenerateTable("need at least 2 categories on each axis")
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = float(((table - expected) ** 2 / expected).sum())
    dof = (r - 1) * (c - 1)
    p_value = float(chi2_dist.sf(chi2, dof))
    if bias_corrected:
        phi2 = max(0.0, chi2 / n - dof / (n - 1))
        r_adj = r - (r - 1) ** 2 / (n - 1)
        c_adj = c - (c - 1) ** 2 / (n - 1)
        denom = min(r_adj - 1, c_adj - 1)
        v = float(np.sqrt(phi2 / denom)) if denom > 0 else 0.0
    else:
        v = float(np.sqrt(chi2 / (n * (min(r, c) - 1))))
    return chi2, p_value, v
