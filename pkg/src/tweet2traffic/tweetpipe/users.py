"""Influential-user filtering, bot screening, and home-location inference.

Residents are users with enough geocoded tweets and a profile location
matching the local lexicon; their check-in coordinates are clustered with
DBSCAN and a six-rule classifier picks the home cluster, whose land-use
weighted centroid becomes the home location used to geotag night-time
timeline tweets.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path

import numpy as np

from ..config import TweetConfig
from .geo import haversine_km, pairwise_haversine_km, point_in_ring

log = logging.getLogger(__name__)

_COORD_RE = re.compile(r"(-?\d{1,3}\.\d+)[,\s]+(-?\d{1,3}\.\d+)")


def load_resident_lexicon(path=None) -> tuple[str, ...]:
    if path is None:
        text = resources.files("tweet2traffic").joinpath("data/resident_lexicon.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return tuple(line.strip().lower() for line in text.splitlines() if line.strip())


def profile_matches_resident(profile: str | None, lexicon, bbox) -> bool:
    """Substring match against the lexicon, or in-box coordinates in the text."""
    if not profile:
        return False
    lowered = profile.lower()
    if any(entry in lowered for entry in lexicon):
        return True
    m = _COORD_RE.search(lowered)
    if m:
        lat, lon = float(m.group(1)), float(m.group(2))
        minlat, minlon, maxlat, maxlon = bbox
        return minlat <= lat <= maxlat and minlon <= lon <= maxlon
    return False


@dataclass
class UserProfile:
    user_id: str
    geocoded_count: int
    is_resident: bool
    location_range_m: float
    bot_score: float | None = None
    home: tuple[float, float] | None = None


def filter_influential_users(tweets, cfg: TweetConfig, lexicon=None) -> dict[str, UserProfile]:
    """Users with >= 5 geocoded tweets whose profile matches the resident lexicon."""
    if lexicon is None:
        lexicon = load_resident_lexicon()
    coords_by_user: dict[str, list] = {}
    profile_by_user: dict[str, str | None] = {}
    for t in tweets:
        if t.kind == "GEOCODED" and t.coord is not None:
            coords_by_user.setdefault(t.user_id, []).append(t.coord)
        if t.user_profile_location and t.user_id not in profile_by_user:
            profile_by_user[t.user_id] = t.user_profile_location
    out = {}
    for user_id in sorted(coords_by_user):
        coords = np.asarray(coords_by_user[user_id], dtype=float)
        count = len(coords)
        if count < cfg.influential_min_geocoded:
            continue
        resident = profile_matches_resident(profile_by_user.get(user_id), lexicon, cfg.bbox)
        # bbox-diagonal location range; identical to max pairwise at the 10 m scale
        rng_km = float(haversine_km(coords[:, 0].min(), coords[:, 1].min(),
                                    coords[:, 0].max(), coords[:, 1].max()))
        out[user_id] = UserProfile(user_id, count, resident, rng_km * 1000.0)
    return out


class NullBotProvider:
    """No external scores: every location-suspicious account is excluded."""

    def score(self, user_id: str) -> float | None:
        return None


class MappingBotProvider:
    def __init__(self, scores: dict[str, float]):
        self.scores = dict(scores)

    def score(self, user_id: str) -> float | None:
        return self.scores.get(user_id)


def detect_bots(users: dict[str, UserProfile], cfg: TweetConfig, provider=None) -> set[str]:
    """Exclusion set: location range under 10 m and (when scored) score > 2.0."""
    if provider is None:
        provider = NullBotProvider()
    excluded = set()
    for user_id in sorted(users):
        profile = users[user_id]
        if profile.location_range_m >= cfg.bot_location_range_m:
            continue
        try:
            score = provider.score(user_id)
        except Exception as exc:   # provider trouble must not drop the user
            log.warning("bot provider failed for %s: %s", user_id, exc)
            continue
        profile.bot_score = score
        if score is None or score > cfg.bot_score_threshold:
            excluded.add(user_id)
    return excluded


def dbscan_cluster(coords, eps_km: float = 0.3, min_pts: int = 1) -> np.ndarray:
    """Plain DBSCAN over haversine distances; -1 marks noise (impossible at min_pts=1)."""
    pts = np.asarray(coords, dtype=float)
    n = len(pts)
    if n == 0:
        return np.empty(0, dtype=int)
    dist = pairwise_haversine_km(pts)
    if min_pts == 1:
        # every point is core, so clusters are the connected components of the
        # eps-neighborhood graph; same labels, ordered by first appearance
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        adj = csr_matrix(dist <= eps_km)
        _n, comp = connected_components(adj, directed=False)
        labels = np.empty(n, dtype=int)
        remap: dict[int, int] = {}
        for i, c in enumerate(comp):
            if c not in remap:
                remap[c] = len(remap)
            labels[i] = remap[c]
        return labels
    neighbors = [np.flatnonzero(dist[i] <= eps_km) for i in range(n)]
    labels = np.full(n, -2, dtype=int)   # -2 unvisited, -1 noise
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        if len(neighbors[i]) < min_pts:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        queue = list(neighbors[i])
        qi = 0
        while qi < len(queue):
            j = queue[qi]
            qi += 1
            if labels[j] == -1:
                labels[j] = cluster
            if labels[j] != -2:
                continue
            labels[j] = cluster
            if len(neighbors[j]) >= min_pts:
                queue.extend(neighbors[j])
    return labels


@dataclass
class CheckinCluster:
    user_id: str
    coords: np.ndarray
    land_use_mix: dict[str, float]
    checkin_rank: int
    midnight_activity: bool
    home_tweet: bool
    last_destination: bool
    label: str = "UNLABELED"

    @property
    def industry_amenity_share(self) -> float:
        return self.land_use_mix.get("industry", 0.0) + self.land_use_mix.get("amenity", 0.0)


def landuse_of_point(lat: float, lon: float, zones) -> str | None:
    for zone in zones:
        if point_in_ring(lat, lon, zone.ring):
            return zone.land_use
    return None


def landuse_of_points(coords, zones) -> list[str | None]:
    """Batch land-use join; first matching zone wins, like the scalar form."""
    pts = np.asarray(coords, dtype=float)
    out: list[str | None] = [None] * len(pts)
    unresolved = np.arange(len(pts))
    from .geo import points_in_ring

    for zone in zones:
        if unresolved.size == 0:
            break
        hit = points_in_ring(pts[unresolved], zone.ring)
        for idx in unresolved[hit]:
            out[idx] = zone.land_use
        unresolved = unresolved[~hit]
    return out


def build_checkin_clusters(user_id: str, geocoded_tweets, zones, cfg: TweetConfig,
                           home_keywords=None) -> list[CheckinCluster]:
    """Cluster one user's check-ins and compute the six home-rule features."""
    if home_keywords is None:
        home_keywords = cfg.home_keywords
    tweets = sorted(geocoded_tweets, key=lambda t: (t.timestamp, t.tweet_id))
    if not tweets:
        return []
    coords = np.asarray([t.coord for t in tweets], dtype=float)
    labels = dbscan_cluster(coords, cfg.dbscan_eps_km, cfg.dbscan_min_pts)

    # last destination: the cluster of the final tweet of each calendar day
    last_of_day = {}
    for t, lab in zip(tweets, labels):
        last_of_day[t.timestamp.date()] = lab
    last_dest_clusters = set(last_of_day.values())

    landuses = landuse_of_points(coords, zones)
    clusters = []
    sizes = []
    for lab in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == lab)
        members = [tweets[i] for i in idx]
        mix: dict[str, float] = {}
        for i in idx:
            lu = landuses[i]
            if lu is not None:
                mix[lu] = mix.get(lu, 0.0) + 1.0
        total = sum(mix.values())
        if total > 0:
            mix = {k: v / total for k, v in mix.items()}
        midnight = any(0 <= t.timestamp.hour < 6 for t in members)
        home_tw = any(any(kw in t.text.lower() for kw in home_keywords) for t in members)
        clusters.append(CheckinCluster(
            user_id=user_id, coords=coords[idx], land_use_mix=mix,
            checkin_rank=0, midnight_activity=midnight, home_tweet=home_tw,
            last_destination=lab in last_dest_clusters))
        sizes.append(len(idx))
    # rank 1 = most check-ins; ties resolved by cluster discovery order
    order = sorted(range(len(clusters)), key=lambda i: (-sizes[i], i))
    for rank, i in enumerate(order, start=1):
        clusters[i].checkin_rank = rank
    return clusters


def classify_home_cluster(clusters: list[CheckinCluster]) -> list[CheckinCluster]:
    """Apply the six labeling rules in sequence; at most one HOME survives."""
    for c in clusters:
        c.label = "NON_HOME"                                           # rule 1
    ordered = sorted(clusters, key=lambda c: c.checkin_rank)
    for c in ordered:
        if (c.checkin_rank == 1 and c.midnight_activity
                and c.industry_amenity_share < 0.5):                   # rule 2
            c.label = "CANDIDATE"
        if (c.checkin_rank <= 3 and c.midnight_activity
                and c.industry_amenity_share < 0.5 and c.home_tweet):  # rule 3
            c.label = "CANDIDATE"
        if not c.last_destination or c.industry_amenity_share > 0.5:   # rule 4
            c.label = "NON_HOME"
    for c in ordered:                                                  # rule 5
        others_candidate = any(o is not c and o.label == "CANDIDATE" for o in clusters)
        if c.label == "CANDIDATE" and not c.home_tweet and others_candidate:
            c.label = "NON_HOME"
    candidates = [c for c in ordered if c.label == "CANDIDATE"]
    if candidates:                                                     # rule 6
        best = min(candidates, key=lambda c: c.checkin_rank)
        for c in candidates:
            c.label = "NON_HOME"
        best.label = "HOME"
    return clusters


def weighted_home_location(cluster: CheckinCluster, zones, cfg: TweetConfig) -> tuple[float, float]:
    """Land-use weighted centroid; zero total weight falls back to the plain mean."""
    weights_map = dict(cfg.landuse_weights)
    pts = cluster.coords
    landuses = landuse_of_points(pts, zones)
    w = np.array([weights_map.get(lu, 0.0) if lu is not None else 0.0
                  for lu in landuses])
    if w.sum() <= 0:
        w = np.ones(len(pts))
    w = w / w.sum()
    lat, lon = float(w @ pts[:, 0]), float(w @ pts[:, 1])
    return (lat, lon)


def infer_home(user_id: str, geocoded_tweets, zones, cfg: TweetConfig) -> tuple[float, float] | None:
    clusters = build_checkin_clusters(user_id, geocoded_tweets, zones, cfg)
    if not clusters:
        return None
    classify_home_cluster(clusters)
    home = [c for c in clusters if c.label == "HOME"]
    if not home:
        return None
    return weighted_home_location(home[0], zones, cfg)


def in_night_window(ts: datetime, window: tuple[int, int]) -> bool:
    start, end = window
    h = ts.hour + ts.minute / 60.0
    if start <= end:
        return start <= h < end
    return h >= start or h < end


def geotag_timeline(tweets, homes: dict[str, tuple[float, float]],
                    cfg: TweetConfig) -> list:
    """Fill missing coordinates of night-window timeline tweets with user homes."""
    from dataclasses import replace

    out = []
    for t in tweets:
        if (t.coord is None and t.user_id in homes
                and in_night_window(t.timestamp, cfg.night_window)):
            out.append(replace(t, coord=homes[t.user_id]))
        else:
            out.append(t)
    return out
