"""End-to-end orchestration: dataset views, per-split artifacts, predictions.

PreparedData caches everything split-independent (speed arrays, tract joins,
sentiment labels, per-day tweet buckets, incident features). build_split
refits every leakage-sensitive artifact (reference speeds, user set and
homes, scalers, clustering, descriptors, segment models) from the training
span only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date as date_t
from datetime import datetime, time, timedelta

import numpy as np

from ..config import PipelineConfig
from ..congestion import (
    N_SLOTS,
    CongestionMeasurements,
    TtiSeries,
    congestion_measurements,
    fill_speed_gaps,
    percentile,
)
from ..clustering import (
    build_road_profiles,
    elbow_select_k,
    kmeans_fit,
    order_clusters_by_mean_tti,
    pca_fit,
    pca_transform,
)
from ..errors import TooFewDays
from ..features.assemble import (
    FeatureMatrix,
    build_feature_matrix,
    cluster_feature_layout,
    incident_feature_layout,
    time_feature_layout,
    tweet_feature_layout,
    weather_feature_layout,
)
from ..features.incident import bulk_incident_features
from ..features.timefeat import time_features
from ..features.weather import WeatherScaler, weather_features
from ..ingest.loaders import DatasetBundle
from ..learn.stack import (
    OrderedDescriptor,
    SegmentModelSet,
    fit_ordered_descriptor,
    fit_segment_models,
    predict_day,
)
from ..tweetpipe.encode import encode_event_indicators, encode_sleep_wake
from ..tweetpipe.geocode import MilepostGeocoder, TractGeocoder
from ..tweetpipe.incidents import assemble_incident_records, parse_incident_tweet
from ..tweetpipe.sentiment import (
    LexiconSentimentProvider,
    PrecomputedSentimentProvider,
    sentiment_label,
)
from ..tweetpipe.textclean import clean_text, load_slang, load_wordlist
from ..tweetpipe.users import (
    detect_bots,
    filter_influential_users,
    geotag_timeline,
    infer_home,
    load_resident_lexicon,
)

log = logging.getLogger(__name__)


@dataclass
class PreparedData:
    bundle: DatasetBundle
    config: PipelineConfig
    days: list[date_t]
    day_index: dict[date_t, int]
    segments: list
    segs_by_road: dict[str, list]
    tract_ids: list[str]
    holidays: set
    speeds: dict[str, np.ndarray]          # (n_days, emit_slots) NaN when absent
    morning_offset: int
    emit_slots: int
    incidents: list                         # RCRS rows merged with tweet-parsed records
    incident_vectors: dict                  # segment -> day -> feature dict
    event_counts: dict
    event_neu: dict
    sleep_buckets: dict                     # day -> user -> [tweets in the night window]
    tweet_tracts: dict[str, str | None]     # geocoded tweet id -> tract
    geocoder: TractGeocoder
    user_geo: dict[str, list]
    road_layout: list = field(default_factory=list)

    @property
    def roads(self) -> list[str]:
        return sorted(self.segs_by_road)


def _in_bbox(coord, bbox) -> bool:
    return bbox[0] <= coord[0] <= bbox[2] and bbox[1] <= coord[1] <= bbox[3]


def prepare_data(bundle: DatasetBundle, config: PipelineConfig,
                 sentiment_provider=None, slang=None, wordlist=None) -> PreparedData:
    cfg = config
    segments = sorted(bundle.segments, key=lambda s: (s.road_id, s.order_on_road))
    segs_by_road: dict[str, list] = {}
    for s in segments:
        segs_by_road.setdefault(s.road_id, []).append(s)

    speed_days = sorted({r.timestamp.date() for r in bundle.speed})
    days = speed_days
    if not days:
        raise TooFewDays("no speed data")
    day_index = {d: i for i, d in enumerate(days)}

    # dense per-segment speed arrays over the emitted slot range
    hours = sorted({r.timestamp.hour for r in bundle.speed})
    emit_start = hours[0]
    emit_slots = (11 - emit_start) * 12
    morning_offset = (5 - emit_start) * 12
    speeds = {s.segment_id: np.full((len(days), emit_slots), np.nan) for s in segments}
    for rec in bundle.speed:
        di = day_index.get(rec.timestamp.date())
        if di is None:
            continue
        slot = (rec.timestamp.hour - emit_start) * 12 + rec.timestamp.minute // 5
        if 0 <= slot < emit_slots:
            speeds[rec.segment_id][di, slot] = rec.observed_speed

    holidays = {c.date for c in bundle.calendar if c.is_holiday}
    geocoder = TractGeocoder(bundle.tracts)
    tract_ids = [t.tract_id for t in geocoder.tracts]

    # tract join for every geocoded in-box tweet, once
    geo_tweets = [t for t in bundle.tweets
                  if t.coord is not None and _in_bbox(t.coord, cfg.tweets.bbox)]
    located = geocoder.locate_many([t.coord for t in geo_tweets]) if geo_tweets else []
    tweet_tracts = {t.tweet_id: tr for t, tr in zip(geo_tweets, located)}

    # sentiment labels for event indicators, once (cleaner + provider)
    if sentiment_provider is None:
        if cfg.sentiment_scores_path:
            sentiment_provider = PrecomputedSentimentProvider(cfg.sentiment_scores_path)
        else:
            sentiment_provider = LexiconSentimentProvider()
    slang = slang if slang is not None else load_slang(cfg.slang_path)
    wordlist = wordlist if wordlist is not None else load_wordlist(cfg.wordlist_path)
    labels = {}
    for t in geo_tweets:
        normalized = clean_text(t.text, slang=slang, wordlist=wordlist)
        _p, lab = sentiment_label(t.tweet_id, normalized, sentiment_provider,
                                  cfg.tweets.sentiment_pos, cfg.tweets.sentiment_neg)
        labels[t.tweet_id] = lab

    # day-window event indicators are split-independent
    window_days = days
    geo_by_window: dict[date_t, list] = {d: [] for d in window_days}
    for t in geo_tweets:
        anchor = t.timestamp.date() + timedelta(days=1) if t.timestamp.hour >= 5 \
            else t.timestamp.date()
        if anchor in geo_by_window:
            geo_by_window[anchor].append(t)
    event_counts, event_neu = {}, {}
    for d in window_days:
        counts, neu = encode_event_indicators(d, geo_by_window[d], labels, cfg.tweets)
        event_counts[d] = counts
        event_neu[d] = neu

    # night-window tweet buckets for sleep/wake encoding (any kind, any user)
    sleep_buckets: dict[date_t, dict[str, list]] = {d: {} for d in window_days}
    for t in bundle.tweets:
        if t.kind not in cfg.tweets.timeline_kinds_for_sleep:
            continue
        h = t.timestamp.hour
        anchor = t.timestamp.date() + timedelta(days=1) if h >= 12 else t.timestamp.date()
        if anchor in sleep_buckets and (h >= 21 or h < 5):
            sleep_buckets[anchor].setdefault(t.user_id, []).append(t)

    user_geo: dict[str, list] = {}
    for t in bundle.tweets:
        if t.kind == "GEOCODED" and t.coord is not None:
            user_geo.setdefault(t.user_id, []).append(t)

    # merge RCRS incidents with records parsed from agency tweets
    incidents = list(bundle.incidents)
    if cfg.tweets.agency_user_ids:
        parsed = []
        for t in bundle.tweets:
            if t.user_id in cfg.tweets.agency_user_ids:
                p = parse_incident_tweet(t.text, t.timestamp)
                if p is not None:
                    parsed.append(p)
        mp_geocoder = MilepostGeocoder(segments)
        incidents += assemble_incident_records(parsed, mp_geocoder)

    road_layout = (tweet_feature_layout(tract_ids, cfg.tweets)
                   + weather_feature_layout() + time_feature_layout())
    incident_vectors = _incident_vectors(cfg, segs_by_road, incidents, days)

    return PreparedData(
        bundle=bundle, config=cfg, days=days, day_index=day_index,
        segments=segments, segs_by_road=segs_by_road, tract_ids=tract_ids,
        holidays=holidays, speeds=speeds, morning_offset=morning_offset,
        emit_slots=emit_slots, incidents=incidents,
        incident_vectors=incident_vectors,
        event_counts=event_counts, event_neu=event_neu,
        sleep_buckets=sleep_buckets, tweet_tracts=tweet_tracts,
        geocoder=geocoder, user_geo=user_geo,
        road_layout=road_layout,
    )


@dataclass
class SplitArtifacts:
    train_days: list[date_t]
    test_days: list[date_t]
    v_ref: dict[str, float]
    quads: dict[str, dict[date_t, CongestionMeasurements | None]]
    tti: dict[tuple[str, date_t], np.ndarray]
    road_matrix: FeatureMatrix
    incident_vectors: dict[str, dict[date_t, dict]]
    cluster_labels: dict[str, tuple[list[date_t], np.ndarray, int]]
    homes: dict[str, tuple[float, float]]


def morning_speeds(prepared: PreparedData, seg_id: str, day: date_t) -> np.ndarray:
    di = prepared.day_index[day]
    off = prepared.morning_offset
    return prepared.speeds[seg_id][di, off:off + N_SLOTS]


def _split_quadruples(prepared: PreparedData, train_days, all_days):
    cfg = prepared.config
    train_idx = [prepared.day_index[d] for d in train_days]
    v_ref, quads, tti = {}, {}, {}
    for seg in prepared.segments:
        arr = prepared.speeds[seg.segment_id]
        train_vals = arr[train_idx].ravel()
        train_vals = train_vals[np.isfinite(train_vals)]
        ref = percentile(train_vals, cfg.ref_quantile)
        v_ref[seg.segment_id] = ref
        quads[seg.segment_id] = {}
        for d in all_days:
            raw = morning_speeds(prepared, seg.segment_id, d)
            try:
                filled = fill_speed_gaps(raw, cfg.max_ffill_slots)
            except Exception:
                quads[seg.segment_id][d] = None
                continue
            series = TtiSeries(seg.segment_id, d, ref / filled)
            tti[(seg.segment_id, d)] = series.values
            quads[seg.segment_id][d] = congestion_measurements(
                series, cfg.congestion, cfg.pti_quantile)
    return v_ref, quads, tti


def _split_tweet_features(prepared: PreparedData, train_days, all_days):
    """Influential residents, homes and the per-day sleep/wake histograms."""
    cfg = prepared.config.tweets
    train_set = set(train_days)
    train_tweets = [t for u in sorted(prepared.user_geo)
                    for t in prepared.user_geo[u]
                    if t.timestamp.date() in train_set
                    or (t.timestamp.date() + timedelta(days=1)) in train_set]
    users = filter_influential_users(train_tweets, cfg,
                                     lexicon=load_resident_lexicon(
                                         prepared.config.resident_lexicon_path))
    bots = detect_bots(users, cfg)
    residents = [u for u in sorted(users)
                 if users[u].is_resident and u not in bots]
    homes = {}
    for u in residents:
        geo = [t for t in prepared.user_geo.get(u, [])
               if t.timestamp.date() in train_set]
        home = infer_home(u, geo, prepared.bundle.zones, cfg)
        if home is not None:
            homes[u] = home
    home_tracts = {u: prepared.geocoder.locate(*homes[u]) for u in sorted(homes)}
    coord_cache: dict[tuple[float, float], str | None] = {
        homes[u]: home_tracts[u] for u in homes}

    def tract_of(lat, lon):
        key = (lat, lon)
        if key not in coord_cache:
            coord_cache[key] = prepared.geocoder.locate(lat, lon)
        return coord_cache[key]

    per_day = {}
    for d in all_days:
        bucket = prepared.sleep_buckets.get(d, {})
        tweets_by_user = {}
        for u in homes:
            tweets = bucket.get(u)
            if not tweets:
                continue
            tweets_by_user[u] = geotag_timeline(tweets, homes, cfg)
        sleep, wake = encode_sleep_wake(d, tweets_by_user, tract_of, cfg)
        vec = {}
        for (hour, tract), v in sleep.items():
            vec[f"{hour}_{tract}"] = v
        for (hour, tract), v in wake.items():
            vec[f"{hour}_{tract}"] = v
        vec.update(prepared.event_counts[d])
        vec.update({f"Neu_{k}": v for k, v in prepared.event_neu[d].items()})
        per_day[d] = vec
    return per_day, homes


def _incident_vectors(prepared_config, segs_by_road, incidents, days):
    """Per (segment, day) incident feature dicts under the configured mode."""
    cfg = prepared_config
    cutoff = cfg.harness.cutoff_hour

    def usable(rec, day):
        if cfg.harness.assume_all_known:
            return True
        return rec.closure_start_ts < datetime.combine(day, time(cutoff, 0))

    by_road: dict[str, list] = {}
    for rec in incidents:
        by_road.setdefault(rec.road_id, []).append(rec)
    out: dict[str, dict] = {}
    for road_id, segs in sorted(segs_by_road.items()):
        out.update(bulk_incident_features(by_road.get(road_id, []), segs, days,
                                          usable, cfg.features.d_thres_km))
    return out


def _split_clusters(prepared: PreparedData, tti, train_days, seed: int):
    cfg = prepared.config.clustering
    out = {}
    for road_id in prepared.roads:
        segs = prepared.segs_by_road[road_id]
        seg_ids = [s.segment_id for s in segs]
        tti_map = {}
        for d in train_days:
            for sid in seg_ids:
                v = tti.get((sid, d))
                if v is not None:
                    tti_map[(sid, d)] = v
        profile = build_road_profiles(road_id, seg_ids, tti_map)
        pca = pca_fit(profile.rows, cfg.pca_variance_target)
        reduced = pca_transform(pca, profile.rows)
        k_max = min(cfg.k_max, max(2, len(profile.dates) - 1))
        k_range = list(range(cfg.k_min, k_max + 1))
        if len(k_range) >= 3:
            k, _inertias = elbow_select_k(reduced, k_range, seed=seed,
                                          n_init=cfg.kmeans_n_init)
        else:
            k = min(2, len(profile.dates))
        km = kmeans_fit(reduced, k, seed=seed, n_init=cfg.kmeans_n_init,
                        max_iter=cfg.kmeans_max_iter)
        ordered = order_clusters_by_mean_tti(km, pca)
        out[road_id] = (profile.dates, ordered.labels, k)
    return out


def build_split(prepared: PreparedData, train_days, test_days, seed: int) -> SplitArtifacts:
    cfg = prepared.config
    all_days = list(train_days) + list(test_days)
    v_ref, quads, tti = _split_quadruples(prepared, train_days, all_days)
    tweet_vecs, homes = _split_tweet_features(prepared, train_days, all_days)
    scaler = WeatherScaler().fit(prepared.bundle.weather, list(train_days))
    weather_vecs = {d: weather_features(prepared.bundle.weather, d, scaler)
                    for d in all_days}
    time_vecs = {d: time_features(d, prepared.holidays,
                                  cfg.features.weeks_per_year, cfg.features.months_per_year)
                 for d in all_days}
    per_day = {d: {**tweet_vecs[d], **weather_vecs[d], **time_vecs[d]} for d in all_days}
    road_matrix = build_feature_matrix(all_days, per_day, prepared.road_layout)
    cluster_labels = _split_clusters(prepared, tti, list(train_days), seed)
    return SplitArtifacts(list(train_days), list(test_days), v_ref, quads, tti,
                          road_matrix, prepared.incident_vectors, cluster_labels, homes)


@dataclass
class FittedStack:
    descriptors: dict[str, OrderedDescriptor | None]
    segment_models: dict[str, SegmentModelSet]
    feature_names: dict[str, list[str]]
    scales: dict[str, np.ndarray]           # road -> (n_all_days, n_levels)


def segment_design(prepared: PreparedData, art: SplitArtifacts,
                   road_matrix: FeatureMatrix, scales: dict[str, np.ndarray],
                   use_incidents: bool = True):
    """Per-segment design matrices over all split days: road + incident + scales."""
    all_days = road_matrix.days
    day_pos = {d: i for i, d in enumerate(all_days)}
    inc_names = [c[0] for c in incident_feature_layout()]
    out = {}
    for road_id in prepared.roads:
        road_scales = scales[road_id]
        n_levels = road_scales.shape[1]
        for seg in prepared.segs_by_road[road_id]:
            sid = seg.segment_id
            names = list(road_matrix.names)
            blocks = [road_matrix.values]
            if use_incidents:
                inc_rows = np.array([[art.incident_vectors[sid][d].get(n, 0.0)
                                      for n in inc_names] for d in all_days])
                names += inc_names
                blocks.append(inc_rows)
            if n_levels:
                names += [c[0] for c in cluster_feature_layout(n_levels)]
                blocks.append(road_scales)
            out[sid] = (names, np.hstack(blocks), day_pos)
    return out


def fit_stack(prepared: PreparedData, art: SplitArtifacts, variant: str = "linear",
              mask: str | None = None, cutoff: float | None = None,
              use_cluster: bool = True, seed: int = 0) -> FittedStack:
    """Fit descriptor + segment models on the training span of one split.

    `mask` drops a feature family (tweet/incident/weather); `cutoff` applies
    a forecast-horizon restriction; `use_cluster=False` removes the road
    descriptor entirely.
    """
    cfg = prepared.config
    road_matrix = art.road_matrix
    if mask == "tweet":
        road_matrix = road_matrix.drop_groups(
            {"tweet_sleep", "tweet_wake", "tweet_period", "tweet_sentiment"})
    elif mask == "weather":
        road_matrix = road_matrix.drop_groups({"weather"})
    if cutoff is not None:
        road_matrix = road_matrix.before_cutoff(cutoff)

    all_days = road_matrix.days
    day_pos = {d: i for i, d in enumerate(all_days)}

    descriptors: dict[str, OrderedDescriptor | None] = {}
    scales: dict[str, np.ndarray] = {}
    for road_id in prepared.roads:
        if not use_cluster:
            descriptors[road_id] = None
            scales[road_id] = np.zeros((len(all_days), 0))
            continue
        dates, labels, _k = art.cluster_labels[road_id]
        pos = [day_pos[d] for d in dates if d in day_pos]
        keep = [i for i, d in enumerate(dates) if d in day_pos]
        X = road_matrix.values[pos]
        desc = fit_ordered_descriptor(X, labels[keep], road_matrix.names, cfg.model)
        descriptors[road_id] = desc
        scales[road_id] = desc.predict_scales(road_matrix.values)

    segment_models: dict[str, SegmentModelSet] = {}
    feature_names: dict[str, list[str]] = {}
    designs = segment_design(prepared, art, road_matrix, scales,
                             use_incidents=mask != "incident")
    for sid in sorted(designs):
        names, X_all, pos = designs[sid]
        train_rows, train_quads = [], []
        for d in art.train_days:
            q = art.quads[sid][d]
            if q is None:
                continue
            train_rows.append(X_all[pos[d]])
            train_quads.append(q)
        model = fit_segment_models(sid, np.asarray(train_rows), train_quads,
                                   names, cfg.model, variant=variant, seed=seed)
        segment_models[sid] = model
        feature_names[sid] = names
        model._X_all = X_all
        model._day_pos = pos
    return FittedStack(descriptors, segment_models, feature_names, scales)


def stack_predictions(prepared: PreparedData, art: SplitArtifacts, stack: FittedStack,
                      days) -> dict[str, dict[date_t, object]]:
    cfg = prepared.config
    out: dict[str, dict] = {}
    for sid, model in stack.segment_models.items():
        out[sid] = {}
        for d in days:
            row = model._X_all[model._day_pos[d]]
            out[sid][d] = predict_day(model, row, cfg.model.cs_threshold)
    return out
