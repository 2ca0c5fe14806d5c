"""Incident impact encoding: closure type x relative location x hour window.

Each incident contributes an outer product of its location impact triple
(downstream, containing, upstream; linear distance decay with a 5 km cap)
and its hourly closure indicator over hours 0..10 of the prediction day,
routed to partial- or full-closure feature planes. Multiple incidents
combine by elementwise maximum.
"""
from __future__ import annotations

import logging
from datetime import date as date_t
from datetime import datetime, time, timedelta

import numpy as np

from ..tweetpipe.geo import haversine_km

log = logging.getLogger(__name__)

LOCATION_CODES = ("ds", "in", "us")
N_HOURS = 11


def road_orientation(segments) -> int:
    """+1 when mileposts grow along the travel direction (order_on_road), else -1."""
    segs = sorted(segments, key=lambda s: s.order_on_road)
    if len(segs) < 2:
        return 1
    return 1 if segs[-1].start_milepost >= segs[0].start_milepost else -1


def incident_location_impact(incident, segment, orientation: int,
                             d_thres_km: float = 5.0) -> tuple[float, float, float]:
    """(I_ds, I_in, I_us) for one incident relative to one segment.

    The incident interval on the milepost axis decides the relative position;
    the magnitude decays linearly with the minimum endpoint distance.
    """
    seg_lo, seg_hi = sorted((segment.start_milepost, segment.end_milepost))
    inc_lo, inc_hi = sorted((incident.start_milepost, incident.end_milepost))
    d_km = min(
        haversine_km(a[0], a[1], b[0], b[1])
        for a in (incident.start_coord, incident.end_coord)
        for b in (segment.start_coord, segment.end_coord)
    )
    decay = max(0.0, (d_thres_km - d_km) / d_thres_km)
    if inc_lo <= seg_lo and inc_hi >= seg_hi:
        return (0.0, 1.0, 0.0)
    overlap = inc_lo < seg_hi and inc_hi > seg_lo
    # which side of the segment (downstream = ahead along travel direction)
    if overlap:
        ahead = (inc_hi > seg_hi) if orientation > 0 else (inc_lo < seg_lo)
    else:
        ahead = (inc_lo >= seg_hi) if orientation > 0 else (inc_hi <= seg_lo)
    if ahead:
        return (decay, 0.0, 0.0)
    return (0.0, 0.0, decay)


def incident_time_window(incident, day: date_t, n_hours: int = N_HOURS) -> np.ndarray:
    """H_h = 1 iff the closure overlaps clock hour [h, h+1) of the prediction day."""
    out = np.zeros(n_hours)
    day_start = datetime.combine(day, time(0, 0))
    grid_end = day_start + timedelta(hours=n_hours)
    if incident.closure_start_ts >= grid_end:
        return out   # entirely after the morning window
    for h in range(n_hours):
        lo = day_start + timedelta(hours=h)
        hi = lo + timedelta(hours=1)
        if incident.closure_start_ts < hi and incident.closure_end_ts > lo:
            out[h] = 1.0
    return out


class _IncidentGeometry:
    """IncidentRecord lacks mileposts; recover them from the road's segments."""

    def __init__(self, record, segments):
        self.start_coord = record.start_coord
        self.end_coord = record.end_coord
        mps = [self._coord_to_milepost(c, segments) for c in (record.start_coord, record.end_coord)]
        self.start_milepost, self.end_milepost = min(mps), max(mps)

    @staticmethod
    def _coord_to_milepost(coord, segments) -> float:
        best_mp, best_d = 0.0, np.inf
        for seg in segments:
            for mp, pt in ((seg.start_milepost, seg.start_coord),
                           (seg.end_milepost, seg.end_coord)):
                d = haversine_km(coord[0], coord[1], pt[0], pt[1])
                if d < best_d:
                    best_d, best_mp = d, mp
        return best_mp


def incident_feature_names() -> list[str]:
    names = []
    for prefix in ("p", "f"):
        for loc in LOCATION_CODES:
            for h in range(N_HOURS):
                names.append(f"{prefix}_{loc}_{h}")
    return names


def incident_features(incidents, segment, road_segments, day: date_t,
                      d_thres_km: float = 5.0) -> dict[str, float]:
    """All p_*/f_* features of one segment-day, max-combined over incidents."""
    values = {name: 0.0 for name in incident_feature_names()}
    if not incidents:
        return values
    orientation = road_orientation(road_segments)
    for rec in incidents:
        if rec.road_id != segment.road_id:
            continue
        hours = incident_time_window(rec, day)
        if not hours.any():
            continue
        geom = _IncidentGeometry(rec, road_segments)
        try:
            triple = incident_location_impact(geom, segment, orientation, d_thres_km)
        except Exception as exc:
            log.warning("cannot orient incident %s vs %s: %s; zeros used",
                        rec.incident_id, segment.segment_id, exc)
            continue
        prefix = "p" if rec.closure_type == "PARTIAL" else "f"
        for loc, impact in zip(LOCATION_CODES, triple):
            if impact <= 0:
                continue
            for h in range(N_HOURS):
                if hours[h]:
                    key = f"{prefix}_{loc}_{h}"
                    values[key] = max(values[key], impact)
    return values


def incident_days(record) -> list[date_t]:
    """Prediction days whose 00:00-11:00 grid the closure can overlap."""
    out = []
    day = record.closure_start_ts.date()
    last = record.closure_end_ts.date()
    while day <= last:
        out.append(day)
        day = day + timedelta(days=1)
    return out


def bulk_incident_features(incidents, road_segments, days, day_filter,
                           d_thres_km: float = 5.0) -> dict[str, dict]:
    """Per (segment, day) feature dicts for one road, looping per incident.

    `day_filter(record, day)` decides whether the record is usable for that
    prediction day (the data-feed cutoff rule). Equivalent to calling
    incident_features per segment-day, but linear in the incident count.
    """
    day_set = set(days)
    out = {seg.segment_id: {d: {} for d in days} for seg in road_segments}
    if not incidents:
        return out
    orientation = road_orientation(road_segments)
    for rec in incidents:
        geom = _IncidentGeometry(rec, road_segments)
        triples = {}
        for seg in road_segments:
            try:
                triples[seg.segment_id] = incident_location_impact(
                    geom, seg, orientation, d_thres_km)
            except Exception as exc:
                log.warning("cannot orient incident %s vs %s: %s; zeros used",
                            rec.incident_id, seg.segment_id, exc)
                triples[seg.segment_id] = (0.0, 0.0, 0.0)
        prefix = "p" if rec.closure_type == "PARTIAL" else "f"
        for day in incident_days(rec):
            if day not in day_set or not day_filter(rec, day):
                continue
            hours = incident_time_window(rec, day)
            if not hours.any():
                continue
            hour_idx = np.flatnonzero(hours)
            for seg in road_segments:
                vec = out[seg.segment_id][day]
                for loc, impact in zip(LOCATION_CODES, triples[seg.segment_id]):
                    if impact <= 0:
                        continue
                    for h in hour_idx:
                        key = f"{prefix}_{loc}_{h}"
                        if impact > vec.get(key, 0.0):
                            vec[key] = impact
    return out
