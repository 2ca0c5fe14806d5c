"""CSV / GeoJSON loaders with schema validation and canonical writers.

Every loader validates the header, parses row by row with row-indexed
diagnostics, and returns records sorted by timestamp where one exists.
Writers emit the canonical form, so write(load(x)) is a normalizing
round trip.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date as date_t
from datetime import datetime
from pathlib import Path

from ..errors import MissingFile, ParseError, SchemaMismatch
from .types import (
    LAND_USE_CLASSES,
    CalendarInfo,
    IncidentRecord,
    SegmentDescriptor,
    SpeedRecord,
    TractPolygon,
    Tweet,
    WeatherRecord,
    ZonePolygon,
)

SCHEMAS = {
    "speed": ["segment_id", "timestamp", "observed_speed"],
    "incidents": ["incident_id", "source", "road_id", "closure_start", "closure_end",
                  "start_lat", "start_lon", "end_lat", "end_lon", "closure_type", "category"],
    "weather": ["timestamp", "temp", "humidity", "wind", "pressure", "visibility",
                "precip", "pavement_wet", "wx_severity"],
    "tweets": ["tweet_id", "user_id", "timestamp", "kind", "lat", "lon",
               "profile_location", "text"],
    "segments": ["segment_id", "road_id", "order_on_road", "start_mp", "end_mp",
                 "start_lat", "start_lon", "end_lat", "end_lon"],
    "calendar": ["date", "is_holiday"],
}

FILE_NAMES = {
    "speed": "speed.csv",
    "incidents": "incidents.csv",
    "weather": "weather.csv",
    "tweets": "tweets.csv",
    "segments": "segments.csv",
    "calendar": "calendar.csv",
    "tracts": "tracts.geojson",
    "zones": "zones.geojson",
}


def _parse_ts(value: str, row: int) -> datetime:
    try:
        return datetime.fromisoformat(value)
    except ValueError as exc:
        raise ParseError(row, f"bad timestamp {value!r}: {exc}") from None


def _parse_float(value: str, row: int, name: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(row, f"bad {name} {value!r}") from None


def _open_rows(path, kind):
    p = Path(path)
    if not p.exists():
        raise MissingFile(str(p))
    fh = p.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise SchemaMismatch(SCHEMAS[kind][0], "empty file") from None
    want = SCHEMAS[kind]
    if header != want:
        fh.close()
        missing = [c for c in want if c not in header]
        raise SchemaMismatch(missing[0] if missing else header[0],
                             f"expected header {want}, got {header}")
    return fh, reader


def _load_speed(path):
    fh, reader = _open_rows(path, "speed")
    out = []
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 3:
                raise ParseError(i, f"expected 3 fields, got {len(row)}")
            ts = _parse_ts(row[1], i)
            v = _parse_float(row[2], i, "speed")
            if not v > 0:
                raise ParseError(i, "nonpositive speed")
            if (ts.minute % 5) or ts.second or ts.microsecond:
                raise ParseError(i, f"timestamp {row[1]} not on the 5-min grid")
            out.append(SpeedRecord(row[0], ts, v))
    out.sort(key=lambda r: (r.timestamp, r.segment_id))
    return out


def _load_incidents(path):
    fh, reader = _open_rows(path, "incidents")
    out = []
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 11:
                raise ParseError(i, f"expected 11 fields, got {len(row)}")
            if row[1] not in ("RCRS", "TWEET"):
                raise ParseError(i, f"unknown source {row[1]!r}")
            if row[9] not in ("PARTIAL", "FULL"):
                raise ParseError(i, f"unknown closure_type {row[9]!r}")
            start = _parse_ts(row[3], i)
            end = _parse_ts(row[4], i)
            if start > end:
                raise ParseError(i, "closure_start after closure_end")
            out.append(IncidentRecord(
                row[0], row[1], row[2], start, end,
                (_parse_float(row[5], i, "start_lat"), _parse_float(row[6], i, "start_lon")),
                (_parse_float(row[7], i, "end_lat"), _parse_float(row[8], i, "end_lon")),
                row[9], row[10]))
    out.sort(key=lambda r: (r.closure_start_ts, r.incident_id))
    return out


def _load_weather(path):
    fh, reader = _open_rows(path, "weather")
    out = []
    seen = set()
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 9:
                raise ParseError(i, f"expected 9 fields, got {len(row)}")
            ts = _parse_ts(row[0], i)
            if ts.minute or ts.second:
                raise ParseError(i, f"weather timestamp {row[0]} not hourly")
            if ts in seen:
                raise SchemaMismatch("timestamp", f"duplicate hourly key {row[0]}")
            seen.add(ts)
            wet = row[7].strip().lower()
            if wet not in ("0", "1", "true", "false"):
                raise ParseError(i, f"bad pavement_wet {row[7]!r}")
            sev = int(_parse_float(row[8], i, "wx_severity"))
            if sev < 0:
                raise ParseError(i, "negative wx_severity")
            out.append(WeatherRecord(
                ts, _parse_float(row[1], i, "temp"), _parse_float(row[2], i, "humidity"),
                _parse_float(row[3], i, "wind"), _parse_float(row[4], i, "pressure"),
                _parse_float(row[5], i, "visibility"), _parse_float(row[6], i, "precip"),
                wet in ("1", "true"), sev))
    out.sort(key=lambda r: r.timestamp)
    return out


def _load_tweets(path):
    fh, reader = _open_rows(path, "tweets")
    out = []
    kinds = ("GEOCODED", "TIMELINE", "RETWEET", "FAVORITE")
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 8:
                raise ParseError(i, f"expected 8 fields, got {len(row)}")
            if row[3] not in kinds:
                raise ParseError(i, f"unknown kind {row[3]!r}")
            coord = None
            if row[4] != "" or row[5] != "":
                coord = (_parse_float(row[4], i, "lat"), _parse_float(row[5], i, "lon"))
            if row[3] == "GEOCODED" and coord is None:
                raise ParseError(i, "GEOCODED tweet without coordinates")
            out.append(Tweet(row[0], row[1], _parse_ts(row[2], i), row[7],
                             coord, row[6] or None, row[3]))
    out.sort(key=lambda r: (r.timestamp, r.tweet_id))
    return out


def _load_segments(path):
    fh, reader = _open_rows(path, "segments")
    out = []
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 9:
                raise ParseError(i, f"expected 9 fields, got {len(row)}")
            try:
                order = int(row[2])
            except ValueError:
                raise ParseError(i, f"bad order_on_road {row[2]!r}") from None
            if order < 0:
                raise ParseError(i, "negative order_on_road")
            start_mp = _parse_float(row[3], i, "start_mp")
            end_mp = _parse_float(row[4], i, "end_mp")
            if start_mp > end_mp:
                raise ParseError(i, "start_mp greater than end_mp")
            out.append(SegmentDescriptor(
                row[0], row[1], order, start_mp, end_mp,
                (_parse_float(row[5], i, "start_lat"), _parse_float(row[6], i, "start_lon")),
                (_parse_float(row[7], i, "end_lat"), _parse_float(row[8], i, "end_lon"))))
    seen = set()
    for rec in out:
        key = (rec.road_id, rec.order_on_road)
        if key in seen:
            raise SchemaMismatch("order_on_road", f"duplicate order {key}")
        seen.add(key)
    out.sort(key=lambda r: (r.road_id, r.order_on_road))
    return out


def _load_calendar(path):
    fh, reader = _open_rows(path, "calendar")
    out = []
    with fh:
        for i, row in enumerate(reader, start=1):
            if len(row) != 2:
                raise ParseError(i, f"expected 2 fields, got {len(row)}")
            try:
                d = date_t.fromisoformat(row[0])
            except ValueError:
                raise ParseError(i, f"bad date {row[0]!r}") from None
            flag = row[1].strip().lower()
            if flag not in ("0", "1", "true", "false"):
                raise ParseError(i, f"bad is_holiday {row[1]!r}")
            out.append(CalendarInfo(d, flag in ("1", "true")))
    out.sort(key=lambda r: r.date)
    return out


def _ring_from_geojson(coords, row):
    # GeoJSON order is (lon, lat); internal order is (lat, lon)
    ring = tuple((float(lat), float(lon)) for lon, lat in coords)
    if len(ring) < 4 or ring[0] != ring[-1]:
        raise ParseError(row, "polygon ring must be closed with >= 4 points")
    return ring


def _load_polygons(path, kind):
    p = Path(path)
    if not p.exists():
        raise MissingFile(str(p))
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(0, f"bad geojson: {exc}") from None
    feats = doc.get("features")
    if doc.get("type") != "FeatureCollection" or feats is None:
        raise SchemaMismatch("features", "expected a FeatureCollection")
    out = []
    for i, feat in enumerate(feats, start=1):
        geom = feat.get("geometry", {})
        if geom.get("type") != "Polygon":
            raise ParseError(i, f"expected Polygon geometry, got {geom.get('type')!r}")
        ring = _ring_from_geojson(geom["coordinates"][0], i)
        props = feat.get("properties", {})
        if kind == "tracts":
            tract_id = props.get("tract_id")
            if not tract_id:
                raise SchemaMismatch("tract_id", f"feature {i} missing tract_id")
            out.append(TractPolygon(str(tract_id), ring))
        else:
            land_use = props.get("land_use")
            if land_use not in LAND_USE_CLASSES:
                raise SchemaMismatch("land_use", f"feature {i}: {land_use!r}")
            out.append(ZonePolygon(land_use, ring))
    if kind == "tracts":
        out.sort(key=lambda t: t.tract_id)
    return out


_LOADERS = {
    "speed": _load_speed,
    "incidents": _load_incidents,
    "weather": _load_weather,
    "tweets": _load_tweets,
    "segments": _load_segments,
    "calendar": _load_calendar,
    "tracts": lambda p: _load_polygons(p, "tracts"),
    "zones": lambda p: _load_polygons(p, "zones"),
}


def load_dataset(kind: str, path):
    """Load and validate one dataset; see SCHEMAS for the expected headers."""
    if kind not in _LOADERS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    return _LOADERS[kind](path)


def _fmt_ts(ts: datetime) -> str:
    return ts.isoformat(sep="T", timespec="minutes")


def _fmt_num(x: float) -> str:
    # shortest representation that parses back to the identical float
    return repr(float(x))


_SORT_KEYS = {
    "speed": lambda r: (r.timestamp, r.segment_id),
    "incidents": lambda r: (r.closure_start_ts, r.incident_id),
    "weather": lambda r: r.timestamp,
    "tweets": lambda r: (r.timestamp, r.tweet_id),
    "segments": lambda r: (r.road_id, r.order_on_road),
    "calendar": lambda r: r.date,
    "tracts": lambda r: r.tract_id,
    "zones": lambda r: (r.land_use, r.ring),
}


def write_dataset(kind: str, records, path) -> None:
    """Write records in canonical form and order (the inverse of load_dataset)."""
    p = Path(path)
    records = sorted(records, key=_SORT_KEYS[kind])
    if kind in ("tracts", "zones"):
        feats = []
        for rec in records:
            coords = [[lon, lat] for lat, lon in rec.ring]
            props = ({"tract_id": rec.tract_id} if kind == "tracts"
                     else {"land_use": rec.land_use})
            feats.append({"type": "Feature", "properties": props,
                          "geometry": {"type": "Polygon", "coordinates": [coords]}})
        p.write_text(json.dumps({"type": "FeatureCollection", "features": feats},
                                sort_keys=True), encoding="utf-8")
        return
    with p.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEMAS[kind])
        for r in records:
            if kind == "speed":
                writer.writerow([r.segment_id, _fmt_ts(r.timestamp), _fmt_num(r.observed_speed)])
            elif kind == "incidents":
                writer.writerow([r.incident_id, r.source, r.road_id,
                                 _fmt_ts(r.closure_start_ts), _fmt_ts(r.closure_end_ts),
                                 _fmt_num(r.start_coord[0]), _fmt_num(r.start_coord[1]),
                                 _fmt_num(r.end_coord[0]), _fmt_num(r.end_coord[1]),
                                 r.closure_type, r.category])
            elif kind == "weather":
                writer.writerow([_fmt_ts(r.timestamp), _fmt_num(r.temperature),
                                 _fmt_num(r.humidity), _fmt_num(r.wind_speed),
                                 _fmt_num(r.pressure), _fmt_num(r.visibility),
                                 _fmt_num(r.precip_hourly), int(r.pavement_wet),
                                 r.wx_severity])
            elif kind == "tweets":
                lat = _fmt_num(r.coord[0]) if r.coord else ""
                lon = _fmt_num(r.coord[1]) if r.coord else ""
                writer.writerow([r.tweet_id, r.user_id, _fmt_ts(r.timestamp), r.kind,
                                 lat, lon, r.user_profile_location or "", r.text])
            elif kind == "segments":
                writer.writerow([r.segment_id, r.road_id, r.order_on_road,
                                 _fmt_num(r.start_milepost), _fmt_num(r.end_milepost),
                                 _fmt_num(r.start_coord[0]), _fmt_num(r.start_coord[1]),
                                 _fmt_num(r.end_coord[0]), _fmt_num(r.end_coord[1])])
            elif kind == "calendar":
                writer.writerow([r.date.isoformat(), int(r.is_holiday)])
            else:
                raise ValueError(f"unknown dataset kind {kind!r}")


@dataclass
class DatasetBundle:
    segments: list = field(default_factory=list)
    speed: list = field(default_factory=list)
    incidents: list = field(default_factory=list)
    weather: list = field(default_factory=list)
    tweets: list = field(default_factory=list)
    tracts: list = field(default_factory=list)
    zones: list = field(default_factory=list)
    calendar: list = field(default_factory=list)

    @property
    def roads(self) -> list[str]:
        return sorted({s.road_id for s in self.segments})

    def segments_of(self, road_id: str) -> list:
        return sorted((s for s in self.segments if s.road_id == road_id),
                      key=lambda s: s.order_on_road)


def load_bundle(data_dir) -> DatasetBundle:
    """Load every dataset of a directory laid out per FILE_NAMES."""
    d = Path(data_dir)
    return DatasetBundle(
        segments=load_dataset("segments", d / FILE_NAMES["segments"]),
        speed=load_dataset("speed", d / FILE_NAMES["speed"]),
        incidents=load_dataset("incidents", d / FILE_NAMES["incidents"]),
        weather=load_dataset("weather", d / FILE_NAMES["weather"]),
        tweets=load_dataset("tweets", d / FILE_NAMES["tweets"]),
        tracts=load_dataset("tracts", d / FILE_NAMES["tracts"]),
        zones=load_dataset("zones", d / FILE_NAMES["zones"]),
        calendar=load_dataset("calendar", d / FILE_NAMES["calendar"]),
    )
