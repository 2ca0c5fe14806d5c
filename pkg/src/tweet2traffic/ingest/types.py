"""Canonical record types for every external dataset."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date as date_t
from datetime import datetime


LAND_USE_CLASSES = ("residence", "downtown", "education", "industry", "mixed-use", "amenity")


@dataclass(frozen=True, slots=True)
class SegmentDescriptor:
    segment_id: str
    road_id: str
    order_on_road: int          # 0 = most upstream
    start_milepost: float       # km
    end_milepost: float
    start_coord: tuple[float, float]
    end_coord: tuple[float, float]


@dataclass(frozen=True, slots=True)
class SpeedRecord:
    segment_id: str
    timestamp: datetime         # 5-min grid
    observed_speed: float       # mph, > 0


@dataclass(frozen=True, slots=True)
class IncidentRecord:
    incident_id: str
    source: str                 # RCRS | TWEET
    road_id: str
    closure_start_ts: datetime
    closure_end_ts: datetime
    start_coord: tuple[float, float]
    end_coord: tuple[float, float]
    closure_type: str           # PARTIAL | FULL
    category: str


@dataclass(frozen=True, slots=True)
class WeatherRecord:
    timestamp: datetime         # hourly
    temperature: float
    humidity: float
    wind_speed: float
    pressure: float
    visibility: float
    precip_hourly: float
    pavement_wet: bool
    wx_severity: int


@dataclass(frozen=True, slots=True)
class Tweet:
    tweet_id: str
    user_id: str
    timestamp: datetime
    text: str
    coord: tuple[float, float] | None
    user_profile_location: str | None
    kind: str                   # GEOCODED | TIMELINE | RETWEET | FAVORITE


@dataclass(frozen=True, slots=True)
class TractPolygon:
    tract_id: str
    ring: tuple[tuple[float, float], ...]   # closed (lat, lon) ring


@dataclass(frozen=True, slots=True)
class ZonePolygon:
    land_use: str               # one of LAND_USE_CLASSES
    ring: tuple[tuple[float, float], ...]


@dataclass(frozen=True, slots=True)
class CalendarInfo:
    date: date_t
    is_holiday: bool

    @property
    def day_of_week(self) -> int:
        return self.date.weekday()
