import json

import numpy as np
import pytest

from tweet2traffic.errors import InvalidConfig, MissingFile, ParseError, SchemaMismatch
from tweet2traffic.ingest import (
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    write_dataset,
)
from tweet2traffic.ingest.loaders import FILE_NAMES, load_bundle


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestSpeedLoader:
    def test_basic_row(self, tmp_path):
        p = write(tmp_path, "speed.csv",
                  "segment_id,timestamp,observed_speed\nT1,2014-03-04T05:00,41.0\n")
        recs = load_dataset("speed", p)
        assert recs[0].segment_id == "T1"
        assert recs[0].observed_speed == 41.0
        assert recs[0].timestamp.hour == 5

    def test_nonpositive_speed(self, tmp_path):
        p = write(tmp_path, "speed.csv",
                  "segment_id,timestamp,observed_speed\nT1,2014-03-04T05:00,-3\n")
        with pytest.raises(ParseError, match="nonpositive speed"):
            load_dataset("speed", p)

    def test_off_grid_timestamp(self, tmp_path):
        p = write(tmp_path, "speed.csv",
                  "segment_id,timestamp,observed_speed\nT1,2014-03-04T05:03,41.0\n")
        with pytest.raises(ParseError, match="grid"):
            load_dataset("speed", p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            load_dataset("speed", tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        p = write(tmp_path, "speed.csv", "a,b,c\n")
        with pytest.raises(SchemaMismatch):
            load_dataset("speed", p)

    def test_sorted_by_timestamp(self, tmp_path):
        p = write(tmp_path, "speed.csv",
                  "segment_id,timestamp,observed_speed\n"
                  "T1,2014-03-04T05:10,41.0\nT1,2014-03-04T05:00,42.0\n")
        recs = load_dataset("speed", p)
        assert recs[0].timestamp < recs[1].timestamp


class TestWeatherLoader:
    HEADER = "timestamp,temp,humidity,wind,pressure,visibility,precip,pavement_wet,wx_severity\n"

    def test_duplicate_hour(self, tmp_path):
        p = write(tmp_path, "weather.csv",
                  self.HEADER
                  + "2014-03-04T05:00,41,60,5,30,10,0,0,0\n"
                  + "2014-03-04T05:00,42,61,5,30,10,0,0,0\n")
        with pytest.raises(SchemaMismatch, match="duplicate hourly key"):
            load_dataset("weather", p)

    def test_good_row(self, tmp_path):
        p = write(tmp_path, "weather.csv", self.HEADER + "2014-03-04T05:00,41,60,5,30,10,0.2,1,2\n")
        recs = load_dataset("weather", p)
        assert recs[0].pavement_wet is True
        assert recs[0].wx_severity == 2


class TestIncidentLoader:
    HEADER = ("incident_id,source,road_id,closure_start,closure_end,"
              "start_lat,start_lon,end_lat,end_lon,closure_type,category\n")

    def test_good_row(self, tmp_path):
        p = write(tmp_path, "inc.csv", self.HEADER
                  + "i1,RCRS,R1,2014-03-04T06:42,2014-03-04T08:02,40.1,-80.0,40.2,-80.0,FULL,crash\n")
        recs = load_dataset("incidents", p)
        assert recs[0].closure_type == "FULL"

    def test_reversed_interval(self, tmp_path):
        p = write(tmp_path, "inc.csv", self.HEADER
                  + "i1,RCRS,R1,2014-03-04T08:02,2014-03-04T06:42,40.1,-80.0,40.2,-80.0,FULL,crash\n")
        with pytest.raises(ParseError, match="closure_start after"):
            load_dataset("incidents", p)


class TestTweetLoader:
    HEADER = "tweet_id,user_id,timestamp,kind,lat,lon,profile_location,text\n"

    def test_quoted_text(self, tmp_path):
        p = write(tmp_path, "tweets.csv", self.HEADER
                  + 't1,u1,2014-03-04T22:00,GEOCODED,40.4,-80.0,"Pittsburgh, PA","hello, world"\n')
        recs = load_dataset("tweets", p)
        assert recs[0].text == "hello, world"
        assert recs[0].user_profile_location == "Pittsburgh, PA"

    def test_geocoded_requires_coord(self, tmp_path):
        p = write(tmp_path, "tweets.csv", self.HEADER
                  + "t1,u1,2014-03-04T22:00,GEOCODED,,,loc,text\n")
        with pytest.raises(ParseError, match="without coordinates"):
            load_dataset("tweets", p)

    def test_timeline_without_coord(self, tmp_path):
        p = write(tmp_path, "tweets.csv", self.HEADER
                  + "t1,u1,2014-03-04T22:00,TIMELINE,,,loc,text\n")
        assert load_dataset("tweets", p)[0].coord is None


class TestGeojson:
    def test_tract_round_trip(self, tmp_path):
        doc = {"type": "FeatureCollection", "features": [{
            "type": "Feature", "properties": {"tract_id": "T01"},
            "geometry": {"type": "Polygon",
                         "coordinates": [[[-80.0, 40.0], [-79.0, 40.0],
                                          [-79.0, 41.0], [-80.0, 41.0], [-80.0, 40.0]]]}}]}
        p = write(tmp_path, "tracts.geojson", json.dumps(doc))
        recs = load_dataset("tracts", p)
        assert recs[0].tract_id == "T01"
        assert recs[0].ring[0] == (40.0, -80.0)
        out = tmp_path / "out.geojson"
        write_dataset("tracts", recs, out)
        assert load_dataset("tracts", out) == recs

    def test_bad_land_use(self, tmp_path):
        doc = {"type": "FeatureCollection", "features": [{
            "type": "Feature", "properties": {"land_use": "swamp"},
            "geometry": {"type": "Polygon",
                         "coordinates": [[[-80, 40], [-79, 40], [-79, 41], [-80, 41], [-80, 40]]]}}]}
        p = write(tmp_path, "zones.geojson", json.dumps(doc))
        with pytest.raises(SchemaMismatch, match="land_use"):
            load_dataset("zones", p)


@pytest.mark.parametrize("kind", ["speed", "incidents", "weather", "tweets",
                                  "segments", "calendar"])
def test_write_load_round_trip(tmp_path, kind):
    """write(load(x)) reproduces the loaded records and is idempotent."""
    cfg = SyntheticConfig(n_days=4, n_roads=2, segments_per_road=3, n_users=8, n_tracts=3)
    bundle, _ = generate_synthetic(cfg, seed=11)
    records = getattr(bundle, {"speed": "speed", "incidents": "incidents",
                               "weather": "weather", "tweets": "tweets",
                               "segments": "segments", "calendar": "calendar"}[kind])
    p1 = tmp_path / f"a_{FILE_NAMES[kind]}"
    p2 = tmp_path / f"b_{FILE_NAMES[kind]}"
    write_dataset(kind, records, p1)
    loaded = load_dataset(kind, p1)
    assert loaded == sorted_records(kind, records)
    write_dataset(kind, loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def sorted_records(kind, records):
    keys = {
        "speed": lambda r: (r.timestamp, r.segment_id),
        "incidents": lambda r: (r.closure_start_ts, r.incident_id),
        "weather": lambda r: r.timestamp,
        "tweets": lambda r: (r.timestamp, r.tweet_id),
        "segments": lambda r: (r.road_id, r.order_on_road),
        "calendar": lambda r: r.date,
    }
    return sorted(records, key=keys[kind])


class TestSyntheticGenerator:
    def test_determinism_byte_identical(self, tmp_path):
        cfg = SyntheticConfig(n_days=6, n_roads=2, segments_per_road=3, n_users=10, n_tracts=3)
        for run in ("x", "y"):
            b, sc = generate_synthetic(cfg, seed=42)
            d = tmp_path / run
            d.mkdir()
            for kind in FILE_NAMES:
                write_dataset(kind, getattr(b, kind), d / FILE_NAMES[kind])
            (d / "sidecar.json").write_text(json.dumps(sc, sort_keys=True))
        for kind in FILE_NAMES:
            assert ((tmp_path / "x" / FILE_NAMES[kind]).read_bytes()
                    == (tmp_path / "y" / FILE_NAMES[kind]).read_bytes())
        assert ((tmp_path / "x" / "sidecar.json").read_bytes()
                == (tmp_path / "y" / "sidecar.json").read_bytes())

    def test_invalid_config(self):
        with pytest.raises(InvalidConfig):
            generate_synthetic(SyntheticConfig(n_days=0), seed=1)
        with pytest.raises(InvalidConfig):
            generate_synthetic(SyntheticConfig(sleep_effect=1.5), seed=1)

    def test_bundle_passes_loaders(self, tmp_path):
        cfg = SyntheticConfig(n_days=5, n_roads=2, segments_per_road=3, n_users=10, n_tracts=3)
        bundle, _ = generate_synthetic(cfg, seed=3)
        for kind in FILE_NAMES:
            write_dataset(kind, getattr(bundle, kind), tmp_path / FILE_NAMES[kind])
        reloaded = load_bundle(tmp_path)
        assert len(reloaded.speed) == len(bundle.speed)
        assert len(reloaded.tweets) == len(bundle.tweets)
        assert reloaded.segments == bundle.segments

    def test_sidecar_quadruples_match_congestion_module(self, tmp_path):
        from tweet2traffic.config import CongestionParams
        from tweet2traffic.congestion import (TtiSeries, congestion_measurements,
                                              reference_speed)

        cfg = SyntheticConfig(n_days=8, n_roads=1, segments_per_road=3, n_users=8, n_tracts=3)
        bundle, sidecar = generate_synthetic(cfg, seed=5)
        for kind in FILE_NAMES:
            write_dataset(kind, getattr(bundle, kind), tmp_path / FILE_NAMES[kind])
        reloaded = load_bundle(tmp_path)
        by_seg = {}
        for rec in reloaded.speed:
            by_seg.setdefault(rec.segment_id, []).append(rec)
        params = CongestionParams()
        for seg_id, recs in by_seg.items():
            ref = reference_speed([r.observed_speed for r in recs])
            by_day = {}
            for r in recs:
                if 5 <= r.timestamp.hour < 11:
                    by_day.setdefault(r.timestamp.date(), []).append(r.observed_speed)
            for day, speeds in by_day.items():
                m = congestion_measurements(
                    TtiSeries(seg_id, day, ref / np.asarray(speeds)), params)
                want = sidecar["quadruples"][seg_id][day.isoformat()]
                assert int(m.cs) == want["cs"], (seg_id, day)
                assert m.cst == want["cst"]
                assert m.cd == want["cd"]
                if m.pti is not None:
                    assert m.pti == pytest.approx(want["pti"], abs=1e-8)

    def test_null_effect_quadruples_independent_of_tweets(self):
        cfg = SyntheticConfig(n_days=300, n_roads=1, segments_per_road=4,
                              n_users=12, n_tracts=3,
                              sleep_effect=0.0, incident_effect=0.0, weather_effect=0.0)
        _, sidecar = generate_synthetic(cfg, seed=9)
        peaks, cst = [], []
        for row in sidecar["days"]:
            day = row["date"]
            vals = [sidecar["quadruples"][s][day]["cst"] for s in sidecar["quadruples"]]
            peaks.append(row["tweet_peak_hour"])
            cst.append(np.mean(vals))
        r = np.corrcoef(peaks, cst)[0, 1]
        assert abs(r) < 2.0 / np.sqrt(len(peaks))

    def test_sleep_effect_rank_correlation(self):
        cfg = SyntheticConfig(n_days=200, n_roads=1, segments_per_road=4,
                              n_users=12, n_tracts=3, sleep_effect=0.9,
                              incident_effect=0.0, weather_effect=0.0)
        _, sidecar = generate_synthetic(cfg, seed=10)
        earliness, cst = [], []
        for row in sidecar["days"]:
            day = row["date"]
            vals = [sidecar["quadruples"][s][day]["cst"] for s in sidecar["quadruples"]]
            earliness.append(-row["tweet_peak_hour"])
            cst.append(np.mean(vals))
        # spearman rank correlation without scipy.stats dependence in the test
        def ranks(x):
            order = np.argsort(x)
            rk = np.empty(len(x))
            rk[order] = np.arange(len(x))
            return rk
        r = np.corrcoef(ranks(np.array(earliness)), ranks(np.array(cst)))[0, 1]
        assert r > 0.3

    def test_congestion_rate_sane(self):
        cfg = SyntheticConfig(n_days=120, n_roads=2, segments_per_road=5,
                              n_users=12, n_tracts=3)
        _, sidecar = generate_synthetic(cfg, seed=12)
        cs = [q["cs"] for seg in sidecar["quadruples"].values() for q in seg.values()]
        rate = np.mean(cs)
        assert 0.2 < rate < 0.8
