import json
import pytest

from tweet2traffic.cli import main


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    data = tmp / "data"
    sc = tmp / "sc.json"
    sc.write_text(json.dumps({"n_days": 26, "n_roads": 1, "segments_per_road": 3,
                              "n_users": 12, "n_tracts": 3}))
    rc = main(["synth", "--synth-config", str(sc), "--seed", "3", "--out", str(data)])
    assert rc == 0
    return data


class TestCli:
    def test_synth_writes_all_files(self, data_dir):
        for name in ("speed.csv", "incidents.csv", "weather.csv", "tweets.csv",
                     "segments.csv", "calendar.csv", "tracts.geojson",
                     "zones.geojson", "sidecar.json", "config.json"):
            assert (data_dir / name).exists()

    def test_ingest_ok(self, data_dir, capsys):
        assert main(["ingest", "--data", str(data_dir)]) == 0
        assert "segments" in capsys.readouterr().out

    def test_ingest_missing_dir_exit_2(self, tmp_path):
        assert main(["ingest", "--data", str(tmp_path / "nope")]) == 2

    def test_ingest_bad_file_exit_2(self, data_dir, tmp_path):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(data_dir, broken)
        (broken / "speed.csv").write_text("segment_id,timestamp,observed_speed\nS,2014-01-06T05:00,-1\n")
        assert main(["ingest", "--data", str(broken)]) == 2

    def test_evaluate_small(self, data_dir, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "harness": {"n_outer": 3},
            "tweets": {"agency_user_ids": ["agency511"]},
        }))
        out = tmp_path / "eval"
        rc = main(["evaluate", "--data", str(data_dir), "--config", str(cfg),
                   "--models", "t2t,hm", "--seed", "1", "--out", str(out)])
        assert rc == 0
        assert (out / "metrics.csv").exists()
        assert (out / "aggregates.csv").exists()
        assert (out / "token_frequencies.csv").exists()
        assert "t2t:" in capsys.readouterr().out

    def test_ablate_small(self, data_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "harness": {"n_outer": 3},
            "tweets": {"agency_user_ids": ["agency511"]},
        }))
        out = tmp_path / "abl"
        rc = main(["ablate", "--data", str(data_dir), "--config", str(cfg),
                   "--variant", "NO_WEATHER", "--seed", "1", "--out", str(out)])
        assert rc == 0
        deltas = (out / "deltas.csv").read_text().splitlines()
        assert deltas[0] == "variant,metric,relative_delta"
        assert len(deltas) == 7

    def test_tweets_requires_stage_flag(self, data_dir, tmp_path):
        rc = main(["tweets", "--data", str(data_dir), "--out", str(tmp_path / "t")])
        assert rc == 2

    def test_describe(self, data_dir, tmp_path, capsys):
        rc = main(["describe", "--data", str(data_dir), "--out", str(tmp_path / "d")])
        assert rc == 0
        assert "chi2=" in capsys.readouterr().out
