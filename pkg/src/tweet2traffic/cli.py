"""Subcommand CLI: synth, ingest, cluster, tweets, features, train, predict,
evaluate, ablate, describe.

Every command takes --config (JSON overriding PipelineConfig fields), --seed
and --out; data-consuming commands take --data pointing at a directory laid
out per the canonical file names. Exit code 0 on success, 2 on validation
errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from datetime import date as date_t
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, load_config
from .errors import Tweet2TrafficError
from .harness.ablation import ABLATION_VARIANTS, run_ablation
from .harness.descriptive import run_descriptive_analysis
from .harness.pipeline import (
    build_split,
    fit_stack,
    prepare_data,
    segment_design,
)
from .harness.report import emit_report, token_frequency
from .harness.tscv import TsCvPlan, run_nested_tscv
from .ingest.loaders import FILE_NAMES, load_bundle, write_dataset
from .ingest.synthetic import AGENCY_USER, SyntheticConfig, generate_synthetic
from .learn.serialize import bundle_from_json, bundle_to_json
from .learn.stack import predict_day
from .tweetpipe.geocode import MilepostGeocoder
from .tweetpipe.incidents import assemble_incident_records, parse_incident_tweet
from .tweetpipe.textclean import clean_text, load_slang, load_wordlist
from .tweetpipe.users import filter_influential_users, geotag_timeline, infer_home

log = logging.getLogger("t2t")


def _data_config(args) -> PipelineConfig:
    """Config resolution: --config file, else data-dir config.json, else defaults."""
    if args.config:
        cfg = load_config(args.config)
    else:
        candidate = Path(args.data) / "config.json" if getattr(args, "data", None) else None
        cfg = load_config(candidate) if candidate and candidate.exists() else PipelineConfig()
    data = getattr(args, "data", None)
    if data:
        updates = {}
        for key, fname in (("slang_path", "slang.txt"),
                           ("resident_lexicon_path", "resident_lexicon.txt"),
                           ("wordlist_path", "wordlist.txt"),
                           ("sentiment_scores_path", "sentiment_scores.csv")):
            p = Path(data) / fname
            if getattr(cfg, key) is None and p.exists():
                updates[key] = str(p)
        if updates:
            cfg = dataclasses.replace(cfg, **updates)
    return cfg


def cmd_synth(args) -> int:
    overrides = json.loads(Path(args.synth_config).read_text()) if args.synth_config else {}
    if "start_date" in overrides:
        overrides["start_date"] = date_t.fromisoformat(overrides["start_date"])
    cfg = SyntheticConfig(**overrides)
    bundle, sidecar = generate_synthetic(cfg, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind, fname in sorted(FILE_NAMES.items()):
        write_dataset(kind, getattr(bundle, kind), out / fname)
    (out / "sidecar.json").write_text(json.dumps(sidecar, sort_keys=True, indent=1),
                                      encoding="utf-8")
    pipeline_overrides = {"tweets": {"agency_user_ids": [AGENCY_USER]}}
    (out / "config.json").write_text(json.dumps(pipeline_overrides, sort_keys=True),
                                     encoding="utf-8")
    print(f"wrote synthetic dataset ({cfg.n_days} days, {cfg.n_roads} roads) to {out}")
    return 0


def cmd_ingest(args) -> int:
    bundle = load_bundle(args.data)
    print(f"segments {len(bundle.segments)} | speed rows {len(bundle.speed)} | "
          f"incidents {len(bundle.incidents)} | weather rows {len(bundle.weather)} | "
          f"tweets {len(bundle.tweets)} | tracts {len(bundle.tracts)} | "
          f"zones {len(bundle.zones)} | calendar {len(bundle.calendar)}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    art = build_split(prepared, prepared.days, [], seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .clustering import elbow_select_k, kmeans_fit, pca_fit, pca_transform
    from .clustering import build_road_profiles, order_clusters_by_mean_tti

    for road_id in prepared.roads:
        dates, labels, k = art.cluster_labels[road_id]
        safe = road_id.replace(" ", "_").replace("/", "_")
        with (out / f"labels_{safe}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "cluster"])
            for d, lab in zip(dates, labels):
                w.writerow([d.isoformat(), int(lab)])
        seg_ids = [s.segment_id for s in prepared.segs_by_road[road_id]]
        tti_map = {(sid, d): art.tti[(sid, d)] for d in dates for sid in seg_ids
                   if (sid, d) in art.tti}
        profile = build_road_profiles(road_id, seg_ids, tti_map)
        pca = pca_fit(profile.rows, cfg.clustering.pca_variance_target)
        reduced = pca_transform(pca, profile.rows)
        km = kmeans_fit(reduced, k, seed=args.seed, n_init=cfg.clustering.kmeans_n_init)
        ordered = order_clusters_by_mean_tti(km, pca)
        from .clustering import pca_inverse_transform

        centroids = pca_inverse_transform(pca, km.centroids)
        with (out / f"centroids_{safe}.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cluster"] + [f"x{i}" for i in range(centroids.shape[1])])
            for old_label, row in enumerate(centroids):
                w.writerow([int(ordered.permutation[old_label])]
                           + [repr(float(v)) for v in row])
        k_range = list(range(cfg.clustering.k_min,
                             min(cfg.clustering.k_max, len(profile.dates) - 1) + 1))
        if len(k_range) >= 3:
            _k, inertias = elbow_select_k(reduced, k_range, seed=args.seed,
                                          n_init=cfg.clustering.kmeans_n_init)
            with (out / f"inertia_{safe}.csv").open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["k", "inertia"])
                for kk in sorted(inertias):
                    w.writerow([kk, repr(float(inertias[kk]))])
    print(f"cluster outputs written to {out}")
    return 0


def cmd_tweets(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slang = load_slang(cfg.slang_path)
    wordlist = load_wordlist(cfg.wordlist_path)
    ran_any = False
    if args.augment:
        ran_any = True
        homes = {}
        from .tweetpipe.users import detect_bots, load_resident_lexicon

        lex = load_resident_lexicon(cfg.resident_lexicon_path)
        users = filter_influential_users(bundle.tweets, cfg.tweets, lexicon=lex)
        bots = detect_bots(users, cfg.tweets)
        geo_by_user = {}
        for t in bundle.tweets:
            if t.kind == "GEOCODED" and t.coord is not None:
                geo_by_user.setdefault(t.user_id, []).append(t)
        for uid in sorted(users):
            if not users[uid].is_resident or uid in bots:
                continue
            home = infer_home(uid, geo_by_user.get(uid, []), bundle.zones, cfg.tweets)
            if home:
                homes[uid] = home
        augmented = geotag_timeline(bundle.tweets, homes, cfg.tweets)
        write_dataset("tweets", augmented, out / "tweets_augmented.csv")
        with (out / "homes.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "lat", "lon"])
            for uid in sorted(homes):
                w.writerow([uid, repr(homes[uid][0]), repr(homes[uid][1])])
        print(f"augmented {len(homes)} users' timelines -> {out/'tweets_augmented.csv'}")
    if args.clean:
        ran_any = True
        with (out / "tweets_clean.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tweet_id", "normalized_text"])
            for t in bundle.tweets:
                w.writerow([t.tweet_id, clean_text(t.text, slang=slang, wordlist=wordlist)])
        print(f"cleaned {len(bundle.tweets)} tweets -> {out/'tweets_clean.csv'}")
    if args.parse_incidents:
        ran_any = True
        parsed = []
        for t in bundle.tweets:
            if not cfg.tweets.agency_user_ids or t.user_id in cfg.tweets.agency_user_ids:
                p = parse_incident_tweet(t.text, t.timestamp)
                if p is not None:
                    parsed.append(p)
        records = assemble_incident_records(parsed, MilepostGeocoder(bundle.segments))
        write_dataset("incidents", records, out / "incidents_from_tweets.csv")
        print(f"parsed {len(parsed)} incident tweets into {len(records)} records")
    if args.encode:
        ran_any = True
        prepared = prepare_data(bundle, cfg)
        art = build_split(prepared, prepared.days, [], seed=args.seed)
        fm = art.road_matrix
        with (out / "tweet_features.csv").open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            tweet_cols = [i for i, g in enumerate(fm.groups) if g.startswith("tweet")]
            w.writerow(["date"] + [fm.names[i] for i in tweet_cols])
            for di, d in enumerate(fm.days):
                w.writerow([d.isoformat()] + [repr(float(fm.values[di, i]))
                                              for i in tweet_cols])
        print(f"encoded tweet features -> {out/'tweet_features.csv'}")
    if not ran_any:
        print("no stage flags given; use --augment/--clean/--parse-incidents/--encode",
              file=sys.stderr)
        return 2
    return 0


def cmd_features(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    art = build_split(prepared, prepared.days, [], seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fm = art.road_matrix
    with (out / "road_features.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + fm.names)
        for di, d in enumerate(fm.days):
            w.writerow([d.isoformat()] + [repr(float(v)) for v in fm.values[di]])
    from .features.incident import incident_feature_names

    inc_names = incident_feature_names()
    with (out / "segment_incident_features.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment_id", "date"] + inc_names)
        for sid in sorted(art.incident_vectors):
            for d in fm.days:
                vec = art.incident_vectors[sid][d]
                w.writerow([sid, d.isoformat()] + [repr(float(vec.get(n, 0.0)))
                                                   for n in inc_names])
    print(f"feature matrices written to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    art = build_split(prepared, prepared.days, [], seed=args.seed)
    stack = fit_stack(prepared, art, variant=args.variant, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = bundle_to_json(stack.descriptors, stack.segment_models,
                          meta={"seed": args.seed, "variant": args.variant,
                                "version": __version__})
    (out / "model.json").write_text(text, encoding="utf-8")
    from .harness.tscv import EvaluationReport

    emit_report(EvaluationReport().finalize(), out,
                descriptors=stack.descriptors, segment_models=stack.segment_models)
    print(f"model bundle -> {out/'model.json'}")
    return 0


def cmd_predict(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    target = date_t.fromisoformat(args.date) if args.date else prepared.days[-1]
    if target not in prepared.day_index:
        print(f"date {target} not covered by the dataset", file=sys.stderr)
        return 2
    train_days = [d for d in prepared.days if d < target] or [target]
    art = build_split(prepared, train_days, [target], seed=args.seed)
    descriptors, segments, _meta = bundle_from_json(Path(args.model).read_text())
    scales = {road: (desc.predict_scales(art.road_matrix.values) if desc is not None
                     else np.zeros((len(art.road_matrix.days), 0)))
              for road, desc in descriptors.items()}
    designs = segment_design(prepared, art, art.road_matrix, scales)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / f"predictions_{target.isoformat()}.csv").open("w", newline="",
                                                              encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment_id", "date", "cs", "cst_slots", "cd_slots", "pti",
                    "p_congested"])
        for sid in sorted(segments):
            if sid not in designs:
                continue
            _names, X_all, pos = designs[sid]
            p = predict_day(segments[sid], X_all[pos[target]],
                            cfg.model.cs_threshold)
            w.writerow([sid, target.isoformat(), p.cs, repr(p.cst),
                        "" if p.cd is None else repr(p.cd),
                        "" if p.pti is None else repr(p.pti), repr(p.p_congested)])
    print(f"predictions -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    models = tuple(args.models.split(","))
    plan = TsCvPlan(cfg.harness.n_outer, cfg.model.inner_folds)
    report = run_nested_tscv(prepared, models=models, plan=plan, seed=args.seed)
    out = Path(args.out)
    tokens = token_frequency(
        [t for t in bundle.tweets if t.coord is not None],
        lambda text: clean_text(text, slang=load_slang(cfg.slang_path),
                                wordlist=load_wordlist(cfg.wordlist_path)),
        cfg.tweets.periods)
    emit_report(report, out, token_counts=tokens)
    for m in models:
        agg = report.aggregate.get((m, "ALL"), {})
        line = " ".join(f"{k}={v:.4f}" for k, v in agg.items() if v is not None)
        print(f"{m}: {line}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    plan = TsCvPlan(cfg.harness.n_outer, cfg.model.inner_folds)
    base = run_nested_tscv(prepared, models=("t2t",), plan=plan, seed=args.seed)
    var_report, deltas = run_ablation(prepared, args.variant, base_report=base,
                                      plan=plan, seed=args.seed)
    out = Path(args.out)
    emit_report(var_report, out)
    with (Path(args.out) / "deltas.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variant", "metric", "relative_delta"])
        for metric in sorted(deltas):
            v = deltas[metric]
            w.writerow([args.variant, metric, "" if v is None else repr(v)])
    print(f"{args.variant} deltas: " + " ".join(
        f"{k}={v:+.3%}" for k, v in deltas.items() if v is not None))
    return 0


def cmd_describe(args) -> int:
    cfg = _data_config(args)
    bundle = load_bundle(args.data)
    prepared = prepare_data(bundle, cfg)
    rows = run_descriptive_analysis(prepared, seed=args.seed)
    from .harness.tscv import EvaluationReport

    emit_report(EvaluationReport().finalize(), Path(args.out), association_rows=rows)
    for r in rows:
        print(f"{r.road_id}: {r.n_traffic_clusters} x {r.n_tweet_clusters} clusters, "
              f"chi2={r.chi2:.3f} p={r.p_value:.2e} V={r.cramers_v:.3f} n={r.n_days}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="t2t", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", default=None, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")
        if data:
            p.add_argument("--data", required=True, help="dataset directory")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p, data=False)
    p.add_argument("--synth-config", default=None, help="SyntheticConfig overrides JSON")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate a dataset directory")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cluster", help="road congestion clustering outputs")
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("tweets", help="tweet pipeline stages")
    common(p)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--clean", action="store_true")
    p.add_argument("--parse-incidents", action="store_true")
    p.add_argument("--encode", action="store_true")
    p.set_defaults(func=cmd_tweets)

    p = sub.add_parser("features", help="export assembled feature matrices")
    common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit the full-data model stack")
    common(p)
    p.add_argument("--variant", default="linear", choices=["linear", "rf", "knn"])
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict one day from a saved model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--date", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="nested time-series cross-validation")
    common(p)
    p.add_argument("--models", default="t2t,hm,sar")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run one ablation variant")
    common(p)
    p.add_argument("--variant", required=True, choices=sorted(ABLATION_VARIANTS))
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("describe", help="traffic vs tweeting association analysis")
    common(p)
    p.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Tweet2TrafficError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
