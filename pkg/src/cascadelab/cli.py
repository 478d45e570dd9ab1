"""Command-line driver for the full pipeline.

Commands: ingest, metrics, ccdf, fit, rank, groups, verify, simulate,
generate, compare. Every command writes data only to its declared output
files and keeps diagnostics on stderr. Exit status is 0 on success, 1 on
validation or data errors, 2 on usage errors. Stochastic commands demand
a seed so every run is reproducible; report commands accept ``--plot``
to render a figure next to the delimited output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from . import mmd as mmd_mod
from . import sim as sim_mod
from . import stats as stats_mod
from . import topo as topo_mod
from .corpus import CorpusError, Label

DEFAULT_FEATURES = ("size", "depth", "max_breadth", "diameter",
                    "structural_virality", "max_hop", "avg_hop",
                    "max_time", "avg_time")

METRICS_HEADER = ["cascade_id", "label", "feature", "value"]


def _info(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Shared file helpers
# ---------------------------------------------------------------------------

def _read_metrics_csv(path: str) -> list[tuple[str, str, str, float]]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"metrics file {path} is empty")
        if header != METRICS_HEADER:
            raise ValueError(f"metrics file {path} has header {header!r}, "
                             f"expected {METRICS_HEADER!r}")
        for row in reader:
            if not row:
                continue
            rows.append((row[0], row[1], row[2], float(row[3])))
    if not rows:
        raise ValueError(f"metrics file {path} contains no rows")
    return rows


def _feature_rows(path: str, feature: str) -> list[tuple[str, str, float]]:
    rows = [(cid, label, value) for cid, label, feat, value
            in _read_metrics_csv(path) if feat == feature]
    if not rows:
        raise ValueError(f"metrics file {path} has no rows for feature {feature!r}")
    return rows


def _series_from_rows(feature: str, rows: list[tuple[str, str, float]]) -> topo_mod.MetricSeries:
    return topo_mod.MetricSeries(
        feature=feature,
        values=tuple((cid, value) for cid, _, value in rows),
        label_of={cid: Label(label) for cid, label, _ in rows},
    )


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _read_kv_config(path: str, allowed: set[str]) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in allowed:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


SIMULATE_CONFIG_KEYS = {"scenario", "n", "rate", "power_law_exponent", "fanout",
                        "active_rounds", "cee", "beta", "delta_s", "max_size",
                        "runs", "seed"}
GENERATE_CONFIG_KEYS = {"n", "score", "alpha", "gamma", "select", "cee", "beta",
                        "delta_s", "profiles", "runs", "seed"}


def _resolve(args, cfg: dict[str, str], name: str, default, cast):
    """CLI flag wins over config-file entry wins over the default."""
    cli_value = getattr(args, name)
    if cli_value is not None:
        return cli_value
    if name in cfg:
        return cast(cfg[name])
    return default


# ---------------------------------------------------------------------------
# ingest / metrics
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    corpus = corpus_mod.parse_cascades(args.cascades)
    if len(corpus) == 0:
        raise ValueError(f"no cascades found in {args.cascades}")
    if args.profiles:
        corpus = corpus_mod.attach_profiles(corpus, args.profiles)
    corpus_mod.write_cascades(corpus, args.out)
    summary = corpus_mod.corpus_summary(corpus)
    _info(f"ingested {summary.n_cascades} cascades, {summary.n_nodes} nodes, "
          f"{summary.n_users} distinct users, "
          f"profile coverage {summary.profile_coverage:.4f}")
    for label, group in summary.per_label.items():
        _info(f"  {label}: {group.count} cascades, "
              f"size {group.size_min}-{group.size_max} (mean {group.size_mean:.2f}), "
              f"depth {group.depth_min}-{group.depth_max} (mean {group.depth_mean:.2f})")
    return 0


def _metric_rows(job) -> tuple[list[list], int]:
    cascade, features = job
    rows = []
    skipped = 0
    for feature in features:
        try:
            value = topo_mod.compute_metric(cascade, feature)
            rows.append([cascade.id, cascade.label.value, feature, repr(value)])
        except topo_mod.UndefinedMetricError:
            skipped += 1
    return rows, skipped


def cmd_metrics(args) -> int:
    corpus = corpus_mod.parse_cascades(args.corpus)
    if len(corpus) == 0:
        raise ValueError(f"no cascades found in {args.corpus}")
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    for feature in features:
        if feature not in topo_mod.FEATURES:
            raise ValueError(f"unknown feature {feature!r}; "
                             f"expected one of {topo_mod.FEATURES}")
    jobs = [(cascade, features) for cascade in corpus]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_cascade = list(pool.map(_metric_rows, jobs, chunksize=64))
    else:
        per_cascade = [_metric_rows(job) for job in jobs]

    out_rows = []
    skipped = 0
    for cascade_rows, cascade_skips in per_cascade:
        out_rows.extend(cascade_rows)
        skipped += cascade_skips
    _write_csv(args.out, METRICS_HEADER, out_rows)
    if skipped:
        _info(f"skipped {skipped} (cascade, feature) pairs whose precondition failed")
    _info(f"wrote {len(out_rows)} metric rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# ccdf / fit / groups
# ---------------------------------------------------------------------------

def cmd_ccdf(args) -> int:
    rows = _feature_rows(args.metrics, args.feature)
    groups: dict[str, list[float]] = {}
    if args.by_label:
        for _, label, value in rows:
            groups.setdefault(label, []).append(value)
    else:
        groups["all"] = [value for _, _, value in rows]

    curves = {label: stats_mod.ccdf(values) for label, values in sorted(groups.items())}
    out_rows = []
    for label, curve in curves.items():
        for x, survival in curve.points:
            out_rows.append([args.feature, label, repr(x), repr(survival)])
    _write_csv(args.out, ["feature", "label", "x", "survival"], out_rows)
    _info(f"wrote CCDF ({sum(len(c.points) for c in curves.values())} points, "
          f"{len(curves)} group(s)) to {args.out}")
    if args.plot:
        from . import plotting
        plotting.plot_ccdf(curves, args.feature, args.plot,
                           log_x=args.log_x, log_y=args.log_y)
        _info(f"rendered {args.plot}")
    return 0


def _fit_record(feature: str, fit: stats_mod.FitResult, rank=None,
                ks: stats_mod.KsResult | None = None) -> dict:
    record = {
        "feature": feature,
        "family": fit.family,
        "rank": rank,
        "params": {k: fit.params[k] for k in sorted(fit.params)},
        "nllf": fit.nllf,
        "n": fit.n,
        "d_stat": None,
        "p_value": None,
    }
    if ks is not None:
        record["d_stat"] = ks.d_stat
        record["p_value"] = ks.p_value
    return record


def cmd_fit(args) -> int:
    rows = _feature_rows(args.metrics, args.feature)
    if args.label != "all":
        rows = [r for r in rows if r[1] == args.label]
        if not rows:
            raise ValueError(f"metrics file {args.metrics} has no "
                             f"{args.label!r} rows for feature {args.feature!r}")
    values = [value for _, _, value in rows]

    if args.rank_all:
        fits, excluded = stats_mod.rank_families(values)
        for family, reason in excluded:
            _info(f"excluded {family}: {reason}")
        records = [
            _fit_record(args.feature, fit, rank=i + 1,
                        ks=stats_mod.ks_test(values, fit) if args.ks else None)
            for i, fit in enumerate(fits)
        ]
    else:
        fit = stats_mod.fit_mle(values, args.family)
        ks = stats_mod.ks_test(values, fit) if args.ks else None
        records = [_fit_record(args.feature, fit, ks=ks)]
        fits = [fit]

    with open(args.out, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record))
            handle.write("\n")
    _info(f"wrote {len(records)} fit record(s) to {args.out}")
    if args.plot:
        from . import plotting
        plotting.plot_fit(values, fits, args.feature, args.plot)
        _info(f"rendered {args.plot}")
    return 0


def cmd_groups(args) -> int:
    series = _series_from_rows(args.feature, _feature_rows(args.metrics, args.feature))
    summary = stats_mod.label_group_summary(series)
    order = sorted(k for k in summary if k != "overall") + ["overall"]
    out_rows = [[label, summary[label].count, repr(summary[label].mean),
                 repr(summary[label].median)] for label in order]
    _write_csv(args.out, ["label", "count", "mean", "median"], out_rows)
    _info(f"wrote group summary for {args.feature} to {args.out}")
    if args.plot:
        from . import plotting
        plotting.plot_groups({k: v for k, v in summary.items() if k != "overall"},
                             args.feature, args.plot)
        _info(f"rendered {args.plot}")
    return 0


# ---------------------------------------------------------------------------
# rank / verify
# ---------------------------------------------------------------------------

def cmd_rank(args) -> int:
    corpus = corpus_mod.parse_cascades(args.corpus)
    matrix = stats_mod.attribute_matrix(corpus)
    if matrix.skipped:
        _info(f"skipped {len(matrix.skipped)} cascades "
              f"(unlabeled or without profiled nodes)")
    ranking = stats_mod.rank_features(matrix.features, matrix.labels,
                                      names=matrix.names)
    for feature, cls in ranking.zeroed_terms:
        _info(f"zeroed term: feature {feature!r}, class {cls!r} "
              f"(scaled class mean below 1e-12)")
    out_rows = [[i + 1, name, repr(score)]
                for i, (name, score) in enumerate(ranking.entries)]
    _write_csv(args.out, ["rank", "feature", "chi2"], out_rows)
    _info(f"wrote feature ranking to {args.out}")
    if args.plot:
        from . import plotting
        plotting.plot_ranking(ranking, args.plot)
        _info(f"rendered {args.plot}")
    return 0


def cmd_verify(args) -> int:
    corpus = corpus_mod.parse_cascades(args.corpus)
    table = stats_mod.verification_ratios(corpus)
    out_rows = []
    for group in ("source", "participant"):
        for label in (Label.RUMOR.value, Label.NON_RUMOR.value):
            cell = table.cells[(group, label)]
            ratio = "" if cell.ratio is None else repr(cell.ratio)
            out_rows.append([group, label, ratio, cell.verified,
                             cell.profiled, cell.unprofiled])
    _write_csv(args.out, ["group", "label", "ratio", "verified", "profiled",
                          "unprofiled"], out_rows)
    _info(f"wrote verification ratios to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# simulate / generate / compare
# ---------------------------------------------------------------------------

def _write_corpus_with_meta(corpus, out: str, meta: dict) -> None:
    corpus_mod.write_cascades(corpus, out)
    meta_path = Path(out).with_name(Path(out).name + ".meta.json")
    with open(meta_path, "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _run_meanfield_job(job) -> corpus_mod.Cascade:
    config, index = job
    return sim_mod.run_meanfield(
        dataclasses.replace(config, seed=config.seed + index),
        cascade_id=f"run-{index}")


def _build_cee(args, cfg: dict[str, str]) -> sim_mod.CeeConfig:
    mode = _resolve(args, cfg, "cee", "off", str)
    beta = _resolve(args, cfg, "beta", 0.9, float)
    delta_s = _resolve(args, cfg, "delta_s", 1.0, float)
    return sim_mod.CeeConfig(mode=mode, beta=beta, delta_s=delta_s)


def cmd_simulate(args) -> int:
    cfg = _read_kv_config(args.config, SIMULATE_CONFIG_KEYS) if args.config else {}
    seed = _resolve(args, cfg, "seed", None, int)
    if seed is None:
        raise UsageError("simulate requires an explicit --seed")
    config = sim_mod.ScenarioConfig(
        kind=_resolve(args, cfg, "scenario", "homogeneous", str),
        n_users=_resolve(args, cfg, "n", 100, int),
        seed=seed,
        base_rate=_resolve(args, cfg, "rate", 0.5, float),
        power_law_exponent=_resolve(args, cfg, "power_law_exponent", 2.5, float),
        fanout=_resolve(args, cfg, "fanout", 3, int),
        active_rounds=_resolve(args, cfg, "active_rounds", 3, int),
        cee=_build_cee(args, cfg),
        max_size=_resolve(args, cfg, "max_size", None, int),
    )
    runs = _resolve(args, cfg, "runs", 1, int)
    if runs < 1:
        raise ValueError("runs must be >= 1")

    if args.jobs > 1:
        jobs = [(config, i) for i in range(runs)]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            cascades = list(pool.map(_run_meanfield_job, jobs, chunksize=8))
        result = corpus_mod.make_corpus(cascades)
    else:
        result = sim_mod.run_ensemble(config, runs)

    meta = {"command": "simulate", "runs": runs, "seed": seed,
            "config": dataclasses.asdict(config)}
    _write_corpus_with_meta(result, args.out, meta)
    sizes = [c.size for c in result]
    _info(f"simulated {runs} cascade(s), sizes {min(sizes)}-{max(sizes)} "
          f"(mean {sum(sizes) / len(sizes):.1f}), wrote {args.out}")
    return 0


def cmd_generate(args) -> int:
    cfg = _read_kv_config(args.config, GENERATE_CONFIG_KEYS) if args.config else {}
    seed = _resolve(args, cfg, "seed", None, int)
    if seed is None:
        raise UsageError("generate requires an explicit --seed")
    profiles = None
    profile_path = _resolve(args, cfg, "profiles", None, str)
    if profile_path:
        profiles = tuple(corpus_mod.read_profiles(profile_path).values())
    config = sim_mod.GenConfig(
        n_nodes=_resolve(args, cfg, "n", 100, int),
        seed=seed,
        score_mode=_resolve(args, cfg, "score", "degree", str),
        alpha=_resolve(args, cfg, "alpha", 1.0, float),
        gamma=_resolve(args, cfg, "gamma", 1.0, float),
        selection=_resolve(args, cfg, "select", "proportional", str),
        cee=_build_cee(args, cfg),
        profiles=profiles,
    )
    runs = _resolve(args, cfg, "runs", 1, int)
    result = sim_mod.run_ensemble(config, runs)
    meta = {"command": "generate", "runs": runs, "seed": seed,
            "config": {**dataclasses.asdict(config), "profiles": profile_path}}
    _write_corpus_with_meta(result, args.out, meta)
    _info(f"generated {runs} cascade(s) of {config.n_nodes} nodes, wrote {args.out}")
    return 0


def cmd_compare(args) -> int:
    corpus_a = corpus_mod.parse_cascades(args.a)
    corpus_b = corpus_mod.parse_cascades(args.b)
    statistics = tuple(s.strip() for s in args.stats.split(",") if s.strip())
    for statistic in statistics:
        if statistic not in mmd_mod.STATISTICS:
            raise ValueError(f"unknown statistic {statistic!r}; "
                             f"expected one of {mmd_mod.STATISTICS}")
    report = mmd_mod.compare_corpora(corpus_a, corpus_b, statistics, args.sigma)
    out_rows = [[name, repr(value), repr(sigma), report.n_a, report.n_b]
                for name, value, sigma in report.per_statistic]
    out_rows.append(["aggregate", repr(report.aggregate), repr(args.sigma),
                     report.n_a, report.n_b])
    _write_csv(args.out, ["statistic", "mmd2", "sigma", "n_a", "n_b"], out_rows)
    _info(f"aggregate MMD^2 = {report.aggregate:.6f} "
          f"({report.n_a} vs {report.n_b} cascades), wrote {args.out}")
    if args.plot:
        from . import plotting
        plotting.plot_mmd(report, args.plot)
        _info(f"rendered {args.plot}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class UsageError(Exception):
    """Bad command-line usage detected after argparse."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascadelab",
        description="Cascade analytics, distribution fitting, credibility-erosion "
                    "simulation, and MMD corpus comparison.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate, and join profiles")
    p.add_argument("--cascades", required=True, help="NDJSON cascade file")
    p.add_argument("--profiles", help="profile CSV to join onto nodes")
    p.add_argument("--out", required=True, help="validated NDJSON output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("metrics", help="per-cascade metric table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", default=",".join(DEFAULT_FEATURES),
                   help="comma-separated metric names")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ccdf", help="survival curve of one metric")
    p.add_argument("--metrics", required=True, help="CSV from the metrics command")
    p.add_argument("--feature", required=True)
    p.add_argument("--by-label", action="store_true")
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--plot", help="also render a figure to this path")
    p.add_argument("--log-x", action="store_true")
    p.add_argument("--log-y", action="store_true")
    p.set_defaults(func=cmd_ccdf)

    p = sub.add_parser("fit", help="distribution fitting and K-S test")
    p.add_argument("--metrics", required=True)
    p.add_argument("--feature", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--family", choices=stats_mod.FAMILIES)
    group.add_argument("--rank-all", action="store_true")
    p.add_argument("--ks", action="store_true", help="add K-S statistic and p-value")
    p.add_argument("--label", default="all",
                   choices=["all", "rumor", "non-rumor", "unlabeled"])
    p.add_argument("--out", required=True, help="JSON-records output")
    p.add_argument("--plot", help="also render a figure to this path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rank", help="chi-squared attribute-importance ranking")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--plot", help="also render a figure to this path")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("groups", help="per-label mean/median of one metric")
    p.add_argument("--metrics", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--plot", help="also render a figure to this path")
    p.set_defaults(func=cmd_groups)

    p = sub.add_parser("verify", help="verified-user ratios by group and label")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="mean-field propagation runs")
    p.add_argument("--scenario", choices=sim_mod.SCENARIOS)
    p.add_argument("--n", type=int, help="population size")
    p.add_argument("--rate", type=float, help="homogeneous infection rate")
    p.add_argument("--power-law-exponent", type=float)
    p.add_argument("--fanout", type=int)
    p.add_argument("--active-rounds", type=int)
    p.add_argument("--cee", choices=sim_mod.CEE_MODES)
    p.add_argument("--beta", type=float)
    p.add_argument("--delta-s", type=float)
    p.add_argument("--max-size", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat key=value config file; flags override")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="NDJSON output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="sequential attachment generation")
    p.add_argument("--n", type=int, help="nodes per cascade")
    p.add_argument("--score", choices=sim_mod.SCORE_MODES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--select", choices=sim_mod.SELECTIONS)
    p.add_argument("--cee", choices=sim_mod.CEE_MODES)
    p.add_argument("--beta", type=float)
    p.add_argument("--delta-s", type=float)
    p.add_argument("--profiles", help="profile CSV pool for attribute scoring")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat key=value config file; flags override")
    p.add_argument("--out", required=True, help="NDJSON output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compare", help="MMD between two cascade corpora")
    p.add_argument("--a", required=True, help="NDJSON corpus A")
    p.add_argument("--b", required=True, help="NDJSON corpus B")
    p.add_argument("--stats", default=",".join(mmd_mod.STATISTICS))
    p.add_argument("--sigma", type=float, default=mmd_mod.DEFAULT_SIGMA)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--plot", help="also render a figure to this path")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (CorpusError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
