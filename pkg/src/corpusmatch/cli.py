"""Command-line entry point.

Every subcommand reads one JSON config file (plus a few flag overrides),
derives all randomness from the single recorded seed, and writes its
artifacts under the configured output directory. Artifacts embed the
config hash and seed and contain no timestamps, so a rerun with the same
config is byte-identical. Exit codes: 0 ok, 2 config error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import analyze as analyze_mod
from . import corpus as corpus_mod
from . import groups as groups_mod
from . import simulate as simulate_mod
from .errors import ConfigError, CorpusMatchError, DataError, NumericError
from .evaluate import evaluate_battery
from .matchers import MatchConfig, read_match_result, write_match_result
from .lda import train_lda
from .simulate import (
    LdaParams,
    SimulationSpec,
    TuneSpec,
    method_label,
    resolve_config,
    run_method,
    tune_slope,
)
from .vectorize import PivotSlopeParams, build_idf, export_matrix

DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(11))


def _json_default(o):
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class Runtime:
    """Effective config plus the derived hash/seed carried into artifacts."""

    def __init__(self, cfg: dict, command: str):
        self.cfg = cfg
        self.command = command
        self.seed = int(cfg.get("seed", 0))
        self.hash = config_hash(cfg)
        self.output_dir = cfg.get("output_dir")

    def meta(self) -> dict:
        return {"config_hash": self.hash, "seed": self.seed, "command": self.command}

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_json(self, name: str, payload: dict) -> str:
        p = self.path(name)
        doc = {"meta": self.meta()}
        doc.update(payload)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2, default=_json_default)
            fh.write("\n")
        return p

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> str:
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# config_hash={self.hash} seed={self.seed}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_csv_cell(v) for v in row) + "\n")
        return p


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.10g}"
    return str(v)


def load_config(path: str) -> dict:
    if not path:
        raise ConfigError(["--config is required"])
    if not os.path.exists(path):
        raise ConfigError([f"config file not found: {path}"])
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])
    if not isinstance(cfg, dict):
        raise ConfigError(["config root must be a JSON object"])
    return cfg


def validate(cfg: dict, required: list[str], file_keys: list[str]) -> None:
    """Collect every problem before failing."""
    problems = []
    for key in required:
        if key not in cfg or cfg[key] in (None, ""):
            problems.append(f"missing required config key: {key!r}")
    for key in file_keys:
        p = cfg.get(key)
        if p and not os.path.exists(p):
            problems.append(f"{key!r} points to a missing file: {p}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        problems.append(f"'seed' must be an integer, got {seed!r}")
    if problems:
        raise ConfigError(problems)


def _policy_from(cfg: dict) -> corpus_mod.FilterPolicy:
    d = cfg.get("filter_policy", {})
    return corpus_mod.FilterPolicy(
        min_categories=d.get("min_categories", 2),
        min_tokens=d.get("min_tokens", 100),
        stub_category_patterns=tuple(d.get("stub_category_patterns", ("stubs",))),
        category_drop_patterns=tuple(d.get("category_drop_patterns", ("Pages with",))),
    )


def _load_corpus(cfg: dict, key: str = "corpus") -> corpus_mod.Corpus:
    return corpus_mod.ingest(cfg[key], _policy_from(cfg))


def _match_config_from(d: dict) -> MatchConfig:
    ps = None
    if d.get("pivot") is not None or d.get("slope") is not None:
        if d.get("pivot") is not None:
            ps = PivotSlopeParams(pivot=float(d["pivot"]), slope=float(d.get("slope", 0.3)))
        # slope without pivot: pivot resolved later from corpus mean
    return MatchConfig(
        method=d.get("method", "pivot_slope"),
        pivot_slope=ps,
        max_reuse=int(d.get("max_reuse", 10)),
        min_shared_categories=int(d.get("min_shared_categories", 2)),
        excluded_category_patterns=tuple(d.get("excluded_category_patterns", ())),
    )


def _lda_params_from(d: dict | None) -> LdaParams | None:
    if not d:
        return None
    return LdaParams(
        n_topics=int(d.get("n_topics", 100)),
        iterations=int(d.get("iterations", 200)),
        seed=int(d.get("seed", 0)),
        alpha=d.get("alpha"),
        beta=float(d.get("beta", 0.01)),
    )


def _select_groups(cfg: dict, corpus):
    """Resolve (targets, pool) either from explicit files or group rules."""
    if cfg.get("targets_file") and cfg.get("candidates_file"):
        targets = _load_corpus(cfg, "targets_file")
        pool = _load_corpus(cfg, "candidates_file")
        return targets, pool
    rules = groups_mod.load_rules(cfg["groups_file"])
    by_name = {r.name: r for r in rules}
    t_name, p_name = cfg.get("target_group"), cfg.get("pool")
    problems = []
    if t_name not in by_name:
        problems.append(f"'target_group' {t_name!r} not defined in groups_file")
    if p_name not in by_name:
        problems.append(f"'pool' {p_name!r} not defined in groups_file")
    if problems:
        raise ConfigError(problems)
    assignment = groups_mod.tag_by_rules(corpus, rules)
    target_ids = assignment.members(t_name)
    if not target_ids:
        raise DataError(f"target group {t_name!r} matched no articles")
    targets = corpus.subset(target_ids)
    pool_rs = by_name[p_name]
    if pool_rs.comparison_pool_rules is not None:
        pool = groups_mod.build_comparison_pool(corpus, pool_rs, assignment)
    else:
        pool_ids = assignment.members(p_name) - target_ids
        if not pool_ids:
            raise DataError(f"pool {p_name!r} is empty after removing target members")
        pool = corpus.subset(pool_ids)
    return targets, pool


# ---------------------------------------------------------------- commands


def cmd_ingest(rt: Runtime) -> int:
    validate(rt.cfg, ["corpus", "output_dir"], ["corpus"])
    c = _load_corpus(rt.cfg)
    out = rt.path("corpus_filtered.jsonl")
    corpus_mod.save_corpus(c, out)
    summary = corpus_mod.corpus_summary(c)
    rt.write_json(
        "ingest_summary.json",
        {"source_meta": c.source_meta, "summary": dataclasses.asdict(summary)},
    )
    return 0


def cmd_export_matrix(rt: Runtime) -> int:
    validate(rt.cfg, ["corpus", "output_dir"], ["corpus"])
    c = _load_corpus(rt.cfg)
    idf = build_idf(c)
    out = rt.path("tfidf_matrix.tsv")
    export_matrix(c, idf, out)
    rt.write_json("tfidf_matrix.meta.json", {"rows": len(c)})
    return 0


def cmd_match(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "output_dir"], ["corpus", "groups_file", "targets_file", "candidates_file"])
    if not (cfg.get("targets_file") and cfg.get("candidates_file")) and not cfg.get("groups_file"):
        raise ConfigError(
            ["either 'targets_file'+'candidates_file' or 'groups_file'+'target_group'+'pool' is required"]
        )
    c = _load_corpus(cfg)
    targets, pool = _select_groups(cfg, c)
    union = corpus_mod.Corpus(list(targets) + list(pool))
    idf = build_idf(union)
    mcfg = resolve_config(
        _match_config_from(cfg.get("match", {})), union,
        slope=float(cfg.get("match", {}).get("slope", 0.3)),
    )
    result = run_method(targets, pool, mcfg, idf)
    write_match_result(result, rt.path("matches.jsonl"))
    n_kept = len(result.kept_pairs())
    rt.write_json(
        "match_summary.json",
        {
            "method": method_label(mcfg),
            "n_targets": len(targets),
            "n_pool": len(pool),
            "n_pairs": len(result.pairs),
            "n_kept": n_kept,
            "n_discarded": len(result.pairs) - n_kept,
        },
    )
    return 0


def cmd_evaluate(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "matches", "output_dir"], ["corpus", "matches"])
    c = _load_corpus(cfg)
    result = read_match_result(cfg["matches"])
    kept_only = bool(cfg.get("evaluate", {}).get("kept_only", False))
    pairs = result.kept_pairs() if kept_only else result.matched_pairs()
    pairs = [p for p in pairs if p.comparison_id is not None]
    if not pairs:
        raise DataError("match result contains no usable pairs")
    targets = [c[p.target_id] for p in pairs]
    comparisons = [c[p.comparison_id] for p in pairs]
    lda_params = _lda_params_from(cfg.get("evaluate", {}).get("lda"))
    lda_model = None
    if lda_params is not None:
        lda_model = train_lda(
            c, n_topics=lda_params.n_topics, seed=lda_params.seed,
            iterations=lda_params.iterations, alpha=lda_params.alpha, beta=lda_params.beta,
        )
    rep = evaluate_battery(
        targets, comparisons,
        exclusions=tuple(cfg.get("evaluate", {}).get("exclusions", ())),
        prior_scale=float(cfg.get("prior_scale", 1000.0)),
        lda_model=lda_model,
    )
    rt.write_json("evaluation.json", {"report": rep.to_dict()})
    rows = sorted(
        rep.per_category_smd.items(), key=lambda kv: (-kv[1], kv[0])
    )
    rt.write_csv("per_category_smd.csv", ["category", "smd"], [[k, v] for k, v in rows])
    return 0


def cmd_simulate(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "output_dir", "simulation"], ["corpus"])
    c = _load_corpus(cfg)
    sim = cfg["simulation"]
    methods = tuple(_match_config_from(d) for d in sim.get("methods", []))
    if not methods:
        raise ConfigError(["'simulation.methods' must list at least one method"])
    spec = SimulationSpec(
        regime=sim.get("regime", "article_sampling"),
        n_simulations=int(sim.get("n_simulations", 100)),
        sample_size=sim.get("sample_size"),
        min_category_size=int(sim.get("min_category_size", 500)),
        seed=rt.seed,
        methods=methods,
        include_random_baseline=bool(sim.get("include_random_baseline", True)),
        prior_scale=float(cfg.get("prior_scale", 1000.0)),
        lda=_lda_params_from(sim.get("lda")),
    )
    if spec.regime == "article_sampling":
        outcome = simulate_mod.run_article_sampling(c, spec)
    elif spec.regime == "category_sampling":
        outcome = simulate_mod.run_category_sampling(c, spec)
    else:
        raise ConfigError(
            ["'simulation.regime' must be article_sampling or category_sampling here; "
             "attribute-specific runs go through the analyze command"]
        )

    metrics = list(outcome.aggregates[next(iter(outcome.aggregates))].keys())
    labels = sorted(outcome.aggregates)
    rows = [[label] + [outcome.aggregates[label][m] for m in metrics] for label in labels]
    rt.write_csv(f"simulation_{spec.regime}.csv", ["method"] + metrics, rows)
    rt.write_json(
        f"simulation_{spec.regime}.json",
        {"regime": spec.regime, "aggregates": outcome.aggregates,
         "sampled_categories": outcome.sampled_categories},
    )
    return 0


def cmd_tune_slope(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "output_dir"], ["corpus"])
    c = _load_corpus(cfg)
    t = cfg.get("tune", {})
    spec = TuneSpec(
        article_sample_size=int(t.get("article_sample_size", 1000)),
        n_category_samples=int(t.get("n_category_samples", 10)),
        category_sample_size=int(t.get("category_sample_size", 500)),
        min_category_size=int(t.get("min_category_size", 500)),
        seed=rt.seed,
        pivot=t.get("pivot"),
        max_reuse=int(t.get("max_reuse", 10)),
        min_shared_categories=int(t.get("min_shared_categories", 2)),
        prior_scale=float(cfg.get("prior_scale", 1000.0)),
        lda=_lda_params_from(t.get("lda")),
    )
    grid = t.get("grid", list(DEFAULT_GRID))
    result = tune_slope(c, spec, grid)
    cols = sorted({k for row in result.grid_report for k in row})
    cols = ["slope"] + [k for k in cols if k != "slope"]
    rows = [[row.get(k) for k in cols] for row in sorted(result.grid_report, key=lambda r: r["slope"])]
    rt.write_csv("slope_grid.csv", cols, rows)
    rt.write_json(
        "best_slope.json",
        {"best_slope": result.best_slope, "n_tuning_articles": len(result.tuning_ids)},
    )
    with open(rt.path("tuning_ids.txt"), "w", encoding="utf-8", newline="\n") as fh:
        for aid in sorted(result.tuning_ids):
            fh.write(aid + "\n")
    return 0


def cmd_analyze(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "groups_file", "output_dir", "analysis"], ["corpus", "groups_file"])
    c = _load_corpus(cfg)
    rules = groups_mod.load_rules(cfg["groups_file"])
    ana = cfg["analysis"]
    pairings = [
        analyze_mod.AnalysisPairing(target=p["target"], pool=p["pool"])
        for p in ana.get("pairings", [])
    ]
    if not pairings:
        raise ConfigError(["'analysis.pairings' must list at least one {target, pool} pair"])
    mcfg = _match_config_from(cfg.get("match", {}))
    reports = analyze_mod.run_analysis(
        c, rules, pairings, mcfg,
        alpha=float(ana.get("alpha", 0.05)),
        languages=tuple(ana.get("languages", analyze_mod.DEFAULT_LANGUAGES)),
        sections=tuple(ana.get("sections", analyze_mod.DEFAULT_SECTIONS)),
        word_table_k=int(ana.get("word_table_k", 25)),
        prior_scale=float(cfg.get("prior_scale", 1000.0)),
    )
    for rep in reports:
        stem = f"{rep.group}__{rep.comparison}"
        rt.write_json(f"analysis_{stem}.json", {"report": dataclasses.asdict(rep)})
        rt.write_csv(
            f"{stem}__rows.csv",
            ["metric", "target_mean", "comparison_mean", "statistic", "p", "corrected_p", "significant"],
            [
                [r.metric, r.target_mean, r.comparison_mean, r.test.statistic,
                 r.test.p_value, r.corrected_p, r.significant]
                for r in rep.rows
            ],
        )
        rt.write_csv(
            f"{stem}__languages.csv",
            ["language", "target_available", "comparison_available", "b", "c",
             "availability_p", "availability_corrected_p", "availability_significant",
             "more_available", "n_both", "target_mean_length", "comparison_mean_length",
             "length_p", "length_corrected_p", "length_significant"],
            [
                [r.language, r.target_available, r.comparison_available, r.b, r.c,
                 r.availability.p_value, r.availability_corrected_p, r.availability_significant,
                 r.more_available, r.n_both, r.target_mean_length, r.comparison_mean_length,
                 r.length_test.p_value if r.length_test else None,
                 r.length_corrected_p, r.length_significant]
                for r in rep.per_language
            ],
        )
        rt.write_csv(
            f"{stem}__words.csv",
            ["side", "word", "z"],
            [["target", w, z] for w, z in rep.word_table.target_words]
            + [["comparison", w, z] for w, z in rep.word_table.comparison_words],
        )
    return 0


def cmd_log_odds(rt: Runtime) -> int:
    cfg = rt.cfg
    validate(cfg, ["corpus", "output_dir"], ["corpus", "groups_file", "matches"])
    c = _load_corpus(cfg)
    k = int(cfg.get("log_odds", {}).get("k", 25))
    if cfg.get("matches"):
        result = read_match_result(cfg["matches"])
        pairs = [p for p in result.kept_pairs() if p.comparison_id is not None]
        table = analyze_mod.word_table(pairs, c, k, float(cfg.get("prior_scale", 1000.0)))
    else:
        # unmatched contrast: target text vs the whole pool
        targets, pool = _select_groups(cfg, c)
        from .evaluate import fold_counts, polar_log_odds

        plo = polar_log_odds(
            fold_counts(list(targets)), fold_counts(list(pool)),
            float(cfg.get("prior_scale", 1000.0)),
        )
        pos = sorted(((w, z) for w, z in plo.z.items() if z > 0), key=lambda it: (-it[1], it[0]))
        neg = sorted(((w, z) for w, z in plo.z.items() if z < 0), key=lambda it: (it[1], it[0]))
        table = analyze_mod.WordTable(target_words=pos[:k], comparison_words=neg[:k])
    rt.write_csv(
        "log_odds.csv",
        ["side", "word", "z"],
        [["target", w, z] for w, z in table.target_words]
        + [["comparison", w, z] for w, z in table.comparison_words],
    )
    return 0


_COMMANDS = {
    "ingest": (cmd_ingest, "Read, validate, and filter a corpus file.",
               "Config keys: corpus, output_dir, filter_policy{min_categories,min_tokens,"
               "stub_category_patterns,category_drop_patterns}, seed."),
    "match": (cmd_match, "Build a matched comparison corpus for a target group.",
              "Config keys: corpus, output_dir, seed, filter_policy, match{method,slope,pivot,"
              "max_reuse,min_shared_categories,excluded_category_patterns}, and either "
              "targets_file+candidates_file or groups_file+target_group+pool."),
    "tune-slope": (cmd_tune_slope, "Grid-search the pivoted-normalization slope on dev samples.",
                   "Config keys: corpus, output_dir, seed, filter_policy, tune{grid,"
                   "article_sample_size,n_category_samples,category_sample_size,"
                   "min_category_size,pivot,max_reuse,min_shared_categories,lda}, prior_scale."),
    "evaluate": (cmd_evaluate, "Run the match-quality metric battery over a match result.",
                 "Config keys: corpus, matches, output_dir, seed, filter_policy, prior_scale, "
                 "evaluate{kept_only,exclusions,lda{n_topics,iterations,seed,alpha,beta}}."),
    "simulate": (cmd_simulate, "Run article- or category-sampling simulations over methods.",
                 "Config keys: corpus, output_dir, seed, filter_policy, prior_scale, "
                 "simulation{regime,n_simulations,sample_size,min_category_size,methods,"
                 "include_random_baseline,lda}."),
    "analyze": (cmd_analyze, "Full pipeline: tag groups, match, and produce analysis tables.",
                "Config keys: corpus, groups_file, output_dir, seed, filter_policy, match{...}, "
                "prior_scale, analysis{pairings,alpha,languages,sections,word_table_k}."),
    "log-odds": (cmd_log_odds, "Emit the polar word table for a pairing or match result.",
                 "Config keys: corpus, output_dir, seed, filter_policy, prior_scale, "
                 "log_odds{k}, and either matches or groups_file+target_group+pool."),
    "export-matrix": (cmd_export_matrix, "Export the weighted category matrix for external tools.",
                      "Config keys: corpus, output_dir, seed, filter_policy."),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpusmatch",
        description="Attribute-controlled comparison corpora with matching diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, keys) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=keys)
        p.add_argument("--config", required=True, help="Path to the JSON run config.")
        p.add_argument("--seed", type=int, default=None, help="Override config seed.")
        p.add_argument("--output-dir", default=None, help="Override config output_dir.")
        p.add_argument("--corpus", default=None, help="Override config corpus path.")
        p.add_argument(
            "--threads", type=int, default=1,
            help="Worker count; outputs are identical for any value (affects wall-clock only).",
        )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.output_dir is not None:
            cfg["output_dir"] = args.output_dir
        if args.corpus is not None:
            cfg["corpus"] = args.corpus
        rt = Runtime(cfg, args.command)
        if not rt.output_dir:
            raise ConfigError(["missing required config key: 'output_dir'"])
        os.makedirs(rt.output_dir, exist_ok=True)
        return _COMMANDS[args.command][0](rt)
    except ConfigError as exc:
        _emit_error("config", exc.problems)
        return 2
    except DataError as exc:
        _emit_error("data", [str(exc)])
        return 3
    except NumericError as exc:
        _emit_error("numeric", [str(exc)])
        return 4
    except CorpusMatchError as exc:  # any other package failure counts as data
        _emit_error("data", [str(exc)])
        return 3


def _emit_error(kind: str, problems: list[str]) -> None:
    sys.stderr.write(json.dumps({"error": kind, "problems": problems}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
