"""Simulation regimes for benchmarking matchers, plus slope-grid tuning.

Three regimes: article-sampling (random target sets, no shared trait),
category-sampling (targets share one sampled category), and
attribute-specific (real target/candidate groups, SMD only). Every random
draw consumes a named sub-stream of the run seed, so adding or removing
methods never changes which articles are sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import Article, Corpus
from .errors import DataError
from .evaluate import EvaluationReport, SmdReport, evaluate_battery, smd_report
from .lda import LdaModel, train_lda
from .matchers import MatchConfig, MatchResult, greedy_match, DIRECT_METHODS
from .propensity import (
    TrainingMeta,
    discard_weak_propensity,
    greedy_match_propensity,
    train,
)
from .vectorize import IdfTable, PivotSlopeParams, build_idf, mean_category_count

# sub-stream purposes (second entry of the rng seed sequence)
_STREAM_TARGETS = 1
_STREAM_CATEGORY = 2
_STREAM_RANDOM_BASELINE = 3
_STREAM_DEV_ARTICLE = 4
_STREAM_DEV_CATEGORY = 5

RANDOM_BASELINE = "random"
NO_MATCHING = "no_matching"


@dataclass(frozen=True)
class LdaParams:
    n_topics: int = 100
    iterations: int = 200
    seed: int = 0
    alpha: float | None = None
    beta: float = 0.01


@dataclass(frozen=True)
class SimulationSpec:
    regime: str = "article_sampling"
    n_simulations: int = 100
    sample_size: int | None = None  # default: 1000 article / 500 category
    min_category_size: int = 500
    seed: int = 0
    methods: tuple[MatchConfig, ...] = ()
    include_random_baseline: bool = True
    prior_scale: float = 1000.0
    lda: LdaParams | None = None

    def resolved_sample_size(self) -> int:
        if self.sample_size is not None:
            return self.sample_size
        return 1000 if self.regime == "article_sampling" else 500

    def __post_init__(self):
        if self.n_simulations < 1:
            raise DataError("n_simulations must be >= 1")
        if self.regime not in ("article_sampling", "category_sampling", "attribute_specific"):
            raise DataError(f"unknown regime {self.regime!r}")


def method_label(cfg: MatchConfig) -> str:
    if cfg.method == "pivot_slope" and cfg.pivot_slope is not None:
        return f"pivot_slope@{cfg.pivot_slope.slope:g}"
    return cfg.method


def resolve_config(cfg: MatchConfig, union: Corpus, slope: float = 0.3) -> MatchConfig:
    """Fill a missing pivot with the union-corpus mean category count."""
    if cfg.method == "pivot_slope" and cfg.pivot_slope is None:
        return replace(
            cfg, pivot_slope=PivotSlopeParams(pivot=mean_category_count(union), slope=slope)
        )
    return cfg


def run_method(
    targets: Corpus,
    candidates: Corpus,
    cfg: MatchConfig,
    idf: IdfTable,
    *,
    apply_propensity_discard: bool = True,
) -> MatchResult:
    """Dispatch one matching method, returning its (possibly flagged) result."""
    if cfg.method in DIRECT_METHODS:
        return greedy_match(targets, candidates, cfg, idf)
    kind = "one_hot" if cfg.method == "propensity" else "tfidf"
    model = train(
        targets, candidates, kind=kind, hyper=TrainingMeta(),
        idf=idf, exclusions=cfg.excluded_category_patterns,
    )
    result, scores = greedy_match_propensity(targets, candidates, model, cfg)
    if apply_propensity_discard:
        result = discard_weak_propensity(result, scores)
    return result


@dataclass
class SimulationOutcome:
    regime: str
    seed: int
    aggregates: dict[str, dict[str, float]]
    per_sim: dict[str, list[EvaluationReport]]
    sampled_target_ids: list[list[str]]
    sampled_categories: list[str] = field(default_factory=list)


def _aggregate(reports: list[EvaluationReport]) -> dict[str, float | None]:
    out = {}
    for m in EvaluationReport.METRICS:
        vals = np.array([getattr(r, m) for r in reports], dtype=np.float64)
        if np.isnan(vals).all():  # metric absent for the whole run (e.g. no LDA)
            out[m] = None
            out[f"{m}_sd"] = None
        else:
            out[m] = float(vals.mean())
            out[f"{m}_sd"] = float(vals.std())  # population sd across simulations
    out["n_pairs"] = float(np.mean([r.n_pairs for r in reports]))
    return out


def _battery_for_result(
    targets_list: list[Article],
    result: MatchResult,
    candidates: Corpus,
    spec: SimulationSpec,
    lda_model: LdaModel | None,
    exclude_exact=(),
) -> EvaluationReport:
    comparisons = [candidates[p.comparison_id] for p in result.matched_pairs()]
    if not comparisons:
        raise DataError("matching produced no usable pairs to evaluate")
    return evaluate_battery(
        targets_list,
        comparisons,
        exclude_exact=exclude_exact,
        prior_scale=spec.prior_scale,
        lda_model=lda_model,
    )


def _maybe_train_lda(corpus: Corpus, spec: SimulationSpec) -> LdaModel | None:
    if spec.lda is None:
        return None
    return train_lda(
        corpus,
        n_topics=spec.lda.n_topics,
        seed=spec.lda.seed,
        iterations=spec.lda.iterations,
        alpha=spec.lda.alpha,
        beta=spec.lda.beta,
    )


def run_article_sampling(corpus: Corpus, spec: SimulationSpec) -> SimulationOutcome:
    """Random 1000-article target sets vs the rest, averaged over simulations."""
    size = spec.resolved_sample_size()
    if len(corpus) < 2 * size:
        raise DataError(
            f"corpus too small for article sampling: {len(corpus)} < 2*{size}"
        )
    lda_model = _maybe_train_lda(corpus, spec)
    all_arts = list(corpus)
    per_sim: dict[str, list[EvaluationReport]] = {}
    sampled_ids: list[list[str]] = []

    for s in range(spec.n_simulations):
        rng = np.random.default_rng([spec.seed, _STREAM_TARGETS, s])
        pick = rng.choice(len(all_arts), size=size, replace=False)
        mask = np.zeros(len(all_arts), dtype=bool)
        mask[pick] = True
        targets_list = [all_arts[i] for i in sorted(pick)]
        targets = Corpus(targets_list)
        candidates = Corpus([a for a, m in zip(all_arts, mask) if not m])
        sampled_ids.append(targets.ids())
        idf = build_idf(corpus)  # union of targets and candidates

        for cfg in spec.methods:
            cfg = resolve_config(cfg, corpus)
            result = run_method(targets, candidates, cfg, idf)
            rep = _battery_for_result(targets_list, result, candidates, spec, lda_model)
            per_sim.setdefault(method_label(cfg), []).append(rep)

        if spec.include_random_baseline:
            rng_b = np.random.default_rng([spec.seed, _STREAM_RANDOM_BASELINE, s])
            pick_b = rng_b.choice(len(candidates), size=len(targets_list), replace=False)
            cand_arts = list(candidates)
            comparisons = [cand_arts[i] for i in pick_b]
            rep = evaluate_battery(
                targets_list, comparisons,
                prior_scale=spec.prior_scale, lda_model=lda_model,
            )
            per_sim.setdefault(RANDOM_BASELINE, []).append(rep)

    aggregates = {label: _aggregate(reps) for label, reps in per_sim.items()}
    return SimulationOutcome(
        regime="article_sampling",
        seed=spec.seed,
        aggregates=aggregates,
        per_sim=per_sim,
        sampled_target_ids=sampled_ids,
    )


def qualifying_categories(corpus: Corpus, min_size: int) -> list[str]:
    counts: dict[str, int] = {}
    for a in corpus:
        for c in a.categories:
            counts[c] = counts.get(c, 0) + 1
    return sorted(c for c, n in counts.items() if n >= min_size)


def run_category_sampling(corpus: Corpus, spec: SimulationSpec) -> SimulationOutcome:
    """Targets drawn from one sampled category; candidates are all outsiders.

    The sampled category itself is excluded from the SMD universe, since it
    is one-sided by construction.
    """
    size = spec.resolved_sample_size()
    min_size = max(spec.min_category_size, size)
    quals = qualifying_categories(corpus, min_size)
    if not quals:
        raise DataError(
            f"no category with at least {min_size} members to sample from"
        )
    lda_model = _maybe_train_lda(corpus, spec)
    per_sim: dict[str, list[EvaluationReport]] = {}
    sampled_ids: list[list[str]] = []
    sampled_cats: list[str] = []

    for s in range(spec.n_simulations):
        rng_c = np.random.default_rng([spec.seed, _STREAM_CATEGORY, s])
        cat = quals[int(rng_c.integers(len(quals)))]
        sampled_cats.append(cat)
        members = [a for a in corpus if cat in a.categories]
        outsiders = [a for a in corpus if cat not in a.categories]
        if not outsiders:
            raise DataError(f"category {cat!r} covers the whole corpus")

        rng_t = np.random.default_rng([spec.seed, _STREAM_TARGETS, s])
        pick = rng_t.choice(len(members), size=size, replace=False)
        targets_list = [members[i] for i in sorted(pick)]
        targets = Corpus(targets_list)
        candidates = Corpus(outsiders)
        sampled_ids.append(targets.ids())
        idf = build_idf(Corpus(targets_list + outsiders))

        for cfg in spec.methods:
            cfg = resolve_config(cfg, corpus)
            result = run_method(targets, candidates, cfg, idf)
            rep = _battery_for_result(
                targets_list, result, candidates, spec, lda_model, exclude_exact={cat}
            )
            per_sim.setdefault(method_label(cfg), []).append(rep)

        if spec.include_random_baseline:
            rng_b = np.random.default_rng([spec.seed, _STREAM_RANDOM_BASELINE, s])
            pick_b = rng_b.choice(len(outsiders), size=len(targets_list), replace=False)
            comparisons = [outsiders[i] for i in pick_b]
            rep = evaluate_battery(
                targets_list, comparisons, exclude_exact={cat},
                prior_scale=spec.prior_scale, lda_model=lda_model,
            )
            per_sim.setdefault(RANDOM_BASELINE, []).append(rep)

    aggregates = {label: _aggregate(reps) for label, reps in per_sim.items()}
    return SimulationOutcome(
        regime="category_sampling",
        seed=spec.seed,
        aggregates=aggregates,
        per_sim=per_sim,
        sampled_target_ids=sampled_ids,
        sampled_categories=sampled_cats,
    )


@dataclass(frozen=True)
class AttributeMethodReport:
    label: str
    smd_all: SmdReport
    smd_kept: SmdReport | None
    n_pairs: int
    n_discarded: int


def run_attribute_specific(
    targets: Corpus,
    candidates: Corpus,
    methods,
    exclusions=(),
    *,
    include_no_matching: bool = True,
) -> dict[str, AttributeMethodReport]:
    """Covariate balance for real attribute groups, with and without weak-match
    discarding, plus the unmatched-pool baseline."""
    if len(targets) == 0 or len(candidates) == 0:
        raise DataError("both groups must be non-empty")
    union = Corpus(list(targets) + list(candidates))
    idf = build_idf(union)
    targets_list = list(targets)
    out: dict[str, AttributeMethodReport] = {}

    if include_no_matching:
        rep = smd_report(targets_list, list(candidates), exclusions)
        out[NO_MATCHING] = AttributeMethodReport(
            label=NO_MATCHING, smd_all=rep, smd_kept=rep,
            n_pairs=len(candidates), n_discarded=0,
        )

    for cfg in methods:
        cfg = resolve_config(cfg, union)
        if exclusions:
            cfg = replace(cfg, excluded_category_patterns=tuple(exclusions))
        result = run_method(targets, candidates, cfg, idf)
        matched = result.matched_pairs()
        kept = result.kept_pairs()
        smd_all = smd_report(
            targets_list, [candidates[p.comparison_id] for p in matched], exclusions
        )
        smd_kept = None
        if kept:
            smd_kept = smd_report(
                targets_list, [candidates[p.comparison_id] for p in kept], exclusions
            )
        out[method_label(cfg)] = AttributeMethodReport(
            label=method_label(cfg),
            smd_all=smd_all,
            smd_kept=smd_kept,
            n_pairs=len(matched),
            n_discarded=len(result.pairs) - len(kept),
        )
    return out


@dataclass(frozen=True)
class TuneSpec:
    article_sample_size: int = 1000
    n_category_samples: int = 10
    category_sample_size: int = 500
    min_category_size: int = 500
    seed: int = 0
    pivot: float | None = None  # default: corpus mean category count
    max_reuse: int = 10
    min_shared_categories: int = 2
    prior_scale: float = 1000.0
    lda: LdaParams | None = None


# metrics entering the tuning objective; signed SMDs enter as magnitudes
_OBJECTIVE_METRICS = (
    "avg_smd", "pct_smd_gt_01", "cat_count_smd", "text_len_smd",
    "plo_mean", "kl_tc", "kl_ct",
)


@dataclass
class TuneResult:
    best_slope: float
    grid_report: list[dict[str, float]]
    tuning_ids: set[str]


def tune_slope(corpus: Corpus, dev_spec: TuneSpec, grid) -> TuneResult:
    """Pick the slope minimizing the normalized metric battery on dev sets.

    The development sets (one random article sample, plus targets from
    sampled categories) are drawn once and reused for every slope, so the
    grid varies only the normalization. The objective is the unweighted
    mean of min-max-normalized metric values across the grid; ties go to
    the smaller slope. Articles used for tuning are returned so callers
    can exclude them from later evaluation.
    """
    grid = sorted(set(float(s) for s in grid))
    if not grid:
        raise DataError("slope grid must be non-empty")
    pivot = dev_spec.pivot if dev_spec.pivot is not None else mean_category_count(corpus)
    lda_model = (
        None
        if dev_spec.lda is None
        else train_lda(
            corpus,
            n_topics=dev_spec.lda.n_topics,
            seed=dev_spec.lda.seed,
            iterations=dev_spec.lda.iterations,
            alpha=dev_spec.lda.alpha,
            beta=dev_spec.lda.beta,
        )
    )

    all_arts = list(corpus)
    if len(corpus) < 2 * dev_spec.article_sample_size:
        raise DataError("corpus too small for the article-sampling dev set")
    rng_a = np.random.default_rng([dev_spec.seed, _STREAM_DEV_ARTICLE, 0])
    pick = rng_a.choice(len(all_arts), size=dev_spec.article_sample_size, replace=False)
    mask = np.zeros(len(all_arts), dtype=bool)
    mask[pick] = True
    dev_runs = [
        (
            [all_arts[i] for i in sorted(pick)],
            [a for a, m in zip(all_arts, mask) if not m],
            None,
        )
    ]

    min_size = max(dev_spec.min_category_size, dev_spec.category_sample_size)
    quals = qualifying_categories(corpus, min_size)
    if not quals:
        raise DataError(f"no category with at least {min_size} members for dev sampling")
    for s in range(dev_spec.n_category_samples):
        rng_c = np.random.default_rng([dev_spec.seed, _STREAM_DEV_CATEGORY, s])
        cat = quals[int(rng_c.integers(len(quals)))]
        members = [a for a in corpus if cat in a.categories]
        outsiders = [a for a in corpus if cat not in a.categories]
        pick_m = rng_c.choice(len(members), size=dev_spec.category_sample_size, replace=False)
        dev_runs.append(([members[i] for i in sorted(pick_m)], outsiders, cat))

    tuning_ids = {a.id for run in dev_runs for a in run[0]}

    rows = []
    for slope in grid:
        cfg = MatchConfig(
            method="pivot_slope",
            pivot_slope=PivotSlopeParams(pivot=pivot, slope=slope),
            max_reuse=dev_spec.max_reuse,
            min_shared_categories=dev_spec.min_shared_categories,
        )
        metric_acc: dict[str, list[float]] = {m: [] for m in _OBJECTIVE_METRICS}
        for targets_list, cand_list, cat in dev_runs:
            targets = Corpus(targets_list)
            candidates = Corpus(cand_list)
            idf = build_idf(Corpus(targets_list + cand_list))
            result = greedy_match(targets, candidates, cfg, idf)
            comparisons = [candidates[p.comparison_id] for p in result.matched_pairs()]
            rep = evaluate_battery(
                targets_list, comparisons,
                exclude_exact={cat} if cat else (),
                prior_scale=dev_spec.prior_scale,
                lda_model=lda_model,
            )
            for m in _OBJECTIVE_METRICS:
                v = getattr(rep, m)
                if m in ("cat_count_smd", "text_len_smd"):
                    v = abs(v)
                if not math.isnan(v):
                    metric_acc[m].append(v)
        row = {"slope": slope}
        for m in _OBJECTIVE_METRICS:
            row[m] = float(np.mean(metric_acc[m])) if metric_acc[m] else math.nan
        rows.append(row)

    # min-max normalize each metric across the grid, then average
    for m in _OBJECTIVE_METRICS:
        vals = [r[m] for r in rows if not math.isnan(r[m])]
        if not vals:
            continue
        lo, hi = min(vals), max(vals)
        for r in rows:
            if math.isnan(r[m]):
                continue
            r[f"{m}_norm"] = 0.0 if hi == lo else (r[m] - lo) / (hi - lo)
    for r in rows:
        norms = [v for k, v in r.items() if k.endswith("_norm")]
        r["objective"] = float(np.mean(norms)) if norms else math.nan

    best = min(rows, key=lambda r: (r["objective"], r["slope"]))
    return TuneResult(best_slope=best["slope"], grid_report=rows, tuning_ids=tuning_ids)
