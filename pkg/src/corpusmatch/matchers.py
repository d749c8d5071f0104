"""Direct matching methods and the greedy construction loop.

Four direct scorers are implemented: shared-category count, candidate-
normalized percent, TF-IDF cosine, and pivoted TF-IDF. Comparison corpora
are built greedily with replacement: targets are visited in ascending id,
each takes the best-scoring candidate that still has reuse budget, and the
pair is flagged as a weak match when too few categories are shared.

Selection is fully deterministic. Ties break on higher shared-category
count, then ascending candidate id. A candidate may serve at most
`max_reuse` targets; every selection consumes budget whether or not the
pair is later flagged weak, so flags never alter the constructed corpus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .corpus import Article, Corpus
from .errors import DataError
from .vectorize import IdfTable, PivotSlopeParams, SparseVector, pivoted_norm

DIRECT_METHODS = ("number", "percent", "tfidf", "pivot_slope")
PROPENSITY_METHODS = ("propensity", "tfidf_propensity")

REASON_WEAK = "weak_match"
REASON_NO_CATEGORIES = "no_categories"
REASON_POOL_EXHAUSTED = "pool_exhausted"
REASON_WEAK_PROPENSITY = "weak_propensity"


@dataclass(frozen=True)
class MatchConfig:
    method: str = "pivot_slope"
    pivot_slope: PivotSlopeParams | None = None
    max_reuse: int = 10
    min_shared_categories: int = 2
    excluded_category_patterns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.method not in DIRECT_METHODS + PROPENSITY_METHODS:
            raise DataError(f"unknown matching method: {self.method!r}")
        if self.max_reuse < 1:
            raise DataError("max_reuse must be >= 1")
        if self.min_shared_categories < 0:
            raise DataError("min_shared_categories must be >= 0")


@dataclass(frozen=True)
class MatchedPair:
    target_id: str
    comparison_id: str | None
    score: float
    shared_categories: int
    discarded: bool
    reason: str | None = None


@dataclass
class MatchResult:
    pairs: list[MatchedPair]
    config: MatchConfig

    def kept_pairs(self) -> list[MatchedPair]:
        return [p for p in self.pairs if not p.discarded]

    def matched_pairs(self) -> list[MatchedPair]:
        """All pairs with an actual comparison article, weak or not."""
        return [p for p in self.pairs if p.comparison_id is not None]

    def comparison_ids(self, kept_only: bool = False) -> list[str]:
        pairs = self.kept_pairs() if kept_only else self.matched_pairs()
        return [p.comparison_id for p in pairs]


def apply_exclusions(a: Article, patterns) -> frozenset[str]:
    """Category set minus categories matching any case-insensitive substring pattern."""
    if not patterns:
        return a.categories
    pats = [p.lower() for p in patterns]
    return frozenset(
        c for c in a.categories if not any(p in c.lower() for p in pats)
    )


def score_number(t: Article, c: Article) -> float:
    return float(len(t.categories & c.categories))


def score_percent(t: Article, c: Article) -> float:
    if not c.categories:
        return 0.0
    return len(t.categories & c.categories) / len(c.categories)


def _idf_norm(categories, idf: IdfTable) -> float:
    # summed in sorted-category order so equal sets give bitwise-equal norms
    return math.sqrt(sum(idf.idf_of(c) ** 2 for c in sorted(categories)))


def score_tfidf(t_vec: SparseVector, c: Article, idf: IdfTable) -> float:
    """Cosine similarity of the two TF-IDF vectors.

    The per-article tf scalar cancels, so this reduces to the shared idf^2
    mass over the product of idf-pattern norms. Zero vectors score 0.0.
    """
    t_cats = t_vec.entries.keys()
    num = sum(idf.idf_of(cat) ** 2 for cat in sorted(t_cats) if cat in c.categories)
    t_norm = _idf_norm(t_cats, idf)
    c_norm = _idf_norm(c.categories, idf)
    if t_norm == 0.0 or c_norm == 0.0:
        return 0.0
    return num / (t_norm * c_norm)


def score_pivot_slope(
    t_vec: SparseVector, c: Article, idf: IdfTable, p: PivotSlopeParams
) -> float:
    """Pivoted variant: the candidate's norm factor becomes the pivoted count.

    Unlike plain cosine, the candidate side is normalized by
    (1-slope)*pivot + slope*|CAT(c)| (raw category count, not the weighted
    norm), which counteracts cosine's preference for few-category articles.
    """
    if not c.categories:
        return 0.0
    t_cats = t_vec.entries.keys()
    num = sum(idf.idf_of(cat) ** 2 for cat in sorted(t_cats) if cat in c.categories)
    t_norm = _idf_norm(t_cats, idf)
    denom = pivoted_norm(len(c.categories), p)
    if t_norm == 0.0 or denom == 0.0:
        return 0.0
    return num / (t_norm * denom)


def greedy_match(
    targets: Corpus, candidates: Corpus, cfg: MatchConfig, idf: IdfTable
) -> MatchResult:
    """Build the comparison corpus for a direct matching method.

    Targets are processed in ascending id. For each one, the arg-max scoring
    candidate with remaining reuse budget is selected (ties: higher shared
    count, then ascending id). Pairs sharing fewer than
    `min_shared_categories` categories are kept but flagged discarded;
    targets with no usable candidate are emitted unmatched with a reason.
    """
    if cfg.method not in DIRECT_METHODS:
        raise DataError(f"greedy_match handles direct methods only, got {cfg.method!r}")
    if cfg.method == "pivot_slope" and cfg.pivot_slope is None:
        raise DataError("pivot_slope matching needs PivotSlopeParams (pivot unresolved)")
    if len(candidates) == 0:
        raise DataError("candidate pool is empty")
    overlap = set(targets.ids()) & set(candidates.ids())
    if overlap:
        raise DataError(f"target and candidate ids overlap: {sorted(overlap)[:5]}")

    cand_list = list(candidates)  # ascending id: index order == tie-break order
    n_cand = len(cand_list)
    excl = cfg.excluded_category_patterns
    cand_cats = [apply_exclusions(c, excl) for c in cand_list]

    # Inverted index over post-exclusion candidate categories.
    postings: dict[str, list[int]] = {}
    for j, cats in enumerate(cand_cats):
        for cat in cats:
            postings.setdefault(cat, []).append(j)
    postings_arr = {cat: np.asarray(lst, dtype=np.intp) for cat, lst in postings.items()}

    idf2 = {cat: idf.idf_of(cat) ** 2 for cat in postings}
    cand_n_cats = np.array([len(cats) for cats in cand_cats], dtype=np.float64)
    cand_idf_norm = np.array([_idf_norm(cats, idf) for cats in cand_cats])
    if cfg.method == "pivot_slope":
        p = cfg.pivot_slope
        cand_pivot = (1.0 - p.slope) * p.pivot + p.slope * cand_n_cats
    else:
        cand_pivot = None

    remaining = np.full(n_cand, cfg.max_reuse, dtype=np.int64)
    pairs: list[MatchedPair] = []

    for t in targets:
        t_cats = apply_exclusions(t, excl)
        if not t_cats:
            pairs.append(
                MatchedPair(t.id, None, 0.0, 0, True, REASON_NO_CATEGORIES)
            )
            continue
        if not remaining.any():
            pairs.append(
                MatchedPair(t.id, None, 0.0, 0, True, REASON_POOL_EXHAUSTED)
            )
            continue

        hit_idx = [postings_arr[c] for c in sorted(t_cats) if c in postings_arr]
        if hit_idx:
            idx = np.concatenate(hit_idx)
            w = np.concatenate(
                [
                    np.full(len(postings_arr[c]), idf2[c])
                    for c in sorted(t_cats)
                    if c in postings_arr
                ]
            )
            shared_mass = np.bincount(idx, weights=w, minlength=n_cand)
            shared_cnt = np.bincount(idx, minlength=n_cand)
        else:
            shared_mass = np.zeros(n_cand)
            shared_cnt = np.zeros(n_cand, dtype=np.int64)

        if cfg.method == "number":
            scores = shared_cnt.astype(np.float64)
        elif cfg.method == "percent":
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = np.where(cand_n_cats > 0, shared_cnt / cand_n_cats, 0.0)
        else:
            t_norm = _idf_norm(t_cats, idf)
            if t_norm == 0.0:
                scores = np.zeros(n_cand)
            elif cfg.method == "tfidf":
                with np.errstate(divide="ignore", invalid="ignore"):
                    scores = np.where(
                        cand_idf_norm > 0, shared_mass / (t_norm * cand_idf_norm), 0.0
                    )
            else:  # pivot_slope
                with np.errstate(divide="ignore", invalid="ignore"):
                    scores = np.where(
                        cand_pivot > 0, shared_mass / (t_norm * cand_pivot), 0.0
                    )

        usable = remaining > 0
        best = np.max(np.where(usable, scores, -np.inf))
        tied = usable & (scores == best)
        best_shared = np.max(np.where(tied, shared_cnt, -1))
        j = int(np.argmax(tied & (shared_cnt == best_shared)))

        shared = int(shared_cnt[j])
        weak = shared < cfg.min_shared_categories
        pairs.append(
            MatchedPair(
                t.id,
                cand_list[j].id,
                float(scores[j]),
                shared,
                weak,
                REASON_WEAK if weak else None,
            )
        )
        remaining[j] -= 1

    return MatchResult(pairs=pairs, config=cfg)


def write_match_result(result: MatchResult, path) -> None:
    """JSON-lines dump: a header echoing the config, then one line per pair."""
    cfg = asdict(result.config)
    cfg["excluded_category_patterns"] = list(cfg["excluded_category_patterns"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"config": cfg}, sort_keys=True) + "\n")
        for p in result.pairs:
            fh.write(
                json.dumps(
                    {
                        "target": p.target_id,
                        "comparison": p.comparison_id,
                        "score": p.score,
                        "shared": p.shared_categories,
                        "discarded": p.discarded,
                        "reason": p.reason,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_match_result(path) -> MatchResult:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        cfg_d = header["config"]
        ps = cfg_d.get("pivot_slope")
        cfg = MatchConfig(
            method=cfg_d["method"],
            pivot_slope=PivotSlopeParams(**ps) if ps else None,
            max_reuse=cfg_d["max_reuse"],
            min_shared_categories=cfg_d["min_shared_categories"],
            excluded_category_patterns=tuple(cfg_d["excluded_category_patterns"]),
        )
        pairs = []
        for line in fh:
            d = json.loads(line)
            pairs.append(
                MatchedPair(
                    d["target"], d["comparison"], d["score"], d["shared"],
                    d["discarded"], d.get("reason"),
                )
            )
    return MatchResult(pairs=pairs, config=cfg)
