"""Match-quality battery: covariate SMDs, polar log-odds, topic divergence.

All metrics compare a target article group with a comparison group (the
comparison list carries multiplicity when articles are matched with
replacement):

* per-category standardized mean differences, averaged and thresholded
* SMD over category counts and over text lengths (signed; favoritism shows
  up as the sign)
* polar log-odds with an informative Dirichlet prior (Monroe et al. style),
  summarized over the most polar words
* symmetric pair of KL divergences between mean LDA topic vectors
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import Article
from .errors import DataError
from .lda import LdaModel

PLO_TOP_WORDS = 200
TOPIC_SMOOTHING = 1.0 / 1000.0


def smd_binary(p_t: float, p_c: float) -> float:
    """Standardized mean difference for a binary covariate given group proportions.

    Returns 0 when both proportions are degenerate but equal (0/0 or 1/1),
    and a signed infinity sentinel when the pooled sd is 0 with a nonzero
    difference.
    """
    for p in (p_t, p_c):
        if not 0.0 <= p <= 1.0:
            raise DataError(f"proportion out of range: {p}")
    num = p_t - p_c
    pooled = (p_t * (1.0 - p_t) + p_c * (1.0 - p_c)) / 2.0
    if pooled == 0.0:
        if num == 0.0:
            return 0.0
        return math.inf if num > 0 else -math.inf
    return num / math.sqrt(pooled)


def smd_continuous(xs_t, xs_c) -> float:
    """SMD with sample variances: (mean_t - mean_c) / sqrt((var_t + var_c)/2)."""
    xs_t, xs_c = list(xs_t), list(xs_c)
    if len(xs_t) < 2 or len(xs_c) < 2:
        raise DataError("smd_continuous requires >= 2 observations per group")
    m_t = sum(xs_t) / len(xs_t)
    m_c = sum(xs_c) / len(xs_c)
    v_t = sum((x - m_t) ** 2 for x in xs_t) / (len(xs_t) - 1)
    v_c = sum((x - m_c) ** 2 for x in xs_c) / (len(xs_c) - 1)
    num = m_t - m_c
    pooled = (v_t + v_c) / 2.0
    if pooled == 0.0:
        if num == 0.0:
            return 0.0
        return math.inf if num > 0 else -math.inf
    return num / math.sqrt(pooled)


@dataclass(frozen=True)
class SmdReport:
    avg_smd: float
    pct_smd_gt_01: float
    per_category_smd: dict[str, float]
    n_infinite: int


def smd_report(
    targets, comparisons, exclusions=(), *, exclude_exact=()
) -> SmdReport:
    """Per-category |SMD| over the union universe of both groups.

    `exclusions` are case-insensitive substring patterns; `exclude_exact`
    removes exact category names (e.g. the sampled target category in a
    simulation). Infinite sentinels count toward the >0.1 percentage but
    are excluded from the average.
    """
    targets, comparisons = list(targets), list(comparisons)
    if not targets or not comparisons:
        raise DataError("both groups must be non-empty")
    pats = [p.lower() for p in exclusions]
    exact = set(exclude_exact)

    universe = {c for a in targets for c in a.categories}
    universe |= {c for a in comparisons for c in a.categories}
    universe -= exact
    if pats:
        universe = {c for c in universe if not any(p in c.lower() for p in pats)}
    if not universe:
        raise DataError("empty category universe after exclusions")

    t_counts = Counter(c for a in targets for c in a.categories if c in universe)
    c_counts = Counter(c for a in comparisons for c in a.categories if c in universe)
    n_t, n_c = len(targets), len(comparisons)

    per_cat = {}
    finite, n_inf, n_gt = [], 0, 0
    for cat in sorted(universe):
        s = abs(smd_binary(t_counts[cat] / n_t, c_counts[cat] / n_c))
        per_cat[cat] = s
        if math.isinf(s):
            n_inf += 1
            n_gt += 1
        else:
            finite.append(s)
            if s > 0.1:
                n_gt += 1

    avg = sum(finite) / len(finite) if finite else math.nan
    pct = 100.0 * n_gt / len(universe)
    return SmdReport(avg_smd=avg, pct_smd_gt_01=pct, per_category_smd=per_cat, n_infinite=n_inf)


@dataclass(frozen=True)
class PolarLogOdds:
    delta: dict[str, float]
    z: dict[str, float]
    plo_mean: float
    plo_sd: float


def fold_counts(articles) -> Counter:
    """Case-folded token counts pooled over a group of articles."""
    counts: Counter = Counter()
    for a in articles:
        for tok in a.tokens:
            counts[tok.lower()] += 1
    return counts


def polar_log_odds(tokens_t, tokens_c, prior_scale: float = 1000.0) -> PolarLogOdds:
    """Log-odds with an informative Dirichlet prior, variance-scaled to z-scores.

    The prior puts mass `prior_scale` on the combined-corpus unigram
    distribution. Positive z means target-skewed. The summary mean/sd are
    over |z| of the most polar words (up to 200, all if fewer).
    """
    y_t = tokens_t if isinstance(tokens_t, Counter) else Counter(tokens_t)
    y_c = tokens_c if isinstance(tokens_c, Counter) else Counter(tokens_c)
    if not y_t or not y_c:
        raise DataError("both token multisets must be non-empty")

    combined = y_t + y_c
    total = sum(combined.values())
    a0 = prior_scale
    n_t = sum(y_t.values())
    n_c = sum(y_c.values())

    delta: dict[str, float] = {}
    z: dict[str, float] = {}
    for w in combined:
        aw = prior_scale * combined[w] / total
        yt, yc = y_t[w], y_c[w]
        dt = n_t + a0 - yt - aw
        dc = n_c + a0 - yc - aw
        if dt <= 0.0 or dc <= 0.0:  # single-word vocabulary edge
            delta[w] = 0.0
            z[w] = 0.0
            continue
        d = math.log((yt + aw) / dt) - math.log((yc + aw) / dc)
        var = 1.0 / (yt + aw) + 1.0 / (yc + aw)
        delta[w] = d
        z[w] = d / math.sqrt(var)

    top = sorted(z, key=lambda w: (-abs(z[w]), w))[:PLO_TOP_WORDS]
    mags = np.array([abs(z[w]) for w in top])
    return PolarLogOdds(
        delta=delta,
        z=z,
        plo_mean=float(mags.mean()),
        plo_sd=float(mags.std()),  # population sd
    )


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats for strictly positive distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DataError("distributions must have matching shape")
    return float(np.sum(p * np.log(p / q)))


def topic_kl(model: LdaModel, target_ids, comparison_ids) -> tuple[float, float]:
    """Smoothed KL between group-mean topic vectors, both directions.

    Each group's vectors are averaged (with multiplicity), smoothed by
    1/1000 per coordinate, renormalized, then KL is taken in nats.
    """
    target_ids, comparison_ids = list(target_ids), list(comparison_ids)
    if not target_ids or not comparison_ids:
        raise DataError("both id groups must be non-empty")

    def mean_vec(ids):
        try:
            m = np.mean([model.doc_topic[i] for i in ids], axis=0)
        except KeyError as exc:
            raise DataError(f"article id missing from topic model: {exc}") from exc
        m = m + TOPIC_SMOOTHING
        return m / m.sum()

    p = mean_vec(target_ids)
    q = mean_vec(comparison_ids)
    return kl_divergence(p, q), kl_divergence(q, p)


@dataclass(frozen=True)
class EvaluationReport:
    avg_smd: float
    pct_smd_gt_01: float
    cat_count_smd: float
    text_len_smd: float
    plo_mean: float
    plo_sd: float
    kl_tc: float
    kl_ct: float
    n_pairs: int
    n_smd_infinite: int
    per_category_smd: dict[str, float] = field(repr=False, default_factory=dict)

    METRICS = (
        "avg_smd", "pct_smd_gt_01", "cat_count_smd", "text_len_smd",
        "plo_mean", "plo_sd", "kl_tc", "kl_ct",
    )

    def to_dict(self, with_categories: bool = False) -> dict:
        d = {m: getattr(self, m) for m in self.METRICS}
        d["n_pairs"] = self.n_pairs
        d["n_smd_infinite"] = self.n_smd_infinite
        if with_categories:
            d["per_category_smd"] = dict(self.per_category_smd)
        return d


def evaluate_battery(
    targets: list[Article],
    comparisons: list[Article],
    *,
    exclusions=(),
    exclude_exact=(),
    prior_scale: float = 1000.0,
    lda_model: LdaModel | None = None,
) -> EvaluationReport:
    """Full metric battery for one target/comparison pairing.

    Comparison articles appear with multiplicity. The signed count/length
    SMDs are oriented comparison-minus-target, so a positive cat_count_smd
    means the matcher favored candidates with more categories. Topic
    divergence is reported as NaN when no topic model is supplied.
    """
    targets, comparisons = list(targets), list(comparisons)
    smd = smd_report(targets, comparisons, exclusions, exclude_exact=exclude_exact)
    cat_smd = smd_continuous(
        [a.n_categories() for a in comparisons], [a.n_categories() for a in targets]
    )
    len_smd = smd_continuous(
        [a.n_tokens() for a in comparisons], [a.n_tokens() for a in targets]
    )
    plo = polar_log_odds(fold_counts(targets), fold_counts(comparisons), prior_scale)
    if lda_model is not None:
        kl_tc, kl_ct = topic_kl(
            lda_model, [a.id for a in targets], [a.id for a in comparisons]
        )
    else:
        kl_tc = kl_ct = math.nan
    return EvaluationReport(
        avg_smd=smd.avg_smd,
        pct_smd_gt_01=smd.pct_smd_gt_01,
        cat_count_smd=cat_smd,
        text_len_smd=len_smd,
        plo_mean=plo.plo_mean,
        plo_sd=plo.plo_sd,
        kl_tc=kl_tc,
        kl_ct=kl_ct,
        n_pairs=len(comparisons),
        n_smd_infinite=smd.n_infinite,
        per_category_smd=smd.per_category_smd,
    )
