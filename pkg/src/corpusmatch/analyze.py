"""Group-level analysis over matched pairs.

Given a match result, produces per-metric comparison rows (lengths, edits,
age, language counts, section proportions) with paired significance tests,
per-language availability and length comparisons, and polar word tables.
Families of related hypotheses (languages, sections, the core metric rows)
are corrected with Benjamini-Hochberg; only non-discarded pairs ever enter
an analysis row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Article, Corpus
from .errors import ConfigError, DataError
from .evaluate import fold_counts, polar_log_odds
from .groups import GroupRuleSet, build_comparison_pool, tag_by_rules
from .matchers import MatchConfig, MatchedPair
from .propensity import discard_weak_propensity
from .simulate import resolve_config, run_method
from .stats import TestResult, benjamini_hochberg, mcnemar, paired_t, welch_t
from .vectorize import build_idf

# top-10 most edited language editions; override per run as needed
DEFAULT_LANGUAGES = ("en", "fr", "ar", "ru", "ja", "it", "es", "de", "pt", "zh")
DEFAULT_SECTIONS = ("Personal Life", "Career", "Early Life")
DEFAULT_ALPHA = 0.05
DEFAULT_WORD_TABLE_K = 25


@dataclass(frozen=True)
class MetricRow:
    metric: str
    target_mean: float
    comparison_mean: float
    test: TestResult
    corrected_p: float
    significant: bool


@dataclass(frozen=True)
class LanguageRow:
    language: str
    target_available: int
    comparison_available: int
    b: int  # target-yes / comparison-no discordant pairs
    c: int
    availability: TestResult
    availability_corrected_p: float
    availability_significant: bool
    more_available: str  # "target" | "comparison" | "equal"
    n_both: int
    target_mean_length: float | None = None
    comparison_mean_length: float | None = None
    length_test: TestResult | None = None
    length_corrected_p: float | None = None
    length_significant: bool = False


@dataclass(frozen=True)
class WordTable:
    target_words: list[tuple[str, float]]
    comparison_words: list[tuple[str, float]]


@dataclass
class AnalysisReport:
    group: str
    comparison: str
    n_pairs: int
    rows: list[MetricRow]
    word_table: WordTable
    per_language: list[LanguageRow]
    meta: dict = field(default_factory=dict)


def _pair_articles(pairs, corpus: Corpus) -> tuple[list[Article], list[Article]]:
    ts, cs = [], []
    for p in pairs:
        if p.discarded or p.comparison_id is None:
            continue
        ts.append(corpus[p.target_id])
        cs.append(corpus[p.comparison_id])
    return ts, cs


def _correct(rows_raw, alpha: float) -> list[MetricRow]:
    """Apply BH across one family of metric rows."""
    if not rows_raw:
        return []
    ps = [t.p_value for _, _, _, t in rows_raw]
    reject, adjusted = benjamini_hochberg(ps, alpha)
    return [
        MetricRow(
            metric=name,
            target_mean=tm,
            comparison_mean=cm,
            test=t,
            corrected_p=adj,
            significant=rej,
        )
        for (name, tm, cm, t), adj, rej in zip(rows_raw, adjusted, reject)
    ]


def group_statistics(pairs, corpus: Corpus, alpha: float = DEFAULT_ALPHA) -> list[MetricRow]:
    """Length / edit count / age / language count rows with paired t-tests."""
    ts, cs = _pair_articles(pairs, corpus)
    if len(ts) < 2:
        raise DataError("need at least 2 non-discarded pairs")
    metrics = [
        ("article_length", lambda a: float(a.n_tokens())),
        ("edit_count", lambda a: float(a.edit_count)),
        ("age_months", lambda a: float(a.age_months)),
        ("n_languages", lambda a: float(len(a.languages))),
    ]
    raw = []
    for name, get in metrics:
        xs = [get(a) for a in ts]
        ys = [get(a) for a in cs]
        test = paired_t(xs, ys)
        raw.append((name, sum(xs) / len(xs), sum(ys) / len(ys), test))
    return _correct(raw, alpha)


def unmatched_statistics(
    targets, pool, alpha: float = DEFAULT_ALPHA
) -> list[MetricRow]:
    """Target group vs the full candidate pool; Welch tests since unpaired."""
    targets, pool = list(targets), list(pool)
    if len(targets) < 2 or len(pool) < 2:
        raise DataError("need at least 2 articles per group")
    metrics = [
        ("article_length", lambda a: float(a.n_tokens())),
        ("edit_count", lambda a: float(a.edit_count)),
        ("age_months", lambda a: float(a.age_months)),
        ("n_languages", lambda a: float(len(a.languages))),
    ]
    raw = []
    for name, get in metrics:
        xs = [get(a) for a in targets]
        ys = [get(a) for a in pool]
        test = welch_t(xs, ys)
        raw.append((name, sum(xs) / len(xs), sum(ys) / len(ys), test))
    return _correct(raw, alpha)


def language_availability(
    pairs, corpus: Corpus, alpha: float = DEFAULT_ALPHA
) -> list[LanguageRow]:
    """Per-language McNemar on pair discordance, BH-corrected across languages."""
    ts, cs = _pair_articles(pairs, corpus)
    if not ts:
        raise DataError("no non-discarded pairs")
    langs = sorted({l for a in ts + cs for l in a.languages})
    if not langs:
        raise DataError("no language metadata present")

    rows = []
    for lang in langs:
        b = sum(1 for t, c in zip(ts, cs) if lang in t.languages and lang not in c.languages)
        c_ = sum(1 for t, c in zip(ts, cs) if lang not in t.languages and lang in c.languages)
        t_avail = sum(1 for t in ts if lang in t.languages)
        c_avail = sum(1 for c in cs if lang in c.languages)
        test = mcnemar(b, c_)
        more = "equal" if t_avail == c_avail else ("target" if t_avail > c_avail else "comparison")
        rows.append((lang, t_avail, c_avail, b, c_, test, more))

    reject, adjusted = benjamini_hochberg([r[5].p_value for r in rows], alpha)
    return [
        LanguageRow(
            language=lang,
            target_available=ta,
            comparison_available=ca,
            b=b,
            c=c_,
            availability=test,
            availability_corrected_p=adj,
            availability_significant=rej,
            more_available=more,
            n_both=sum(
                1
                for t, c in zip(ts, cs)
                if lang in t.languages and lang in c.languages
            ),
        )
        for (lang, ta, ca, b, c_, test, more), adj, rej in zip(rows, adjusted, reject)
    ]


def per_language_lengths(
    pairs, corpus: Corpus, languages=DEFAULT_LANGUAGES, alpha: float = DEFAULT_ALPHA
) -> list[LanguageRow]:
    """Paired length comparison restricted to pairs available on both sides.

    Languages with fewer than 2 eligible pairs are emitted without a test.
    """
    ts, cs = _pair_articles(pairs, corpus)
    if not ts:
        raise DataError("no non-discarded pairs")

    prelim = []
    for lang in languages:
        xs, ys = [], []
        for t, c in zip(ts, cs):
            if lang in t.lang_lengths and lang in c.lang_lengths:
                xs.append(float(t.lang_lengths[lang]))
                ys.append(float(c.lang_lengths[lang]))
        prelim.append((lang, xs, ys))

    testable = [(lang, xs, ys) for lang, xs, ys in prelim if len(xs) >= 2]
    corrected = {}
    if testable:
        tests = {lang: paired_t(xs, ys) for lang, xs, ys in testable}
        reject, adjusted = benjamini_hochberg(
            [tests[lang].p_value for lang, _, _ in testable], alpha
        )
        for (lang, _, _), adj, rej in zip(testable, adjusted, reject):
            corrected[lang] = (tests[lang], adj, rej)

    out = []
    for lang, xs, ys in prelim:
        got = corrected.get(lang)
        out.append(
            LanguageRow(
                language=lang,
                target_available=len(xs),
                comparison_available=len(ys),
                b=0,
                c=0,
                availability=mcnemar(0, 0),
                availability_corrected_p=1.0,
                availability_significant=False,
                more_available="equal",
                n_both=len(xs),
                target_mean_length=sum(xs) / len(xs) if xs else None,
                comparison_mean_length=sum(ys) / len(ys) if ys else None,
                length_test=got[0] if got else None,
                length_corrected_p=got[1] if got else None,
                length_significant=got[2] if got else False,
            )
        )
    return out


def _section_proportion(a: Article, section_key: str) -> float:
    total = a.n_tokens()
    if total == 0:
        return 0.0
    got = 0
    for name, n in a.sections.items():
        if name.strip().lower() == section_key:
            got += n
    return got / total


def section_proportions(
    pairs, corpus: Corpus, section_names=DEFAULT_SECTIONS, alpha: float = DEFAULT_ALPHA
) -> list[MetricRow]:
    """Share of each article devoted to named sections; missing sections count 0."""
    ts, cs = _pair_articles(pairs, corpus)
    if len(ts) < 2:
        raise DataError("need at least 2 non-discarded pairs")
    raw = []
    for name in section_names:
        key = name.strip().lower()
        xs = [_section_proportion(a, key) for a in ts]
        ys = [_section_proportion(a, key) for a in cs]
        test = paired_t(xs, ys)
        raw.append((f"section:{name}", sum(xs) / len(xs), sum(ys) / len(ys), test))
    return _correct(raw, alpha)


def word_table(
    pairs,
    corpus: Corpus,
    k: int = DEFAULT_WORD_TABLE_K,
    prior_scale: float = 1000.0,
    unmatched_pool=None,
) -> WordTable:
    """Top-k most polar words per side over the matched texts.

    With `unmatched_pool`, the comparison text is the full pool instead of
    the matched articles (the matched/unmatched contrast).
    """
    ts, cs = _pair_articles(pairs, corpus)
    if not ts:
        raise DataError("no non-discarded pairs")
    comparison_articles = list(unmatched_pool) if unmatched_pool is not None else cs
    plo = polar_log_odds(fold_counts(ts), fold_counts(comparison_articles), prior_scale)
    pos = sorted(
        ((w, z) for w, z in plo.z.items() if z > 0), key=lambda it: (-it[1], it[0])
    )
    neg = sorted(
        ((w, z) for w, z in plo.z.items() if z < 0), key=lambda it: (it[1], it[0])
    )
    return WordTable(target_words=pos[:k], comparison_words=neg[:k])


@dataclass(frozen=True)
class AnalysisPairing:
    target: str
    pool: str


def run_analysis(
    corpus: Corpus,
    rule_sets: list[GroupRuleSet],
    pairings: list[AnalysisPairing],
    match_config: MatchConfig,
    *,
    alpha: float = DEFAULT_ALPHA,
    languages=DEFAULT_LANGUAGES,
    sections=DEFAULT_SECTIONS,
    word_table_k: int = DEFAULT_WORD_TABLE_K,
    prior_scale: float = 1000.0,
) -> list[AnalysisReport]:
    """Tag groups, build pools, match, discard weak pairs, and analyze.

    One report per (target, pool) pairing; pools are either another rule
    set's tagged members or its markedness pool when it defines one.
    """
    by_name = {rs.name: rs for rs in rule_sets}
    for p in pairings:
        missing = [n for n in (p.target, p.pool) if n not in by_name]
        if missing:
            raise ConfigError([f"unknown rule set {n!r} in pairing" for n in missing])

    assignment = tag_by_rules(corpus, rule_sets)
    reports = []
    for pairing in pairings:
        target_ids = assignment.members(pairing.target)
        if not target_ids:
            raise DataError(f"target group {pairing.target!r} is empty")
        targets = corpus.subset(target_ids)

        pool_rs = by_name[pairing.pool]
        if pool_rs.comparison_pool_rules is not None:
            pool = build_comparison_pool(corpus, pool_rs, assignment)
        else:
            pool_ids = assignment.members(pairing.pool) - target_ids
            if not pool_ids:
                raise DataError(f"pool {pairing.pool!r} is empty after disjointness")
            pool = corpus.subset(pool_ids)

        union = Corpus(list(targets) + list(pool))
        idf = build_idf(union)
        cfg = resolve_config(match_config, union)
        result = run_method(targets, pool, cfg, idf, apply_propensity_discard=True)
        kept = [p for p in result.kept_pairs() if p.comparison_id is not None]
        if len(kept) < 2:
            raise DataError(
                f"{pairing.target!r} vs {pairing.pool!r}: fewer than 2 usable pairs"
            )

        rows = group_statistics(kept, union, alpha)
        rows += section_proportions(kept, union, sections, alpha)
        avail = language_availability(kept, union, alpha)
        lengths = per_language_lengths(kept, union, languages, alpha)
        by_lang = {r.language: r for r in lengths}
        per_language = []
        for row in avail:
            lrow = by_lang.get(row.language)
            if lrow is None:
                per_language.append(row)
            else:
                per_language.append(
                    LanguageRow(
                        language=row.language,
                        target_available=row.target_available,
                        comparison_available=row.comparison_available,
                        b=row.b,
                        c=row.c,
                        availability=row.availability,
                        availability_corrected_p=row.availability_corrected_p,
                        availability_significant=row.availability_significant,
                        more_available=row.more_available,
                        n_both=lrow.n_both,
                        target_mean_length=lrow.target_mean_length,
                        comparison_mean_length=lrow.comparison_mean_length,
                        length_test=lrow.length_test,
                        length_corrected_p=lrow.length_corrected_p,
                        length_significant=lrow.length_significant,
                    )
                )

        table = word_table(kept, union, word_table_k, prior_scale)
        reports.append(
            AnalysisReport(
                group=pairing.target,
                comparison=pairing.pool,
                n_pairs=len(kept),
                rows=rows,
                word_table=table,
                per_language=per_language,
                meta={
                    "method": cfg.method,
                    "n_discarded": len(result.pairs) - len(result.kept_pairs()),
                    "n_targets": len(targets),
                    "n_pool": len(pool),
                },
            )
        )
    return reports
