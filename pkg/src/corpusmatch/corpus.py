"""Document data model, corpus ingestion, filtering, and synthetic fixtures.

A corpus is a list of articles, each carrying tokens plus sparse categorical
metadata (category labels, language availability, edit statistics, section
lengths, free-form identity properties). Articles are kept in ascending-id
order, which anchors determinism for every downstream greedy operation.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_EDGE_PUNCT = string.punctuation


def tokenize(text: str) -> list[str]:
    """Split raw text on Unicode whitespace, stripping punctuation from token edges."""
    out = []
    for raw in text.split():
        tok = raw.strip(_EDGE_PUNCT)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class Article:
    """One document with its tokens and categorical metadata."""

    id: str
    title: str = ""
    tokens: tuple[str, ...] = ()
    categories: frozenset[str] = frozenset()
    languages: frozenset[str] = frozenset()
    lang_lengths: dict[str, int] = field(default_factory=dict)
    edit_count: int = 0
    age_months: float = 0.0
    sections: dict[str, int] = field(default_factory=dict)
    properties: dict[str, frozenset[str]] = field(default_factory=dict)

    def n_categories(self) -> int:
        return len(self.categories)

    def n_tokens(self) -> int:
        return len(self.tokens)


class Corpus:
    """Immutable article collection; iteration order is ascending id."""

    def __init__(self, articles, source_meta: dict | None = None):
        arts = sorted(articles, key=lambda a: a.id)
        seen = set()
        for a in arts:
            if a.id in seen:
                raise DataError(f"duplicate article id: {a.id!r}")
            seen.add(a.id)
        self._articles = tuple(arts)
        self._by_id = {a.id: a for a in arts}
        self.source_meta = dict(source_meta or {})

    @property
    def articles(self) -> tuple[Article, ...]:
        return self._articles

    def __iter__(self):
        return iter(self._articles)

    def __len__(self):
        return len(self._articles)

    def __getitem__(self, article_id: str) -> Article:
        return self._by_id[article_id]

    def __contains__(self, article_id: str) -> bool:
        return article_id in self._by_id

    def ids(self) -> list[str]:
        return [a.id for a in self._articles]

    def subset(self, ids) -> "Corpus":
        ids = set(ids)
        return Corpus([a for a in self._articles if a.id in ids])


@dataclass(frozen=True)
class FilterPolicy:
    """Thresholds and category patterns applied during ingestion.

    Filtering order is fixed: remove categories matching drop patterns,
    then require min_categories, then min_tokens, then reject stub-tagged
    articles. Pattern matching is case-insensitive substring.
    """

    min_categories: int = 2
    min_tokens: int = 100
    stub_category_patterns: tuple[str, ...] = ("stubs",)
    category_drop_patterns: tuple[str, ...] = ("Pages with",)

    def __post_init__(self):
        if self.min_categories < 0 or self.min_tokens < 0:
            raise DataError("FilterPolicy thresholds must be non-negative")


def _matches_any(category: str, patterns) -> bool:
    low = category.lower()
    return any(p.lower() in low for p in patterns)


def apply_filter(articles, policy: FilterPolicy):
    """Apply the fixed-order filter; returns (kept articles, drop counts)."""
    kept = []
    drops = {"min_categories": 0, "min_tokens": 0, "stub": 0}
    for a in articles:
        cats = frozenset(
            c for c in a.categories if not _matches_any(c, policy.category_drop_patterns)
        )
        if len(cats) < policy.min_categories:
            drops["min_categories"] += 1
            continue
        if len(a.tokens) < policy.min_tokens:
            drops["min_tokens"] += 1
            continue
        if any(_matches_any(c, policy.stub_category_patterns) for c in cats):
            drops["stub"] += 1
            continue
        if cats != a.categories:
            a = Article(
                id=a.id,
                title=a.title,
                tokens=a.tokens,
                categories=cats,
                languages=a.languages,
                lang_lengths=a.lang_lengths,
                edit_count=a.edit_count,
                age_months=a.age_months,
                sections=a.sections,
                properties=a.properties,
            )
        kept.append(a)
    return kept, drops


def _parse_record(obj: dict, line_no: int) -> Article:
    try:
        art_id = obj["id"]
        if not isinstance(art_id, str) or not art_id:
            raise ValueError("id must be a non-empty string")
        if "tokens" in obj:
            tokens = tuple(str(t) for t in obj["tokens"])
        elif "text" in obj:
            tokens = tuple(tokenize(str(obj["text"])))
        else:
            tokens = ()
        categories = frozenset(str(c) for c in obj.get("categories", ()))
        if any(not c for c in categories):
            raise ValueError("empty category string")
        languages = frozenset(str(x) for x in obj.get("languages", ()))
        lang_lengths = {str(k): int(v) for k, v in obj.get("lang_lengths", {}).items()}
        bad = set(lang_lengths) - set(languages)
        if bad:
            raise ValueError(f"lang_lengths keys not in languages: {sorted(bad)}")
        edit_count = int(obj.get("edit_count", 0))
        if edit_count < 0:
            raise ValueError("edit_count must be non-negative")
        age_months = float(obj.get("age_months", 0.0))
        if age_months < 0:
            raise ValueError("age_months must be non-negative")
        sections = {str(k): int(v) for k, v in obj.get("sections", {}).items()}
        properties = {
            str(k): frozenset(str(x) for x in v)
            for k, v in obj.get("properties", {}).items()
        }
        return Article(
            id=art_id,
            title=str(obj.get("title", "")),
            tokens=tokens,
            categories=categories,
            languages=languages,
            lang_lengths=lang_lengths,
            edit_count=edit_count,
            age_months=age_months,
            sections=sections,
            properties=properties,
        )
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed record at line {line_no}: {exc}") from exc


def ingest(path, policy: FilterPolicy | None = None) -> Corpus:
    """Read a JSON-lines corpus file and apply the filter policy.

    Each line is one article record (see the Article schema). Raises
    DataError for unreadable files, malformed records (with line number),
    or duplicate ids.
    """
    policy = policy or FilterPolicy()
    articles = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"malformed record at line {line_no}: {exc}") from exc
                if not isinstance(obj, dict):
                    raise DataError(f"malformed record at line {line_no}: not an object")
                articles.append(_parse_record(obj, line_no))
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc

    n_read = len(articles)
    kept, drops = apply_filter(articles, policy)
    meta = {
        "path": str(path),
        "records_read": n_read,
        "records_kept": len(kept),
        "dropped": drops,
    }
    return Corpus(kept, source_meta=meta)


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus back out as JSON lines (UTF-8, LF)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in corpus:
            fh.write(json.dumps(article_to_record(a), sort_keys=True) + "\n")


def article_to_record(a: Article) -> dict:
    return {
        "id": a.id,
        "title": a.title,
        "tokens": list(a.tokens),
        "categories": sorted(a.categories),
        "languages": sorted(a.languages),
        "lang_lengths": dict(sorted(a.lang_lengths.items())),
        "edit_count": a.edit_count,
        "age_months": a.age_months,
        "sections": dict(sorted(a.sections.items())),
        "properties": {k: sorted(v) for k, v in sorted(a.properties.items())},
    }


@dataclass(frozen=True)
class CorpusSummary:
    n_articles: int
    mean_categories: float
    mean_tokens: float


def corpus_summary(corpus: Corpus) -> CorpusSummary:
    """Means over all retained articles; mean category count feeds the pivot."""
    if len(corpus) == 0:
        raise DataError("cannot summarize an empty corpus")
    n = len(corpus)
    return CorpusSummary(
        n_articles=n,
        mean_categories=sum(a.n_categories() for a in corpus) / n,
        mean_tokens=sum(a.n_tokens() for a in corpus) / n,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic corpus generator (test/demo fixture)."""

    n_articles: int = 100
    n_categories: int = 50
    mean_categories_per_article: float = 9.0
    mean_tokens: float = 120.0
    token_vocab: int = 500
    n_languages: int = 6
    with_metadata: bool = True


def generate_synthetic(spec: SyntheticSpec, seed: int) -> Corpus:
    """Deterministic synthetic corpus; category and token draws are Zipf-weighted."""
    if spec.n_categories <= 0 and spec.mean_categories_per_article > 0:
        raise DataError("zero category vocabulary with nonzero categories per article")
    if spec.n_articles <= 0:
        raise DataError("n_articles must be positive")

    rng = np.random.default_rng([int(seed), 0x5EED])
    cat_names = [f"cat_{i:05d}" for i in range(spec.n_categories)]
    cat_weights = 1.0 / np.arange(1, spec.n_categories + 1)
    cat_weights /= cat_weights.sum()
    tok_names = [f"w{i:05d}" for i in range(spec.token_vocab)]
    tok_weights = 1.0 / np.arange(1, spec.token_vocab + 1)
    tok_weights /= tok_weights.sum()
    langs = ["en", "fr", "de", "es", "ru", "zh", "ja", "pt", "it", "ar"][: max(1, spec.n_languages)]

    width = max(5, int(math.log10(spec.n_articles)) + 1)
    articles = []
    for i in range(spec.n_articles):
        k = int(rng.poisson(spec.mean_categories_per_article))
        k = max(1, min(k, spec.n_categories))
        cats = rng.choice(spec.n_categories, size=k, replace=False, p=cat_weights)
        n_tok = max(1, int(rng.poisson(spec.mean_tokens)))
        toks = rng.choice(spec.token_vocab, size=n_tok, replace=True, p=tok_weights)
        kwargs = {}
        if spec.with_metadata:
            n_lang = 1 + int(rng.integers(0, len(langs)))
            chosen = ["en"] + [l for l in rng.permutation(langs[1:])[: n_lang - 1]]
            lengths = {"en": n_tok}
            for l in chosen[1:]:
                lengths[l] = max(1, int(n_tok * rng.uniform(0.2, 1.2)))
            kwargs = {
                "languages": frozenset(chosen),
                "lang_lengths": lengths,
                "edit_count": int(rng.poisson(50)),
                "age_months": float(np.round(rng.uniform(1, 200), 2)),
                "sections": {"Career": max(1, n_tok // 3)},
            }
        articles.append(
            Article(
                id=f"a{i:0{width}d}",
                title=f"Synthetic {i}",
                tokens=tuple(tok_names[t] for t in toks),
                categories=frozenset(cat_names[c] for c in cats),
                **kwargs,
            )
        )
    return Corpus(articles, source_meta={"generator": "synthetic", "seed": int(seed)})
