"""IDF table, weighted sparse category vectors, and pivoted length normalization.

Category weighting follows the classic Salton form: tf = 1/|CAT(article)|,
idf = ln(n_docs / df). Pivoted normalization (Singhal et al.) replaces a
document's normalization factor with a blend of a corpus-level pivot and
its own category count, correcting cosine's bias toward short documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Article, Corpus
from .errors import DataError


@dataclass(frozen=True)
class IdfTable:
    """Per-category document frequencies and inverse-document-frequency weights."""

    df: dict[str, int]
    n_docs: int
    idf: dict[str, float] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "idf",
            {c: math.log(self.n_docs / f) for c, f in self.df.items()},
        )

    def idf_of(self, category: str) -> float:
        """IDF weight; categories unseen at fit time fall back to df=1."""
        got = self.idf.get(category)
        if got is None:
            return math.log(self.n_docs)
        return got


def build_idf(corpus: Corpus) -> IdfTable:
    if len(corpus) == 0:
        raise DataError("cannot build IDF table from an empty corpus")
    df: dict[str, int] = {}
    for a in corpus:
        for c in a.categories:
            df[c] = df.get(c, 0) + 1
    return IdfTable(df=df, n_docs=len(corpus))


@dataclass(frozen=True)
class SparseVector:
    """Category -> weight map; zero weights are never stored."""

    entries: dict[str, float]

    def dot(self, other: "SparseVector") -> float:
        a, b = self.entries, other.entries
        if len(b) < len(a):
            a, b = b, a
        return sum(w * b[c] for c, w in a.items() if c in b)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))


def tfidf_vector(a: Article, idf: IdfTable) -> SparseVector:
    """TF-IDF weights: (1/|CAT(a)|) * idf(cat) for each category of a."""
    k = a.n_categories()
    if k == 0:
        raise DataError(f"article {a.id!r} has no categories to vectorize")
    tf = 1.0 / k
    entries = {}
    for c in a.categories:
        w = tf * idf.idf_of(c)
        if w != 0.0:
            entries[c] = w
    return SparseVector(entries)


@dataclass(frozen=True)
class PivotSlopeParams:
    pivot: float
    slope: float

    def __post_init__(self):
        if not self.pivot > 0:
            raise DataError("pivot must be positive")
        if not 0.0 <= self.slope <= 1.0:
            raise DataError("slope must lie in [0, 1]")


def pivoted_norm(n_categories: int, p: PivotSlopeParams) -> float:
    """(1 - slope) * pivot + slope * n_categories."""
    if n_categories < 1:
        raise DataError("n_categories must be >= 1")
    return (1.0 - p.slope) * p.pivot + p.slope * n_categories


def export_matrix(corpus: Corpus, idf: IdfTable, path) -> None:
    """Write the TF-IDF matrix as `article_id<TAB>category<TAB>weight` lines.

    Header records the matrix shape; the column order is the sorted category
    vocabulary. Weights are printed to 6 significant digits. Articles whose
    vector is empty still appear in the row count but emit no triples.
    """
    cats = sorted({c for a in corpus for c in a.categories})
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"#rows={len(corpus)} cols={len(cats)}\n")
            for a in corpus:
                if a.n_categories() == 0:
                    continue
                vec = tfidf_vector(a, idf)
                for c in sorted(vec.entries):
                    fh.write(f"{a.id}\t{c}\t{vec.entries[c]:.6g}\n")
    except OSError as exc:
        raise DataError(f"cannot write matrix file {path}: {exc}") from exc


def read_matrix(path) -> dict[str, dict[str, float]]:
    """Parse an exported matrix back into id -> {category: weight}."""
    rows: dict[str, dict[str, float]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#rows="):
            raise DataError(f"bad matrix header in {path}")
        for line in fh:
            art_id, cat, w = line.rstrip("\n").split("\t")
            rows.setdefault(art_id, {})[cat] = float(w)
    return rows


def mean_category_count(corpus: Corpus) -> float:
    """Corpus-wide mean category count; the default pivot value."""
    if len(corpus) == 0:
        raise DataError("empty corpus")
    return sum(a.n_categories() for a in corpus) / len(corpus)
