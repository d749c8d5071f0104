"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from corpusmatch.corpus import Article, Corpus


def make_article(aid, cats=(), tokens=("x",) * 5, **kw) -> Article:
    return Article(
        id=aid,
        tokens=tuple(tokens),
        categories=frozenset(cats),
        **kw,
    )


def random_match_fixture(rng: np.random.Generator):
    """Small random target/candidate corpora for oracle equivalence checks."""
    n_t = int(rng.integers(2, 16))
    n_c = int(rng.integers(2, 16))
    n_cats = int(rng.integers(3, 16))
    cats = [f"cat{i}" for i in range(n_cats)]

    def mk(prefix, i):
        k = int(rng.integers(1, min(6, n_cats) + 1))
        chosen = rng.choice(n_cats, size=k, replace=False)
        return make_article(f"{prefix}{i:03d}", [cats[j] for j in chosen])

    targets = Corpus([mk("t", i) for i in range(n_t)])
    candidates = Corpus([mk("c", i) for i in range(n_c)])
    return targets, candidates


@pytest.fixture
def small_corpus():
    arts = [
        make_article("a1", ["alpha", "beta", "gamma"], tokens=["He", "won", "his", "match"]),
        make_article("a2", ["alpha", "delta"], tokens=["She", "kept", "her", "title"]),
        make_article("a3", ["beta", "delta", "epsilon"], tokens=["They", "tied", "the", "game"]),
        make_article("a4", ["alpha"], tokens=["word"] * 10),
    ]
    return Corpus(arts)
