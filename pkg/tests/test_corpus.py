import json

import pytest

from corpusmatch.corpus import (
    Article,
    Corpus,
    FilterPolicy,
    SyntheticSpec,
    apply_filter,
    corpus_summary,
    generate_synthetic,
    ingest,
    save_corpus,
    tokenize,
)
from corpusmatch.errors import DataError

from conftest import make_article


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def record(aid, cats, n_tokens=200, **kw):
    base = {"id": aid, "categories": list(cats), "tokens": ["tok"] * n_tokens}
    base.update(kw)
    return base


class TestIngest:
    def test_single_category_dropped(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [record("a", ["only"], n_tokens=500)])
        c = ingest(p)
        assert len(c) == 0
        assert c.source_meta["dropped"]["min_categories"] == 1

    def test_good_article_kept_unchanged(self, tmp_path):
        p = tmp_path / "c.jsonl"
        cats = [f"c{i}" for i in range(9)]
        write_jsonl(p, [record("a", cats, n_tokens=600)])
        c = ingest(p)
        assert len(c) == 1
        assert c["a"].categories == frozenset(cats)
        assert c["a"].n_tokens() == 600

    def test_drop_pattern_precedes_min_count(self, tmp_path):
        # worked example: drop-pattern removal happens before the >=2 check,
        # so {"Living people","Pages with broken links","Actors"} survives
        # with two categories left
        p = tmp_path / "c.jsonl"
        write_jsonl(
            p,
            [record("a", ["Living people", "Pages with broken links", "Actors"])],
        )
        c = ingest(p)
        assert len(c) == 1
        assert c["a"].categories == frozenset({"Living people", "Actors"})

    def test_stub_article_dropped(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [record("a", ["Actors", "Actor stubs"])])
        c = ingest(p)
        assert len(c) == 0
        assert c.source_meta["dropped"]["stub"] == 1

    def test_short_article_dropped(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [record("a", ["x", "y"], n_tokens=50)])
        assert len(ingest(p)) == 0

    def test_idempotent(self, tmp_path):
        p1 = tmp_path / "raw.jsonl"
        write_jsonl(
            p1,
            [
                record("a", ["Living people", "Pages with broken links", "Actors"]),
                record("b", ["x", "y", "z"]),
                record("c", ["solo"]),
            ],
        )
        first = ingest(p1)
        p2 = tmp_path / "filtered.jsonl"
        save_corpus(first, p2)
        second = ingest(p2)
        assert [a.id for a in first] == [a.id for a in second]
        assert all(
            x.categories == y.categories and x.tokens == y.tokens
            for x, y in zip(first, second)
        )

    def test_malformed_record_reports_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        with open(p, "w") as fh:
            fh.write(json.dumps(record("a", ["x", "y"])) + "\n")
            fh.write("{not json}\n")
        with pytest.raises(DataError, match="line 2"):
            ingest(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [record("a", ["x", "y"]), record("a", ["x", "z"])])
        with pytest.raises(DataError, match="duplicate"):
            ingest(p)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            ingest(tmp_path / "missing.jsonl")

    def test_text_field_tokenized(self, tmp_path):
        p = tmp_path / "c.jsonl"
        rec = {"id": "a", "categories": ["x", "y"], "text": "Hello, world! " * 60}
        write_jsonl(p, [rec])
        c = ingest(p)
        assert c["a"].tokens[:2] == ("Hello", "world")

    def test_order_permutation_invariance(self, tmp_path):
        recs = [record(f"a{i}", [f"c{i}", "shared"], n_tokens=100 + i) for i in range(6)]
        p1, p2 = tmp_path / "f.jsonl", tmp_path / "r.jsonl"
        write_jsonl(p1, recs)
        write_jsonl(p2, list(reversed(recs)))
        s1 = corpus_summary(ingest(p1))
        s2 = corpus_summary(ingest(p2))
        assert s1 == s2


class TestTokenize:
    def test_strips_edge_punctuation(self):
        assert tokenize("Hello, world! (yes)") == ["Hello", "world", "yes"]

    def test_keeps_interior_punctuation(self):
        assert tokenize("it's fine-ish") == ["it's", "fine-ish"]


class TestSummary:
    def test_mean_categories(self):
        c = Corpus([make_article("a", [f"c{i}" for i in range(4)]),
                    make_article("b", [f"c{i}" for i in range(6)])])
        assert corpus_summary(c).mean_categories == 5.0

    def test_singleton_tokens(self):
        c = Corpus([make_article("a", ["x"], tokens=["t"] * 628)])
        assert corpus_summary(c).mean_tokens == 628.0

    def test_against_independent_recomputation(self):
        # independent oracle: explicit running-total arithmetic
        sizes = [(3, 120), (5, 80), (9, 410), (2, 100), (7, 55),
                 (4, 300), (6, 220), (8, 90), (3, 150), (10, 600)]
        arts = [
            make_article(f"a{i}", [f"c{j}" for j in range(k)], tokens=["t"] * n)
            for i, (k, n) in enumerate(sizes)
        ]
        total_cats = 0
        total_toks = 0
        for k, n in sizes:
            total_cats += k
            total_toks += n
        s = corpus_summary(Corpus(arts))
        assert s.mean_categories == pytest.approx(total_cats / 10)
        assert s.mean_tokens == pytest.approx(total_toks / 10)

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            corpus_summary(Corpus([]))


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(n_articles=40)
        a = generate_synthetic(spec, seed=7)
        b = generate_synthetic(spec, seed=7)
        assert [x.id for x in a] == [x.id for x in b]
        assert all(x.categories == y.categories and x.tokens == y.tokens
                   for x, y in zip(a, b))

    def test_count_contract(self):
        assert len(generate_synthetic(SyntheticSpec(n_articles=100), seed=1)) == 100

    def test_category_mean_close_to_requested(self):
        spec = SyntheticSpec(n_articles=1000, n_categories=200,
                             mean_categories_per_article=9.0)
        c = generate_synthetic(spec, seed=3)
        mean = sum(a.n_categories() for a in c) / len(c)
        assert abs(mean - 9.0) < 1.0

    def test_infeasible_spec(self):
        with pytest.raises(DataError):
            generate_synthetic(
                SyntheticSpec(n_articles=5, n_categories=0,
                              mean_categories_per_article=3.0), seed=0
            )

    def test_passes_structural_invariants(self):
        c = generate_synthetic(SyntheticSpec(n_articles=50), seed=11)
        assert len({a.id for a in c}) == 50
        for a in c:
            assert all(a.lang_lengths.get(l) is not None for l in a.lang_lengths)
            assert set(a.lang_lengths) <= set(a.languages)
            assert a.lang_lengths.get("en") == a.n_tokens()


class TestFilterPolicy:
    def test_negative_thresholds_rejected(self):
        with pytest.raises(DataError):
            FilterPolicy(min_categories=-1)

    def test_stub_match_case_insensitive(self):
        arts = [make_article("a", ["Painter STUBS", "x", "y"], tokens=["t"] * 200)]
        kept, drops = apply_filter(arts, FilterPolicy())
        assert kept == [] and drops["stub"] == 1
