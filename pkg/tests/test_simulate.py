import math

import numpy as np
import pytest

from corpusmatch.corpus import Article, Corpus, SyntheticSpec, generate_synthetic
from corpusmatch.errors import DataError
from corpusmatch.matchers import MatchConfig
from corpusmatch.simulate import (
    NO_MATCHING,
    RANDOM_BASELINE,
    SimulationSpec,
    TuneSpec,
    method_label,
    run_article_sampling,
    run_attribute_specific,
    run_category_sampling,
    tune_slope,
)
from corpusmatch.vectorize import PivotSlopeParams

from conftest import make_article


def methods(*names, slope=0.3, pivot=None):
    out = []
    for n in names:
        if n == "pivot_slope":
            ps = PivotSlopeParams(pivot=pivot, slope=slope) if pivot else None
            out.append(MatchConfig(method="pivot_slope", pivot_slope=ps))
        else:
            out.append(MatchConfig(method=n))
    return tuple(out)


@pytest.fixture(scope="module")
def homogeneous_corpus():
    return generate_synthetic(
        SyntheticSpec(n_articles=400, n_categories=60,
                      mean_categories_per_article=6.0, mean_tokens=60.0,
                      token_vocab=12, with_metadata=False),
        seed=101,
    )


class TestArticleSampling:
    def test_deterministic_same_seed(self, homogeneous_corpus):
        spec = SimulationSpec(
            regime="article_sampling", n_simulations=2, sample_size=80,
            seed=5, methods=methods("number"),
        )
        a = run_article_sampling(homogeneous_corpus, spec)
        b = run_article_sampling(homogeneous_corpus, spec)
        assert a.aggregates == b.aggregates
        assert a.sampled_target_ids == b.sampled_target_ids

    def test_random_baseline_competitive_when_homogeneous(self, homogeneous_corpus):
        spec = SimulationSpec(
            regime="article_sampling", n_simulations=5, sample_size=80,
            seed=7, methods=methods("pivot_slope", "tfidf"),
        )
        out = run_article_sampling(homogeneous_corpus, spec)
        best_label = min(
            (l for l in out.aggregates if l != RANDOM_BASELINE),
            key=lambda l: out.aggregates[l]["avg_smd"],
        )
        best = out.aggregates[best_label]
        rand = out.aggregates[RANDOM_BASELINE]
        spread = max(best["avg_smd_sd"], rand["avg_smd_sd"])
        assert rand["avg_smd"] <= best["avg_smd"] + 2 * spread

    def test_boundary_exact_split(self, homogeneous_corpus):
        spec = SimulationSpec(
            regime="article_sampling", n_simulations=1, sample_size=200,
            seed=1, methods=methods("number"),
        )
        out = run_article_sampling(homogeneous_corpus, spec)
        assert out.aggregates["number"]["n_pairs"] == 200.0

    def test_corpus_too_small(self, homogeneous_corpus):
        spec = SimulationSpec(
            regime="article_sampling", n_simulations=1, sample_size=201,
            seed=1, methods=methods("number"),
        )
        with pytest.raises(DataError):
            run_article_sampling(homogeneous_corpus, spec)

    def test_method_list_never_changes_sampling(self, homogeneous_corpus):
        base = SimulationSpec(
            regime="article_sampling", n_simulations=3, sample_size=50,
            seed=11, methods=methods("number"),
        )
        more = SimulationSpec(
            regime="article_sampling", n_simulations=3, sample_size=50,
            seed=11, methods=methods("number", "percent", "tfidf"),
        )
        a = run_article_sampling(homogeneous_corpus, base)
        b = run_article_sampling(homogeneous_corpus, more)
        assert a.sampled_target_ids == b.sampled_target_ids
        assert a.aggregates["number"] == b.aggregates["number"]

    def test_aggregate_is_arithmetic_mean(self, homogeneous_corpus):
        spec = SimulationSpec(
            regime="article_sampling", n_simulations=4, sample_size=50,
            seed=3, methods=methods("tfidf"),
        )
        out = run_article_sampling(homogeneous_corpus, spec)
        reports = out.per_sim["tfidf"]
        for metric in ("avg_smd", "pct_smd_gt_01", "cat_count_smd", "text_len_smd"):
            vals = [getattr(r, metric) for r in reports]
            assert out.aggregates["tfidf"][metric] == pytest.approx(float(np.mean(vals)))
            assert out.aggregates["tfidf"][f"{metric}_sd"] == pytest.approx(float(np.std(vals)))


def category_corpus(seed=202):
    """Corpus with exactly one big category plus background noise."""
    rng = np.random.default_rng(seed)
    cats = [f"c{i:02d}" for i in range(40)]
    arts = []
    for i in range(300):
        base = {cats[j] for j in rng.choice(40, size=4, replace=False)}
        if i < 60:
            base.add("bigcat")
        toks = ["w%d" % rng.integers(10) for _ in range(40)]
        arts.append(make_article(f"a{i:03d}", base, tokens=toks))
    return Corpus(arts)


class TestCategorySampling:
    def test_single_qualifying_category_always_chosen(self):
        corpus = category_corpus()
        spec = SimulationSpec(
            regime="category_sampling", n_simulations=3, sample_size=40,
            min_category_size=50, seed=2, methods=methods("number"),
        )
        out = run_category_sampling(corpus, spec)
        assert out.sampled_categories == ["bigcat"] * 3

    def test_sampled_category_excluded_from_universe(self):
        corpus = category_corpus()
        spec = SimulationSpec(
            regime="category_sampling", n_simulations=1, sample_size=40,
            min_category_size=50, seed=2, methods=methods("number"),
            include_random_baseline=False,
        )
        out = run_category_sampling(corpus, spec)
        rep = out.per_sim["number"][0]
        assert "bigcat" not in rep.per_category_smd

    def test_no_qualifying_category(self):
        corpus = category_corpus()
        spec = SimulationSpec(
            regime="category_sampling", n_simulations=1, sample_size=40,
            min_category_size=1000, seed=2, methods=methods("number"),
        )
        with pytest.raises(DataError):
            run_category_sampling(corpus, spec)

    def test_deterministic(self):
        corpus = category_corpus()
        spec = SimulationSpec(
            regime="category_sampling", n_simulations=2, sample_size=30,
            min_category_size=50, seed=9, methods=methods("percent"),
        )
        a = run_category_sampling(corpus, spec)
        b = run_category_sampling(corpus, spec)
        assert a.aggregates == b.aggregates


def attribute_fixture(seed=7):
    """Targets share mid-frequency categories; the pool mixes well-categorized
    candidates with single-category bait that cosine loves."""
    rng = np.random.default_rng(seed)
    mids = [f"mid{i}" for i in range(12)]
    arts_t, arts_c = [], []
    for i in range(40):
        own = {f"rare{i}"}
        own.update(mids[j] for j in rng.choice(12, size=5, replace=False))
        arts_t.append(make_article(f"t{i:03d}", own, tokens=["w"] * 30))
    for i in range(40):
        # bait: one rare category shared with exactly one target
        arts_c.append(make_article(f"cbait{i:03d}", {f"rare{i}"}, tokens=["w"] * 30))
    for i in range(120):
        own = {mids[j] for j in rng.choice(12, size=6, replace=False)}
        arts_c.append(make_article(f"cgood{i:03d}", own, tokens=["w"] * 30))
    return Corpus(arts_t), Corpus(arts_c)


class TestAttributeSpecific:
    def test_no_matching_baseline_present(self):
        targets, candidates = attribute_fixture()
        out = run_attribute_specific(targets, candidates, methods("number"))
        assert NO_MATCHING in out
        assert out[NO_MATCHING].n_discarded == 0

    def test_zero_discard_method_reports_identical(self):
        # exact twins: nothing is weak, so both reports coincide
        targets = Corpus([make_article(f"t{i}", ["a", "b", f"x{i}"]) for i in range(5)])
        candidates = Corpus([make_article(f"c{i}", ["a", "b", f"x{i}"]) for i in range(5)])
        out = run_attribute_specific(targets, candidates, methods("number"),
                                     include_no_matching=False)
        rep = out["number"]
        assert rep.n_discarded == 0
        assert rep.smd_all == rep.smd_kept

    def test_pivot_slope_discards_no_more_than_tfidf(self):
        targets, candidates = attribute_fixture()
        out = run_attribute_specific(
            targets, candidates, methods("tfidf", "pivot_slope"),
            include_no_matching=False,
        )
        labels = [l for l in out if l.startswith("pivot_slope")]
        assert out[labels[0]].n_discarded < out["tfidf"].n_discarded

    def test_exclusions_apply_to_scoring_and_universe(self):
        targets = Corpus([make_article("t0", ["Women artists", "a", "b"])])
        candidates = Corpus([make_article("c0", ["a", "b"]),
                             make_article("c1", ["Women artists", "q"])])
        out = run_attribute_specific(
            targets, candidates, methods("number"), exclusions=("women",),
            include_no_matching=False,
        )
        rep = out["number"]
        assert "Women artists" not in rep.smd_all.per_category_smd

    def test_empty_group_rejected(self):
        targets, candidates = attribute_fixture()
        with pytest.raises(DataError):
            run_attribute_specific(Corpus([]), candidates, methods("number"))


def confounded_corpus(seed=31):
    """Category count strongly predicts text length (the length confound)."""
    rng = np.random.default_rng(seed)
    cats = [f"c{i:02d}" for i in range(30)]
    arts = []
    for i in range(400):
        k = int(np.clip(rng.poisson(5), 2, 14))
        own = {cats[j] for j in rng.choice(30, size=k, replace=False)}
        if i < 80:
            own.add("hub")
        n_tok = 20 + 12 * k + int(rng.integers(0, 6))
        toks = [f"w{rng.integers(15)}" for _ in range(n_tok)]
        arts.append(make_article(f"a{i:03d}", own, tokens=toks))
    return Corpus(arts)


class TestTuneSlope:
    def test_singleton_grid(self):
        corpus = confounded_corpus()
        spec = TuneSpec(article_sample_size=60, n_category_samples=1,
                        category_sample_size=40, min_category_size=40, seed=0)
        result = tune_slope(corpus, spec, [0.3])
        assert result.best_slope == 0.3
        assert len(result.grid_report) == 1

    def test_tuning_ids_flagged(self):
        corpus = confounded_corpus()
        spec = TuneSpec(article_sample_size=60, n_category_samples=1,
                        category_sample_size=40, min_category_size=40, seed=0)
        result = tune_slope(corpus, spec, [0.0, 1.0])
        assert result.tuning_ids
        assert result.tuning_ids <= set(corpus.ids())

    def test_interior_slope_wins_under_length_confound(self):
        corpus = confounded_corpus()
        spec = TuneSpec(article_sample_size=80, n_category_samples=2,
                        category_sample_size=50, min_category_size=50, seed=1)
        result = tune_slope(corpus, spec, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                           0.6, 0.7, 0.8, 0.9, 1.0])
        assert 0.0 < result.best_slope < 1.0

    def test_default_pivot_is_corpus_mean(self):
        corpus = confounded_corpus()
        spec = TuneSpec(article_sample_size=40, n_category_samples=1,
                        category_sample_size=30, min_category_size=30, seed=0)
        result = tune_slope(corpus, spec, [0.5])
        assert result.grid_report[0]["slope"] == 0.5

    def test_empty_grid_rejected(self):
        with pytest.raises(DataError):
            tune_slope(confounded_corpus(), TuneSpec(), [])


def test_method_label_includes_slope():
    cfg = MatchConfig(method="pivot_slope",
                      pivot_slope=PivotSlopeParams(pivot=5.0, slope=0.3))
    assert method_label(cfg) == "pivot_slope@0.3"
    assert method_label(MatchConfig(method="number")) == "number"
