import numpy as np
import pytest

from corpusmatch.corpus import Corpus
from corpusmatch.errors import DataError
from corpusmatch.lda import train_lda

from conftest import make_article


def disjoint_vocab_corpus(n_docs=30, doc_len=400, seed=0):
    """Half the documents draw from vocabulary A, half from vocabulary B.

    Documents are long relative to the alpha prior so the smoothed
    doc-topic ceiling (L + alpha) / (L + K*alpha) clears 0.9.
    """
    rng = np.random.default_rng(seed)
    vocab_a = [f"alpha{i}" for i in range(15)]
    vocab_b = [f"beta{i}" for i in range(15)]
    arts = []
    for d in range(n_docs):
        vocab = vocab_a if d % 2 == 0 else vocab_b
        toks = [vocab[int(rng.integers(len(vocab)))] for _ in range(doc_len)]
        arts.append(make_article(f"d{d:03d}", ["c1", "c2"], tokens=toks))
    return Corpus(arts)


class TestTrainLda:
    def test_separates_disjoint_vocabularies(self):
        corpus = disjoint_vocab_corpus()
        model = train_lda(corpus, n_topics=2, seed=1, iterations=200)
        for a in corpus:
            assert model.doc_topic[a.id].max() >= 0.9

    def test_doc_topic_rows_normalized(self):
        corpus = disjoint_vocab_corpus(n_docs=10)
        model = train_lda(corpus, n_topics=4, seed=2, iterations=30)
        for vec in model.doc_topic.values():
            assert abs(vec.sum() - 1.0) <= 1e-9

    def test_topic_word_rows_normalized(self):
        corpus = disjoint_vocab_corpus(n_docs=10)
        model = train_lda(corpus, n_topics=4, seed=2, iterations=30)
        sums = model.topic_word.sum(axis=1)
        assert np.all(np.abs(sums - 1.0) <= 1e-9)

    def test_same_seed_identical(self):
        corpus = disjoint_vocab_corpus(n_docs=12)
        m1 = train_lda(corpus, n_topics=3, seed=9, iterations=50)
        m2 = train_lda(corpus, n_topics=3, seed=9, iterations=50)
        assert np.array_equal(m1.topic_word, m2.topic_word)
        for aid in m1.doc_topic:
            assert np.array_equal(m1.doc_topic[aid], m2.doc_topic[aid])

    def test_different_seed_differs(self):
        corpus = disjoint_vocab_corpus(n_docs=12)
        m1 = train_lda(corpus, n_topics=3, seed=1, iterations=50)
        m2 = train_lda(corpus, n_topics=3, seed=2, iterations=50)
        assert not np.array_equal(m1.topic_word, m2.topic_word)

    def test_stopwords_removed_from_vocabulary(self):
        arts = [make_article("a", ["c"], tokens=["the", "and", "quasar", "nebula"] * 5)]
        model = train_lda(Corpus(arts), n_topics=2, seed=0, iterations=5)
        assert set(model.vocabulary) == {"quasar", "nebula"}

    def test_empty_vocabulary_rejected(self):
        arts = [make_article("a", ["c"], tokens=["the", "and", "of"])]
        with pytest.raises(DataError):
            train_lda(Corpus(arts), n_topics=2, seed=0, iterations=5)

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            train_lda(Corpus([]), n_topics=2)

    def test_default_alpha_from_topics(self):
        corpus = disjoint_vocab_corpus(n_docs=6)
        model = train_lda(corpus, n_topics=10, seed=0, iterations=5)
        assert model.alpha == pytest.approx(5.0)

    def test_doc_without_vocab_tokens_gets_uniform(self):
        arts = [
            make_article("a", ["c"], tokens=["galaxy"] * 10),
            make_article("b", ["c"], tokens=["the", "and"]),  # all stopwords
        ]
        model = train_lda(Corpus(arts), n_topics=4, seed=0, iterations=10)
        assert np.allclose(model.doc_topic["b"], 0.25)
