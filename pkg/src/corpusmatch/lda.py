"""Topic model used by the divergence metric: collapsed Gibbs LDA.

Standard collapsed Gibbs sampling (Griffiths & Steyvers style): per-token
topic assignments are resampled for a fixed number of sweeps, and the
document-topic / topic-word distributions are read off the final-state
counts with additive smoothing. Sampling uses an inline splitmix64 stream
so a given seed is bitwise reproducible regardless of global RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .corpus import Corpus
from .errors import DataError

# Compact english stopword list for vocabulary construction; callers can
# pass their own. No stemming or lemmatization is applied.
DEFAULT_STOPWORDS = frozenset(
    """a about above after again all also an and any are as at be because been
    before being below between both but by could did do does doing down during
    each few for from further had has have having he her here hers herself him
    himself his how i if in into is it its itself just me more most my myself
    no nor not now of off on once only or other our ours ourselves out over own
    s same she should so some such t than that the their theirs them themselves
    then there these they this those through to too under until up very was we
    were what when where which while who whom why will with you your yours
    yourself yourselves""".split()
)


@dataclass
class LdaModel:
    n_topics: int
    topic_word: np.ndarray  # (n_topics, vocab) rows sum to 1
    doc_topic: dict[str, np.ndarray]  # article id -> distribution over topics
    vocabulary: list[str]
    seed: int
    iterations: int
    alpha: float
    beta: float
    meta: dict = field(default_factory=dict)


@njit(cache=True)
def _run_gibbs(doc_of, word_of, z, n_dk, n_kw, n_k, alpha, beta, iterations, seed):
    n_tokens = len(word_of)
    n_topics = n_dk.shape[1]
    vocab = n_kw.shape[1]
    state = np.uint64(seed) * np.uint64(2685821657736338717) + np.uint64(1)
    cum = np.empty(n_topics, dtype=np.float64)

    # initial assignments from the same deterministic stream
    for i in range(n_tokens):
        state = state + np.uint64(0x9E3779B97F4A7C15)
        x = state
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
        k = int(x % np.uint64(n_topics))
        z[i] = k
        n_dk[doc_of[i], k] += 1
        n_kw[k, word_of[i]] += 1
        n_k[k] += 1

    for _ in range(iterations):
        for i in range(n_tokens):
            d = doc_of[i]
            w = word_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1

            total = 0.0
            for t in range(n_topics):
                p = (
                    (n_kw[t, w] + beta)
                    * (n_dk[d, t] + alpha)
                    / (n_k[t] + beta * vocab)
                )
                total += p
                cum[t] = total

            state = state + np.uint64(0x9E3779B97F4A7C15)
            x = state
            x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            x = x ^ (x >> np.uint64(31))
            u = (x >> np.uint64(11)) * (1.0 / 9007199254740992.0) * total

            newk = n_topics - 1
            for t in range(n_topics):
                if u < cum[t]:
                    newk = t
                    break

            z[i] = newk
            n_dk[d, newk] += 1
            n_kw[newk, w] += 1
            n_k[newk] += 1


def train_lda(
    corpus: Corpus,
    n_topics: int = 100,
    seed: int = 0,
    iterations: int = 200,
    alpha: float | None = None,
    beta: float = 0.01,
    stopwords=DEFAULT_STOPWORDS,
) -> LdaModel:
    """Fit LDA over the whole corpus; deterministic for a fixed seed.

    The vocabulary is the case-folded token set minus stopwords. Documents
    with no in-vocabulary tokens get the uniform (pure-prior) distribution.
    """
    if len(corpus) == 0:
        raise DataError("cannot train LDA on an empty corpus")
    if n_topics < 1:
        raise DataError("n_topics must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics

    vocab_set = set()
    for a in corpus:
        for tok in a.tokens:
            low = tok.lower()
            if low not in stopwords:
                vocab_set.add(low)
    if not vocab_set:
        raise DataError("empty vocabulary after stopword removal")
    vocabulary = sorted(vocab_set)
    word_id = {w: i for i, w in enumerate(vocabulary)}

    doc_of, word_of = [], []
    ids = []
    for d, a in enumerate(corpus):
        ids.append(a.id)
        for tok in a.tokens:
            j = word_id.get(tok.lower())
            if j is not None:
                doc_of.append(d)
                word_of.append(j)

    n_docs = len(ids)
    v = len(vocabulary)
    doc_of = np.asarray(doc_of, dtype=np.int64)
    word_of = np.asarray(word_of, dtype=np.int64)
    z = np.zeros(len(word_of), dtype=np.int64)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, v), dtype=np.int64)
    n_k = np.zeros(n_topics, dtype=np.int64)

    _run_gibbs(
        doc_of, word_of, z, n_dk, n_kw, n_k,
        float(alpha), float(beta), int(iterations), int(seed),
    )

    topic_word = (n_kw + beta) / (n_k[:, None] + beta * v)
    doc_len = n_dk.sum(axis=1)
    theta = (n_dk + alpha) / (doc_len[:, None] + alpha * n_topics)
    doc_topic = {aid: theta[i] for i, aid in enumerate(ids)}

    return LdaModel(
        n_topics=n_topics,
        topic_word=topic_word,
        doc_topic=doc_topic,
        vocabulary=vocabulary,
        seed=seed,
        iterations=iterations,
        alpha=alpha,
        beta=beta,
        meta={"n_docs": n_docs, "n_tokens": int(len(word_of))},
    )
