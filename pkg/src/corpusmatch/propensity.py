"""Propensity-score model and the nearest-score matching loop.

A binary logistic regression over category features (one-hot or TF-IDF
weighted) estimates the probability that an article belongs to the target
group. Training is full-batch gradient descent on the mean L2-regularized
negative log-likelihood: deterministic, zero-initialized, fixed iteration
count. The bias term is not regularized.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import sparse

from .corpus import Article, Corpus
from .errors import DataError, NumericError
from .matchers import (
    MatchConfig,
    MatchedPair,
    MatchResult,
    REASON_POOL_EXHAUSTED,
    REASON_WEAK_PROPENSITY,
    apply_exclusions,
)
from .vectorize import IdfTable

_P_EPS = 1e-12


@dataclass(frozen=True)
class TrainingMeta:
    l2: float = 1e-4
    iterations: int = 500
    learning_rate: float = 0.1
    seed: int = 0
    final_loss: float | None = None


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    feature_map: dict[str, int]
    feature_kind: str  # "one_hot" | "tfidf"
    training_meta: TrainingMeta
    idf: IdfTable | None = None  # required for tfidf features at score time
    exclusions: tuple[str, ...] = ()


@dataclass(frozen=True)
class PropensityScores:
    scores: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for aid, p in self.scores.items():
            if not 0.0 < p < 1.0:
                raise DataError(f"propensity score for {aid!r} outside (0,1): {p}")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def loss_and_grad(w, b, X, y, l2):
    """Mean NLL + (l2/2)*||w||^2 and its exact gradient (bias unregularized)."""
    n = X.shape[0]
    z = X @ w + b
    # log(1+exp(z)) - y*z, computed stably
    nll = np.logaddexp(0.0, z) - y * z
    loss = nll.mean() + 0.5 * l2 * float(w @ w)
    resid = _sigmoid(z) - y
    grad_w = (X.T @ resid) / n + l2 * w
    grad_b = resid.mean()
    return loss, np.asarray(grad_w).ravel(), grad_b


def _feature_matrix(articles, feature_map, kind, idf, exclusions):
    rows, cols, vals = [], [], []
    for i, a in enumerate(articles):
        cats = apply_exclusions(a, exclusions)
        k = len(cats)
        for c in sorted(cats):
            j = feature_map.get(c)
            if j is None:
                continue
            rows.append(i)
            cols.append(j)
            vals.append(1.0 if kind == "one_hot" else idf.idf_of(c) / k)
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(articles), len(feature_map))
    )


def train(
    targets: Corpus,
    candidates: Corpus,
    kind: str = "one_hot",
    hyper: TrainingMeta | None = None,
    idf: IdfTable | None = None,
    exclusions: tuple[str, ...] = (),
) -> LogRegModel:
    """Fit the target-membership classifier on targets (label 1) vs candidates (0)."""
    if kind not in ("one_hot", "tfidf"):
        raise DataError(f"unknown feature kind: {kind!r}")
    if len(targets) == 0 or len(candidates) == 0:
        raise DataError("both corpora must be non-empty for propensity training")
    if kind == "tfidf" and idf is None:
        raise DataError("tfidf features require an IdfTable")
    hyper = hyper or TrainingMeta()

    arts = list(targets) + list(candidates)
    y = np.array([1.0] * len(targets) + [0.0] * len(candidates))
    cats = sorted({c for a in arts for c in apply_exclusions(a, exclusions)})
    feature_map = {c: j for j, c in enumerate(cats)}
    X = _feature_matrix(arts, feature_map, kind, idf, exclusions)

    w = np.zeros(len(feature_map))
    b = 0.0
    loss = None
    for _ in range(hyper.iterations):
        loss, gw, gb = loss_and_grad(w, b, X, y, hyper.l2)
        if not np.isfinite(loss):
            raise NumericError(
                f"propensity training diverged (loss={loss}); lower the learning rate"
            )
        w = w - hyper.learning_rate * gw
        b = b - hyper.learning_rate * gb
    final_loss, _, _ = loss_and_grad(w, b, X, y, hyper.l2)
    meta = TrainingMeta(
        l2=hyper.l2,
        iterations=hyper.iterations,
        learning_rate=hyper.learning_rate,
        seed=hyper.seed,
        final_loss=float(final_loss),
    )
    return LogRegModel(
        weights=w,
        bias=float(b),
        feature_map=feature_map,
        feature_kind=kind,
        training_meta=meta,
        idf=idf,
        exclusions=tuple(exclusions),
    )


def score(model: LogRegModel, a: Article) -> float:
    """sigmoid(bias + w . features(a)); unknown categories contribute 0."""
    cats = apply_exclusions(a, model.exclusions)
    z = model.bias
    k = len(cats)
    for c in sorted(cats):
        j = model.feature_map.get(c)
        if j is None:
            continue
        x = 1.0 if model.feature_kind == "one_hot" else model.idf.idf_of(c) / k
        z += model.weights[j] * x
    return float(np.clip(_sigmoid(z), _P_EPS, 1.0 - _P_EPS))


def score_all(model: LogRegModel, corpus: Corpus) -> PropensityScores:
    return PropensityScores({a.id: score(model, a) for a in corpus})


def greedy_match_propensity(
    targets: Corpus,
    candidates: Corpus,
    model: LogRegModel,
    cfg: MatchConfig,
) -> tuple[MatchResult, PropensityScores]:
    """Nearest-propensity matching with the same reuse cap as direct methods.

    Per target (ascending id) the candidate minimizing |p(c) - p(t)| with
    remaining budget is chosen; ties break on ascending candidate id.
    Shared-category counts are recorded for reporting only.
    """
    if len(candidates) == 0:
        raise DataError("candidate pool is empty")
    overlap = set(targets.ids()) & set(candidates.ids())
    if overlap:
        raise DataError(f"target and candidate ids overlap: {sorted(overlap)[:5]}")

    cand_list = list(candidates)
    p_cand = np.array([score(model, c) for c in cand_list])
    scores = {c.id: float(p) for c, p in zip(cand_list, p_cand)}
    remaining = np.full(len(cand_list), cfg.max_reuse, dtype=np.int64)
    pairs: list[MatchedPair] = []

    for t in targets:
        p_t = score(model, t)
        scores[t.id] = p_t
        usable = remaining > 0
        if not usable.any():
            pairs.append(MatchedPair(t.id, None, 0.0, 0, True, REASON_POOL_EXHAUSTED))
            continue
        d = np.abs(p_cand - p_t)
        best = np.min(np.where(usable, d, np.inf))
        j = int(np.argmax(usable & (d == best)))
        shared = len(t.categories & cand_list[j].categories)
        pairs.append(MatchedPair(t.id, cand_list[j].id, float(d[j]), shared, False))
        remaining[j] -= 1

    return MatchResult(pairs=pairs, config=cfg), PropensityScores(scores)


def discard_weak_propensity(
    result: MatchResult, scores: PropensityScores
) -> MatchResult:
    """Flag pairs whose |p(t)-p(c)| exceeds mean + 1 population sd of all gaps."""
    matched = result.matched_pairs()
    diffs = np.array(
        [abs(scores.scores[p.target_id] - scores.scores[p.comparison_id]) for p in matched]
    )
    if len(diffs) < 2:
        warnings.warn(
            "fewer than 2 matched pairs: propensity gap sd undefined, nothing discarded"
        )
        return MatchResult(pairs=list(result.pairs), config=result.config)
    threshold = diffs.mean() + diffs.std()  # population sd
    out = []
    for p in result.pairs:
        if p.comparison_id is None:
            out.append(p)
            continue
        d = abs(scores.scores[p.target_id] - scores.scores[p.comparison_id])
        if d > threshold:
            out.append(
                MatchedPair(
                    p.target_id, p.comparison_id, p.score, p.shared_categories,
                    True, REASON_WEAK_PROPENSITY,
                )
            )
        else:
            out.append(p)
    return MatchResult(pairs=out, config=result.config)


def save_model(model: LogRegModel, path) -> None:
    """Audit dump: feature map, weights, bias, training metadata."""
    payload = {
        "feature_kind": model.feature_kind,
        "feature_map": model.feature_map,
        "weights": [float(w) for w in model.weights],
        "bias": model.bias,
        "training_meta": asdict(model.training_meta),
        "exclusions": list(model.exclusions),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path, idf: IdfTable | None = None) -> LogRegModel:
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    return LogRegModel(
        weights=np.array(d["weights"]),
        bias=d["bias"],
        feature_map={k: int(v) for k, v in d["feature_map"].items()},
        feature_kind=d["feature_kind"],
        training_meta=TrainingMeta(**d["training_meta"]),
        idf=idf,
        exclusions=tuple(d.get("exclusions", ())),
    )
