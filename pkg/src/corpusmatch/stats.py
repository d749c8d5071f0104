"""Significance machinery: paired t, Welch t, McNemar, Benjamini-Hochberg.

All functions are pure. Degenerate inputs return the declared degenerate
results (p = 1.0) instead of raising, so analysis tables never crash on
identical matched slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import stats as _sps

from .errors import DataError


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float | None
    p_value: float
    n: int
    method: str

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DataError(f"p-value out of range: {self.p_value}")


def paired_t(xs, ys) -> TestResult:
    """Two-sided paired t-test on per-pair differences.

    Zero-variance differences (including the all-zero self-match case)
    return statistic 0 and p = 1.0 by contract.
    """
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        raise DataError("paired_t requires equal-length lists")
    n = len(xs)
    if n < 2:
        raise DataError("paired_t requires at least 2 pairs")
    d = [x - y for x, y in zip(xs, ys)]
    mean = sum(d) / n
    var = sum((v - mean) ** 2 for v in d) / (n - 1)
    if var == 0.0:
        return TestResult(statistic=0.0, df=float(n - 1), p_value=1.0, n=n, method="paired_t")
    t = mean / math.sqrt(var / n)
    p = float(2.0 * _sps.t.sf(abs(t), n - 1))
    return TestResult(statistic=t, df=float(n - 1), p_value=min(1.0, p), n=n, method="paired_t")


def welch_t(xs, ys) -> TestResult:
    """Two-sided Welch t-test for independent samples (unmatched contrasts)."""
    xs, ys = list(xs), list(ys)
    if len(xs) < 2 or len(ys) < 2:
        raise DataError("welch_t requires at least 2 observations per group")
    n1, n2 = len(xs), len(ys)
    m1, m2 = sum(xs) / n1, sum(ys) / n2
    v1 = sum((x - m1) ** 2 for x in xs) / (n1 - 1)
    v2 = sum((y - m2) ** 2 for y in ys) / (n2 - 1)
    if v1 == 0.0 and v2 == 0.0:
        p = 1.0 if m1 == m2 else 0.0
        return TestResult(statistic=0.0, df=None, p_value=p, n=n1 + n2, method="welch_t")
    se2 = v1 / n1 + v2 / n2
    t = (m1 - m2) / math.sqrt(se2)
    df = se2**2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    p = float(2.0 * _sps.t.sf(abs(t), df))
    return TestResult(statistic=t, df=df, p_value=min(1.0, p), n=n1 + n2, method="welch_t")


def mcnemar(b: int, c: int, *, exact_below: int | None = None) -> TestResult:
    """McNemar's test on the discordant-pair counts.

    b = first-group-yes / second-group-no pairs, c = the reverse. Uses the
    continuity-corrected chi-square statistic (|b-c|-1)^2/(b+c) with 1 df.
    When `exact_below` is given and b+c falls under it, an exact two-sided
    binomial test on (b, b+c, 0.5) is used instead. b+c = 0 degenerates to
    p = 1.0.
    """
    if b < 0 or c < 0:
        raise DataError("discordant counts must be non-negative")
    n = b + c
    if n == 0:
        return TestResult(statistic=0.0, df=None, p_value=1.0, n=0, method="mcnemar")
    if exact_below is not None and n < exact_below:
        p = float(_sps.binomtest(b, n, 0.5).pvalue)
        return TestResult(statistic=float(b), df=None, p_value=min(1.0, p), n=n, method="mcnemar_exact")
    chi2 = (abs(b - c) - 1) ** 2 / n
    p = _sps.chi2.sf(chi2, 1)
    return TestResult(statistic=chi2, df=None, p_value=min(1.0, float(p)), n=n, method="mcnemar")


def benjamini_hochberg(p_values, alpha: float = 0.05) -> tuple[list[bool], list[float]]:
    """Step-up FDR control; returns (reject flags, adjusted p) in input order.

    Rejects hypotheses 1..k for the largest k with p(k) <= k*alpha/m over
    the ascending ordering; adjusted p(i) = min over j >= i of m*p(j)/j,
    clipped to 1.
    """
    p_values = list(p_values)
    m = len(p_values)
    if m == 0:
        raise DataError("benjamini_hochberg requires at least one p-value")
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must lie in (0, 1)")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise DataError(f"p-value out of range: {p}")

    order = sorted(range(m), key=lambda i: (p_values[i], i))
    k = 0
    for rank, idx in enumerate(order, start=1):
        if p_values[idx] <= rank * alpha / m:
            k = rank

    reject = [False] * m
    for rank, idx in enumerate(order, start=1):
        if rank <= k:
            reject[idx] = True

    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running = min(running, m * p_values[idx] / rank)
        adjusted[idx] = running
    return reject, adjusted
