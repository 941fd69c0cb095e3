"""Ranking metrics over graded lists: nDCG@k, MAP@k, MRR, and a paired sign
test for system comparisons.

Grades are the linear gains 2 (Good), 1 (OK), 0 (Bad); NotSure judgments
are removed before lists reach this module. Relevance for MAP/MRR is
grade >= 1. Queries whose ideal DCG is zero have no defined normalization
and are reported as skipped rather than scored.
"""

from __future__ import annotations

import math
from typing import Sequence

RELEVANCE_THRESHOLD = 1


def dcg_at_k(grades: Sequence[int], k: int) -> float:
    return sum(g / math.log2(i + 2) for i, g in enumerate(grades[:k]))


def ndcg_at_k(grades: Sequence[int], k: int) -> float | None:
    """nDCG with linear gain; None marks a skipped query (zero ideal gain)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ideal = sorted(grades, reverse=True)
    idcg = dcg_at_k(ideal, k)
    if idcg == 0.0:
        return None
    return dcg_at_k(grades, k) / idcg


def average_precision_at_k(grades: Sequence[int], k: int) -> float:
    """AP@k with the min(total relevant, k) denominator; 0 if nothing is
    relevant anywhere in the list."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = [g >= RELEVANCE_THRESHOLD for g in grades]
    total_relevant = sum(relevant)
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for i in range(min(k, len(grades))):
        if relevant[i]:
            hits += 1
            precision_sum += hits / (i + 1)
    return precision_sum / min(total_relevant, k)


def mrr(grades: Sequence[int]) -> float:
    for i, g in enumerate(grades):
        if g >= RELEVANCE_THRESHOLD:
            return 1.0 / (i + 1)
    return 0.0


def sign_test(differences: Sequence[float]) -> float:
    """One-sided paired sign test p-value for "first system beats second".

    differences are per-query (first - second); zeros are discarded. The
    p-value is P(X >= positives) for X ~ Binomial(nonzero count, 1/2);
    with no nonzero differences the test is uninformative (p = 1).
    """
    positives = sum(1 for d in differences if d > 0)
    negatives = sum(1 for d in differences if d < 0)
    n = positives + negatives
    if n == 0:
        return 1.0
    return sum(math.comb(n, i) for i in range(positives, n + 1)) / 2.0 ** n
