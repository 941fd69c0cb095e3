"""Text ranking scores over OER bodies: Dirichlet-smoothed query likelihood
and BM25, both over the shared tokenizer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .text import DEFAULT_SETTINGS, TokenizerSettings, tokenize


@dataclass
class CollectionStats:
    """Corpus-level term statistics over all OER bodies."""

    term_counts: dict[str, int] = field(default_factory=dict)  # collection frequency
    doc_freq: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    total_terms: int = 0

    @property
    def avg_doc_len(self) -> float:
        return self.total_terms / self.n_docs if self.n_docs else 0.0

    def p_collection(self, term: str) -> float:
        if self.total_terms == 0:
            return 0.0
        return self.term_counts.get(term, 0) / self.total_terms

    @classmethod
    def build(cls, docs: Iterable[list[str]]) -> "CollectionStats":
        stats = cls()
        for tokens in docs:
            stats.n_docs += 1
            stats.total_terms += len(tokens)
            for t in tokens:
                stats.term_counts[t] = stats.term_counts.get(t, 0) + 1
            for t in set(tokens):
                stats.doc_freq[t] = stats.doc_freq.get(t, 0) + 1
        return stats

    @classmethod
    def from_texts(cls, texts: Iterable[str],
                   settings: TokenizerSettings = DEFAULT_SETTINGS) -> "CollectionStats":
        return cls.build(tokenize(t, settings) for t in texts)


@dataclass
class LmResult:
    score: float
    skipped_terms: int = 0  # query terms with zero collection frequency
    degenerate: bool = False  # hit a zero numerator or denominator


def lm_score(
    query_terms: list[str],
    doc_terms: list[str],
    mu: float,
    stats: CollectionStats,
) -> LmResult:
    """Dirichlet-smoothed query log-likelihood.

    sum over query terms of log((tf + mu * p(t|C)) / (|d| + mu)). Terms
    absent from the whole collection are skipped and counted; a zero
    numerator or denominator (only possible with mu = 0) yields the
    -inf sentinel with the degenerate flag set.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if not query_terms:
        return LmResult(0.0)
    tf: dict[str, int] = {}
    for t in doc_terms:
        tf[t] = tf.get(t, 0) + 1
    dlen = len(doc_terms)

    score = 0.0
    skipped = 0
    degenerate = False
    for term in query_terms:
        p_c = stats.p_collection(term)
        if p_c == 0.0:
            skipped += 1
            continue
        numerator = tf.get(term, 0) + mu * p_c
        denominator = dlen + mu
        if numerator <= 0.0 or denominator <= 0.0:
            score = float("-inf")
            degenerate = True
            break
        score += math.log(numerator / denominator)
    return LmResult(score, skipped, degenerate)


def bm25_score(
    query_terms: list[str],
    doc_terms: list[str],
    k1: float,
    b: float,
    stats: CollectionStats,
) -> float:
    """BM25 with idf = log((N - df + 0.5) / (df + 0.5) + 1); repeated query
    terms contribute once per occurrence."""
    if k1 <= 0:
        raise ValueError(f"k1 must be > 0, got {k1}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must be in [0,1], got {b}")
    tf: dict[str, int] = {}
    for t in doc_terms:
        tf[t] = tf.get(t, 0) + 1
    dlen = len(doc_terms)
    avgdl = stats.avg_doc_len

    score = 0.0
    for term in query_terms:
        f = tf.get(term, 0)
        if f == 0:
            continue
        df = stats.doc_freq.get(term, 0)
        idf = math.log((stats.n_docs - df + 0.5) / (df + 0.5) + 1.0)
        length_norm = 1.0 - b + b * (dlen / avgdl) if avgdl > 0 else 1.0 - b
        score += idf * (f * (k1 + 1.0)) / (f + k1 * length_norm)
    return score
