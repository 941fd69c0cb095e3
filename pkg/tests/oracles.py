"""Brute-force reference implementations used to cross-check the package.

Every function here is a direct, unoptimized transcription of a defining
formula: plain Python loops, exhaustive enumeration, finite differences.
None of them import from ``oerrec`` (numpy is used only as an array
container), so agreement between these oracles and the optimized library
code is meaningful evidence that both are right.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

# --------------------------------------------------------------------------
# ranking metrics
# --------------------------------------------------------------------------


def oracle_dcg(grades, k):
    total = 0.0
    for i, g in enumerate(grades[:k]):
        total += g / math.log2(i + 2)
    return total


def oracle_ndcg(grades, k):
    ideal = sorted(grades, reverse=True)
    idcg = oracle_dcg(ideal, k)
    if idcg == 0.0:
        return None
    return oracle_dcg(grades, k) / idcg


def oracle_ap(grades, k, threshold=1):
    relevant = [g >= threshold for g in grades]
    total_relevant = sum(relevant)
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for i, rel in enumerate(relevant[:k]):
        if rel:
            hits += 1
            precision_sum += hits / (i + 1)
    return precision_sum / min(total_relevant, k)


def oracle_mrr(grades, threshold=1):
    for i, g in enumerate(grades):
        if g >= threshold:
            return 1.0 / (i + 1)
    return 0.0


def oracle_sign_test(differences):
    nonzero = [d for d in differences if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return 1.0
    positives = sum(1 for d in nonzero if d > 0)
    return sum(math.comb(n, i) for i in range(positives, n + 1)) / 2.0**n


# --------------------------------------------------------------------------
# distances and exhaustive K-medoids
# --------------------------------------------------------------------------


def oracle_distance(a, b, metric):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    if metric == "euclidean":
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    if metric == "manhattan":
        return sum(abs(x - y) for x, y in zip(a, b))
    if metric == "cosine":
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        if na == 0.0 and nb == 0.0:
            return 0.0
        if na == 0.0 or nb == 0.0:
            return 1.0
        dot = sum(x * y for x, y in zip(a, b))
        return 1.0 - dot / (na * nb)
    raise ValueError(metric)


def oracle_kmedoids_best(X, k, metric="euclidean"):
    """Optimal (cost, medoid set) by scanning every candidate medoid set."""
    n = len(X)
    best_cost = math.inf
    best_set = None
    for medoids in itertools.combinations(range(n), k):
        cost = 0.0
        for i in range(n):
            cost += min(oracle_distance(X[i], X[m], metric) for m in medoids)
        if cost < best_cost:
            best_cost = cost
            best_set = medoids
    return best_cost, best_set


# --------------------------------------------------------------------------
# pairwise clustering agreement
# --------------------------------------------------------------------------


def oracle_pairwise_eval(assignment, reply_pairs):
    readers = sorted(assignment)
    same = set()
    for a, b in itertools.combinations(readers, 2):
        if assignment[a] == assignment[b]:
            same.add(frozenset((a, b)))
    truth = {frozenset(p) for p in reply_pairs}
    tp = len(same & truth)
    precision = tp / len(same) if same else 0.0
    recall = tp / len(truth) if truth else 0.0
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return {"precision": precision, "recall": recall, "f1": f1}


# --------------------------------------------------------------------------
# meta-path walks by full tour enumeration
# --------------------------------------------------------------------------


def oracle_walk(adj, payload, steps, starts):
    """Tour enumeration on a plain dict graph.

    ``adj`` maps (vertex, edge_type) -> list of head vertices; ``payload``
    maps vertex -> oer-type string (or "" when untyped); ``steps`` is a list
    of (edge_type, oer_type_filter_or_None); ``starts`` the start vertices.
    Returns (scores dict, absorbed mass).  Start mass is uniform over the
    de-duplicated start set; each hop splits a tour's probability uniformly
    over the qualifying out-edges; tours with no qualifying continuation
    contribute their whole probability to the absorbed mass.
    """
    uniq = sorted(set(starts))
    scores: dict[str, float] = {}
    absorbed = 0.0

    def tour(vertex, depth, prob):
        nonlocal absorbed
        if depth == len(steps):
            scores[vertex] = scores.get(vertex, 0.0) + prob
            return
        edge_type, type_filter = steps[depth]
        heads = [
            h
            for h in adj.get((vertex, edge_type), [])
            if type_filter is None or payload.get(h, "") == type_filter
        ]
        if not heads:
            absorbed += prob
            return
        for h in heads:
            tour(h, depth + 1, prob / len(heads))

    for s in uniq:
        tour(s, 0, 1.0 / len(uniq))
    return scores, absorbed


# --------------------------------------------------------------------------
# retrieval scores
# --------------------------------------------------------------------------


def oracle_lm(query_terms, doc_terms, mu, term_counts, total_terms):
    """Dirichlet query likelihood; returns (score, skipped, degenerate)."""
    doc_len = len(doc_terms)
    score = 0.0
    skipped = 0
    degenerate = False
    for q in query_terms:
        cf = term_counts.get(q, 0)
        if cf == 0:
            skipped += 1
            continue
        tf = doc_terms.count(q)
        numerator = tf + mu * (cf / total_terms)
        denominator = doc_len + mu
        if numerator == 0.0 or denominator == 0.0:
            score = -math.inf
            degenerate = True
            break
        score += math.log(numerator / denominator)
    return score, skipped, degenerate


def oracle_bm25(query_terms, doc_terms, k1, b, doc_freq, n_docs, avg_doc_len):
    doc_len = len(doc_terms)
    score = 0.0
    for q in query_terms:
        df = doc_freq.get(q, 0)
        tf = doc_terms.count(q)
        if tf == 0:
            continue
        idf = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)
        if avg_doc_len == 0.0:
            norm = 1.0 - b
        else:
            norm = 1.0 - b + b * doc_len / avg_doc_len
        score += idf * tf * (k1 + 1.0) / (tf + k1 * norm)
    return score


# --------------------------------------------------------------------------
# MaxEnt objective and finite-difference gradient
# --------------------------------------------------------------------------


def maxent_objective(X, y, W, bias, lam):
    """Penalized log-likelihood; intercepts are not penalized."""
    total = 0.0
    for i in range(len(X)):
        z = [
            sum(W[c][j] * X[i][j] for j in range(len(X[i]))) + bias[c]
            for c in range(len(W))
        ]
        zmax = max(z)
        log_norm = zmax + math.log(sum(math.exp(v - zmax) for v in z))
        total += z[y[i]] - log_norm
    penalty = 0.5 * lam * sum(w * w for row in W for w in row)
    return total - penalty


def finite_diff_maxent_grad(X, y, W, bias, lam, eps=1e-6):
    """Central finite differences of ``maxent_objective`` in (W, bias)."""
    W = [list(row) for row in W]
    bias = list(bias)
    gW = [[0.0] * len(W[0]) for _ in W]
    gb = [0.0] * len(bias)
    for c in range(len(W)):
        for j in range(len(W[0])):
            orig = W[c][j]
            W[c][j] = orig + eps
            hi = maxent_objective(X, y, W, bias, lam)
            W[c][j] = orig - eps
            lo = maxent_objective(X, y, W, bias, lam)
            W[c][j] = orig
            gW[c][j] = (hi - lo) / (2 * eps)
        orig = bias[c]
        bias[c] = orig + eps
        hi = maxent_objective(X, y, W, bias, lam)
        bias[c] = orig - eps
        lo = maxent_objective(X, y, W, bias, lam)
        bias[c] = orig
        gb[c] = (hi - lo) / (2 * eps)
    return np.array(gW), np.array(gb)


def oracle_softmax(z):
    zmax = max(z)
    exps = [math.exp(v - zmax) for v in z]
    s = sum(exps)
    return [e / s for e in exps]


# --------------------------------------------------------------------------
# ranking with a fixed weight vector, and the 721-angle direction oracle
# --------------------------------------------------------------------------


def oracle_rank_order(candidates, scores):
    """Indices ordered by descending score, ascending candidate id on ties."""
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], candidates[i]))
    return order


def oracle_mean_ndcg3(queries, weights, mins, maxs):
    """Mean nDCG@3 of a linear scorer over min-max-normalized features.

    ``queries`` is a list of (candidates, gains, X) triples with raw
    feature rows; normalization mirrors the training convention: the span
    of a constant feature is treated as zero contribution.
    """
    values = []
    for candidates, gains, X in queries:
        scores = []
        for row in X:
            s = 0.0
            for j, w in enumerate(weights):
                span = maxs[j] - mins[j]
                v = (row[j] - mins[j]) / span if span > 0 else 0.0
                v = min(max(v, 0.0), 1.0)
                s += w * v
            scores.append(s)
        order = oracle_rank_order(candidates, scores)
        ranked = [gains[i] for i in order]
        nd = oracle_ndcg(ranked, 3)
        if nd is not None:
            values.append(nd)
    return sum(values) / len(values) if values else 0.0


def oracle_best_direction_ndcg3(queries, n_angles=721):
    """Exhaustive grid search over unit-circle weight directions (2 features)."""
    mins = [min(row[j] for _, _, X in queries for row in X) for j in range(2)]
    maxs = [max(row[j] for _, _, X in queries for row in X) for j in range(2)]
    best = -math.inf
    for i in range(n_angles):
        theta = 2.0 * math.pi * i / (n_angles - 1)
        w = [math.cos(theta), math.sin(theta)]
        value = oracle_mean_ndcg3(queries, w, mins, maxs)
        if value > best:
            best = value
    return best
