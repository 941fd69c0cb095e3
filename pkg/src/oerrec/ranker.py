"""Linear learning-to-rank by coordinate ascent on a list-wise metric
(default nDCG@3), one model per community plus a global fallback.

Training evaluates the mean metric over every query at once: scores live in
a padded (queries, max_candidates) array, candidate weight values for one
coordinate are batched along a leading axis, and the induced rankings come
from one lexsort (descending score, ascending oer_id as the tie-break).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rankfeatures import QueryFeatures, RankFeatureVector
from .util import dump_json, fork_seed, load_json, rng_for

STEP_GRID = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
SWEEP_TOL = 1e-5
MAX_SWEEPS = 25
DEFAULT_RESTARTS = 5
DEFAULT_THRESHOLD = 10
RELEVANCE_THRESHOLD = 1


@dataclass
class NormRecord:
    """Per-feature min/max captured at training time; inference clamps."""

    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        out = np.zeros_like(X, dtype=np.float64)
        np.divide(X - self.mins, span, out=out, where=span > 0)
        return np.clip(out, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormRecord":
        return cls(np.asarray(d["mins"], dtype=np.float64),
                   np.asarray(d["maxs"], dtype=np.float64))


@dataclass
class RankingModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray  # L1-normalized unless all-zero
    metric_name: str
    metric_value: float
    community: str  # community index as string, or "global"
    norm: NormRecord
    trace: list[float] = field(default_factory=list)  # metric after each accepted step

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "metric": {"name": self.metric_name, "value": self.metric_value},
            "community": self.community,
            "normalization": self.norm.to_dict(),
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RankingModel":
        return cls(
            tuple(d["feature_names"]),
            np.asarray(d["weights"], dtype=np.float64),
            d["metric"]["name"],
            d["metric"]["value"],
            d["community"],
            NormRecord.from_dict(d["normalization"]),
            list(d.get("trace", [])),
        )


# -- padded training representation ----------------------------------------

@dataclass
class _Padded:
    X: np.ndarray  # (Q, C, d) normalized features, zero padding
    gains: np.ndarray  # (Q, C) float, zero padding
    pad: np.ndarray  # (Q, C) bool
    tie: np.ndarray  # (Q, C) rank of oer_id within the query, large padding


def _pad_queries(queries: list[QueryFeatures], norm: NormRecord) -> _Padded:
    Q = len(queries)
    C = max(len(q.candidates) for q in queries)
    d = queries[0].X.shape[1]
    X = np.zeros((Q, C, d))
    gains = np.zeros((Q, C))
    pad = np.ones((Q, C), dtype=bool)
    tie = np.full((Q, C), C, dtype=np.int64)
    for qi, q in enumerate(queries):
        n = len(q.candidates)
        X[qi, :n] = norm.apply(q.X)
        gains[qi, :n] = q.gains
        pad[qi, :n] = False
        order = sorted(range(n), key=lambda i: q.candidates[i])
        for rank, i in enumerate(order):
            tie[qi, i] = rank
    return _Padded(X, gains, pad, tie)


class _MeanMetric:
    """Mean training metric over queries for batched score arrays.

    Accepts scores shaped (..., Q, C) and returns (...); queries without a
    positive gain were dropped before padding, so every row counts.
    """

    def __init__(self, padded: _Padded, metric_spec: str):
        self.p = padded
        m = re.fullmatch(r"(ndcg|map)@(\d+)|mrr", metric_spec)
        if not m:
            raise ValueError(f"unknown metric spec {metric_spec!r}")
        self.kind = "mrr" if m.group(0) == "mrr" else m.group(1)
        self.k = int(m.group(2)) if m.group(2) else None
        C = padded.gains.shape[1]
        self.discounts = 1.0 / np.log2(np.arange(C) + 2.0)
        if self.kind == "ndcg":
            ideal = -np.sort(-padded.gains, axis=1)
            self.idcg = (ideal[:, :self.k] * self.discounts[:self.k]).sum(axis=1)
        rel = (padded.gains >= RELEVANCE_THRESHOLD) & ~padded.pad
        self.total_relevant = rel.sum(axis=1)

    def __call__(self, scores: np.ndarray) -> np.ndarray:
        p = self.p
        masked = np.where(p.pad, -np.inf, scores)
        order = np.lexsort((np.broadcast_to(p.tie, masked.shape), -masked), axis=-1)
        g = np.take_along_axis(np.broadcast_to(p.gains, masked.shape), order, axis=-1)
        if self.kind == "ndcg":
            dcg = (g[..., :self.k] * self.discounts[:self.k]).sum(axis=-1)
            return (dcg / self.idcg).mean(axis=-1)
        rel = g >= RELEVANCE_THRESHOLD
        if self.kind == "map":
            ranks = np.arange(1, g.shape[-1] + 1, dtype=np.float64)
            precision = np.cumsum(rel, axis=-1) / ranks
            ap_num = (precision * rel)[..., :self.k].sum(axis=-1)
            denom = np.minimum(self.total_relevant, self.k)
            return (ap_num / denom).mean(axis=-1)
        first = np.argmax(rel, axis=-1)
        return (1.0 / (first + 1.0)).mean(axis=-1)  # every query has a relevant item


def _fit_norm(queries: list[QueryFeatures]) -> NormRecord:
    rows = np.concatenate([q.X for q in queries], axis=0)
    return NormRecord(rows.min(axis=0), rows.max(axis=0))


def coordinate_ascent_train(
    queries: list[QueryFeatures],
    feature_names: tuple[str, ...],
    metric_spec: str = "ndcg@3",
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    community: str = "global",
) -> RankingModel:
    """Cycle over coordinates; for each, probe a fixed grid of values around
    the current weight (multiplicative steps, sign flips, and zero) and keep
    the best improvement. A restart ends when no coordinate improves the
    mean metric by more than 1e-5; the best restart wins, first restart and
    uniform weights coming first.
    """
    trainable = [q for q in queries if (q.gains > 0).any()]
    if not trainable:
        raise ValueError("untrainable: no query with a positive gain")
    norm = _fit_norm(queries)
    padded = _pad_queries(trainable, norm)
    mean_metric = _MeanMetric(padded, metric_spec)
    d = len(feature_names)

    best: tuple[float, int, np.ndarray, list[float]] | None = None
    for r in range(restarts):
        if r == 0:
            w = np.full(d, 1.0 / d)
        else:
            w = rng_for(seed, f"restart:{r}").uniform(-1.0, 1.0, d)
        scores = padded.X @ w
        current = float(mean_metric(scores))
        trace = [current]
        for _ in range(MAX_SWEEPS):
            sweep_gain = 0.0
            for j in range(d):
                base = w[j] if w[j] != 0.0 else 1.0
                values = np.array(
                    [m * base for m in STEP_GRID]
                    + [-m * base for m in STEP_GRID] + [0.0])
                batch = scores[None] + (values - w[j])[:, None, None] * padded.X[:, :, j][None]
                metrics = mean_metric(batch)
                bi = int(np.argmax(metrics))
                gain = float(metrics[bi]) - current
                if gain > 0.0:
                    w[j] = values[bi]
                    scores = batch[bi]
                    current = float(metrics[bi])
                    trace.append(current)
                    sweep_gain = max(sweep_gain, gain)
            if sweep_gain <= SWEEP_TOL:
                break
        if best is None or current > best[0]:
            best = (current, r, w.copy(), trace)

    metric_value, _, weights, trace = best
    l1 = np.abs(weights).sum()
    if l1 > 0:
        weights = weights / l1
    return RankingModel(tuple(feature_names), weights, metric_spec,
                        metric_value, community, norm, trace)


# -- applying a model -------------------------------------------------------

def rank(model: RankingModel, vectors: list[RankFeatureVector]) -> list[tuple[str, float]]:
    """Descending score, ties by ascending oer_id."""
    for v in vectors:
        if v.names != model.feature_names:
            raise ValueError(
                f"feature names {v.names} do not match model {model.feature_names}")
    if not vectors:
        return []
    X = model.norm.apply(np.stack([v.values for v in vectors]))
    scores = X @ model.weights
    order = sorted(range(len(vectors)), key=lambda i: (-scores[i], vectors[i].oer_id))
    return [(vectors[i].oer_id, float(scores[i])) for i in order]


def rank_query(model: RankingModel, q: QueryFeatures) -> list[int]:
    """Gains of the query's candidates in the model's ranked order."""
    X = model.norm.apply(q.X)
    scores = X @ model.weights
    order = sorted(range(len(q.candidates)), key=lambda i: (-scores[i], q.candidates[i]))
    return [int(q.gains[i]) for i in order]


# -- per-community training --------------------------------------------------

@dataclass
class CommunityRankerSet:
    models: dict[int, RankingModel]  # communities trained on their own data
    global_model: RankingModel
    threshold: int

    def resolve(self, community: int | None) -> RankingModel:
        if community is not None and community in self.models:
            return self.models[community]
        return self.global_model


def train_communitized(
    queries: list[QueryFeatures],
    assignment: dict[str, int],
    feature_names: tuple[str, ...],
    metric_spec: str = "ndcg@3",
    restarts: int = DEFAULT_RESTARTS,
    threshold: int = DEFAULT_THRESHOLD,
    seed: int = 0,
) -> CommunityRankerSet:
    """One model per community with >= threshold judged queries, plus the
    global model every small or unseen community falls back to."""
    if not queries:
        raise ValueError("zero judgments overall")
    missing = sorted({q.reader_id for q in queries} - set(assignment))
    if missing:
        raise ValueError(f"readers without community assignment: {missing}")
    global_model = coordinate_ascent_train(
        queries, feature_names, metric_spec, restarts, seed, community="global")
    models: dict[int, RankingModel] = {}
    for c in sorted(set(assignment.values())):
        subset = [q for q in queries if assignment[q.reader_id] == c]
        if len(subset) < threshold or not any((q.gains > 0).any() for q in subset):
            continue
        models[c] = coordinate_ascent_train(
            subset, feature_names, metric_spec, restarts,
            seed=fork_seed(seed, f"community:{c}"), community=str(c))
    return CommunityRankerSet(models, global_model, threshold)


# -- serialization -----------------------------------------------------------

def write_model(model: RankingModel, path, meta: dict | None = None) -> None:
    dump_json(Path(path), model.to_dict(), meta)


def read_model(path) -> RankingModel:
    d = load_json(Path(path))
    d.pop("_meta", None)
    return RankingModel.from_dict(d)


def write_rankerset(rset: CommunityRankerSet, out_dir, meta: dict | None = None) -> None:
    out = Path(out_dir)
    index = {"global": "model_global.json", "communities": {},
             "threshold": rset.threshold}
    write_model(rset.global_model, out / "model_global.json", meta)
    for c, model in sorted(rset.models.items()):
        name = f"model_c{c}.json"
        write_model(model, out / name, meta)
        index["communities"][str(c)] = name
    dump_json(out / "rankerset.json", index, meta)


def read_rankerset(in_dir) -> CommunityRankerSet:
    base = Path(in_dir)
    index = load_json(base / "rankerset.json")
    models = {int(c): read_model(base / name)
              for c, name in index["communities"].items()}
    return CommunityRankerSet(models, read_model(base / index["global"]),
                              index["threshold"])
