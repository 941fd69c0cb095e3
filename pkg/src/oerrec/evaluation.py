"""Offline evaluation: per-query ranking metrics aggregated over seeded
cross-validation folds, paired system comparison, and the missing-profile
simulation that scores the two-step community assignment."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .community import DEFAULT_CLASSIFIER_GROUPS, cluster_readers
from .features import FeatureMatrix, RPF_GROUPS, combine_groups
from .maxent import predict_batch, train_maxent
from .metrics import average_precision_at_k, mrr, ndcg_at_k, sign_test
from .rankfeatures import QueryFeatures
from .ranker import (DEFAULT_RESTARTS, DEFAULT_THRESHOLD, rank_query,
                     train_communitized)
from .util import dump_json, fork_seed, load_json, rng_for

log = logging.getLogger(__name__)

METRIC_NAMES = ("map@3", "map@5", "map@all", "ndcg@3", "ndcg@5", "ndcg@all", "mrr")


def query_metrics(ranked_gains: list[int]) -> dict[str, float] | None:
    """All report metrics for one ranked gain list; None marks a skipped
    query (no positive gain anywhere, so nDCG normalization is undefined)."""
    if not any(g > 0 for g in ranked_gains):
        return None
    n = len(ranked_gains)
    return {
        "map@3": average_precision_at_k(ranked_gains, 3),
        "map@5": average_precision_at_k(ranked_gains, 5),
        "map@all": average_precision_at_k(ranked_gains, n),
        "ndcg@3": ndcg_at_k(ranked_gains, 3),
        "ndcg@5": ndcg_at_k(ranked_gains, 5),
        "ndcg@all": ndcg_at_k(ranked_gains, n),
        "mrr": mrr(ranked_gains),
    }


def _means(rows: list[dict[str, float]]) -> dict[str, float] | None:
    if not rows:
        return None
    return {m: float(np.mean([r[m] for r in rows])) for m in METRIC_NAMES}


@dataclass
class MetricReport:
    """Evaluated-query metrics for each system plus the paired raw values.

    Skipping is a property of the judgment list, not the system, so the
    skipped set is shared and evaluated + skipped = total for both systems.
    """

    per_query: dict[str, dict[str, dict[str, float]]]  # system -> qid -> metrics
    skipped: tuple[str, ...]
    fold_assignment: dict[str, int]
    folds: int
    extras: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    @property
    def systems(self) -> tuple[str, ...]:
        return tuple(self.per_query)

    @property
    def n_evaluated(self) -> int:
        first = next(iter(self.per_query.values()), {})
        return len(first)

    @property
    def n_total(self) -> int:
        return self.n_evaluated + len(self.skipped)

    def means(self, system: str) -> dict[str, float]:
        result = _means(list(self.per_query[system].values()))
        return result or {m: 0.0 for m in METRIC_NAMES}

    def fold_means(self, system: str) -> list[dict[str, float] | None]:
        out = []
        for f in range(self.folds):
            rows = [v for q, v in self.per_query[system].items()
                    if self.fold_assignment[q] == f]
            out.append(_means(rows))
        return out

    def paired_differences(self, metric: str, system_a: str, system_b: str) -> list[float]:
        a, b = self.per_query[system_a], self.per_query[system_b]
        return [a[q][metric] - b[q][metric] for q in sorted(a)]

    def sign_test_p(self, metric: str = "ndcg@3",
                    system_a: str = "communitized", system_b: str = "global") -> float:
        return sign_test(self.paired_differences(metric, system_a, system_b))

    def to_dict(self) -> dict:
        return {
            "systems": {
                s: {
                    "means": self.means(s),
                    "fold_means": self.fold_means(s),
                    "per_query": {q: self.per_query[s][q] for q in sorted(self.per_query[s])},
                }
                for s in self.per_query
            },
            "skipped_queries": sorted(self.skipped),
            "counts": {"total": self.n_total, "evaluated": self.n_evaluated,
                       "skipped": len(self.skipped)},
            "fold_assignment": dict(sorted(self.fold_assignment.items())),
            "folds": self.folds,
            "extras": self.extras,
            "settings": self.settings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            per_query={s: dict(v["per_query"]) for s, v in d["systems"].items()},
            skipped=tuple(d["skipped_queries"]),
            fold_assignment=dict(d["fold_assignment"]),
            folds=d["folds"],
            extras=d.get("extras", {}),
            settings=d.get("settings", {}),
        )


def write_report(report: MetricReport, path, meta: dict | None = None) -> None:
    dump_json(Path(path), report.to_dict(), meta)


def read_report(path) -> MetricReport:
    d = load_json(Path(path))
    d.pop("_meta", None)
    return MetricReport.from_dict(d)


# -- cross-validation --------------------------------------------------------

def make_folds(
    queries: list[QueryFeatures],
    assignment: dict[str, int],
    folds: int,
    seed: int,
) -> dict[str, int]:
    """Community-stratified fold assignment: shuffle each community's queries
    with the seed, then deal round-robin so fold sizes stay balanced."""
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if folds > len(queries):
        raise ValueError(f"folds={folds} exceeds query count {len(queries)}")
    rng = rng_for(seed, "cv-folds")
    by_community: dict[int, list[str]] = {}
    for q in sorted(queries, key=lambda q: q.query_id):
        by_community.setdefault(assignment[q.reader_id], []).append(q.query_id)
    fold_of: dict[str, int] = {}
    counter = 0
    for c in sorted(by_community):
        ids = by_community[c]
        for i in rng.permutation(len(ids)):
            fold_of[ids[i]] = counter % folds
            counter += 1
    return fold_of


def cross_validate_ranking(
    queries: list[QueryFeatures],
    feature_names: tuple[str, ...],
    assignment: dict[str, int],
    folds: int = 10,
    seed: int = 0,
    metric_spec: str = "ndcg@3",
    restarts: int = DEFAULT_RESTARTS,
    threshold: int = DEFAULT_THRESHOLD,
) -> MetricReport:
    """Per fold, train communitized and global models on the out-fold queries
    and score the in-fold ones with both, keeping per-query pairs."""
    fold_of = make_folds(queries, assignment, folds, seed)
    per_query: dict[str, dict[str, dict[str, float]]] = {"communitized": {}, "global": {}}
    skipped: list[str] = []

    for f in range(folds):
        train = [q for q in queries if fold_of[q.query_id] != f]
        test = [q for q in queries if fold_of[q.query_id] == f]
        if not test:
            continue
        rset = train_communitized(
            train, assignment, feature_names, metric_spec, restarts, threshold,
            seed=fork_seed(seed, f"fold:{f}"))
        for q in test:
            community = assignment[q.reader_id]
            if community not in rset.models:
                log.info("fold %d: community %s has no model; query %s uses global",
                         f, community, q.query_id)
            comm_metrics = query_metrics(rank_query(rset.resolve(community), q))
            glob_metrics = query_metrics(rank_query(rset.global_model, q))
            if comm_metrics is None:
                skipped.append(q.query_id)
                continue
            per_query["communitized"][q.query_id] = comm_metrics
            per_query["global"][q.query_id] = glob_metrics

    return MetricReport(
        per_query=per_query,
        skipped=tuple(sorted(skipped)),
        fold_assignment=fold_of,
        folds=folds,
        settings={"folds": folds, "seed": seed, "metric": metric_spec,
                  "restarts": restarts, "threshold": threshold},
    )


# -- missing-profile simulation ----------------------------------------------

def simulate_missing_rpf(
    fm: FeatureMatrix,
    queries: list[QueryFeatures],
    feature_names: tuple[str, ...],
    fraction: float = 0.25,
    folds: int = 4,
    seed: int = 0,
    k: int = 3,
    distance: str = "euclidean",
    lam: float = 1.0,
    cv_folds: int = 10,
    metric_spec: str = "ndcg@3",
    restarts: int = DEFAULT_RESTARTS,
    threshold: int = DEFAULT_THRESHOLD,
    cluster_groups: tuple[str, ...] = RPF_GROUPS,
    classifier_groups: tuple[str, ...] = DEFAULT_CLASSIFIER_GROUPS,
) -> MetricReport:
    """Strip profiles from successive reader folds, predict those readers'
    communities from behavior alone, and rerun the ranking evaluation on the
    partially predicted assignment.

    Reference communities come from one profile clustering over all readers,
    so per-fold predictions share a single label space and a perfect
    classifier reproduces the full-profile run exactly. The report's extras
    carry the prediction accuracy and confusion counts.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0,1], got {fraction}")
    if folds < 1:
        raise ValueError(f"folds must be >= 1, got {folds}")
    if folds * fraction > 1.0 + 1e-9:
        raise ValueError(f"folds*fraction = {folds * fraction} exceeds the reader pool")
    lacking = sorted(r for r, has in fm.has_rpf.items() if not has)
    if lacking:
        raise ValueError(f"simulation requires profiles for all readers; missing: {lacking}")

    readers = list(fm.reader_ids)
    reference = cluster_readers(
        combine_groups(fm, cluster_groups), k, distance,
        fork_seed(seed, "sim-reference"), cluster_groups).assignment

    order = [readers[i] for i in rng_for(seed, "sim-folds").permutation(len(readers))]
    n = len(readers)
    held_out: list[list[str]] = []
    for f in range(folds):
        lo = round(f * fraction * n)
        hi = round((f + 1) * fraction * n)
        held_out.append(order[lo:hi])

    behavior = combine_groups(fm, classifier_groups)
    row = {r: i for i, r in enumerate(behavior.reader_ids)}
    predicted = dict(reference)
    confusion = np.zeros((k, k), dtype=np.int64)
    n_predicted = n_correct = 0
    for f, held in enumerate(held_out):
        if not held:
            continue
        known = [r for r in readers if r not in set(held)]
        X_train = behavior.X[[row[r] for r in known]]
        y_train = np.array([reference[r] for r in known])
        model = train_maxent(X_train, y_train, lam)
        X_held = behavior.X[[row[r] for r in held]]
        zero_rows = [r for r, x in zip(held, X_held) if not np.any(x)]
        if zero_rows:
            log.info("fold %d: readers %s have no behavior signal; "
                     "prediction falls back to intercept-only scores", f, zero_rows)
        labels, _ = predict_batch(model, X_held)
        for r, c in zip(held, labels):
            predicted[r] = int(c)
            confusion[reference[r], int(c)] += 1
            n_predicted += 1
            n_correct += int(c == reference[r])

    report = cross_validate_ranking(
        queries, feature_names, predicted, cv_folds,
        fork_seed(seed, "sim-cv"), metric_spec, restarts, threshold)
    report.extras = {
        "community_prediction_accuracy": (n_correct / n_predicted) if n_predicted else None,
        "confusion": confusion.tolist(),
        "n_predicted": n_predicted,
        "fraction": fraction,
        "reader_folds": folds,
        "reference_assignment": dict(sorted(reference.items())),
        "predicted_assignment": dict(sorted(predicted.items())),
    }
    report.settings.update({"simulation": {"fraction": fraction, "folds": folds,
                                           "k": k, "lambda": lam, "seed": seed}})
    return report
