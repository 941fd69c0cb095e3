"""Reader communities: K-medoids clustering over unified feature vectors,
pairwise evaluation against reply ground truth, and the two-step assignment
that covers profile-less readers with a Maximum-Entropy classifier.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .features import FeatureMatrix, RBF_GROUPS, RPF_GROUPS, UnifiedVectors, combine_groups
from .kmedoids import kmedoids
from .maxent import MaxEntModel, predict_batch, train_maxent
from .util import atomic_write_text, rng_for

# Reply exchanges double as evaluation ground truth, so the behavior groups
# fed to the classifier exclude them by default.
DEFAULT_CLASSIFIER_GROUPS = tuple(g for g in RBF_GROUPS if g != "ReplyRelation")


@dataclass
class CommunityModel:
    k: int
    medoid_reader_ids: tuple[str, ...]
    assignment: dict[str, int]  # reader_id -> community index in [0, k)
    metric: str = "euclidean"
    source_groups: tuple[str, ...] = RPF_GROUPS
    cost: float = 0.0

    def members(self, community: int) -> list[str]:
        return sorted(r for r, c in self.assignment.items() if c == community)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "medoids": list(self.medoid_reader_ids),
            "assignment": dict(sorted(self.assignment.items())),
            "metric": self.metric,
            "source_groups": list(self.source_groups),
            "cost": self.cost,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CommunityModel":
        return cls(d["k"], tuple(d["medoids"]), dict(d["assignment"]),
                   d["metric"], tuple(d["source_groups"]), d["cost"])


def cluster_readers(
    vectors: UnifiedVectors,
    k: int,
    metric: str = "euclidean",
    seed: int = 0,
    source_groups: tuple[str, ...] = RPF_GROUPS,
) -> CommunityModel:
    """K-medoids over the unified vectors; rows arrive in sorted-reader order,
    so the result is invariant to how the corpus streams were ordered."""
    result = kmedoids(vectors.X, k, rng_for(seed, "kmedoids"), metric)
    readers = vectors.reader_ids
    return CommunityModel(
        k=k,
        medoid_reader_ids=tuple(readers[m] for m in result.medoid_indices),
        assignment={r: int(c) for r, c in zip(readers, result.assignment)},
        metric=metric,
        source_groups=source_groups,
        cost=result.cost,
    )


def pairwise_cluster_eval(
    assignment: dict[str, int],
    reply_pairs: set[frozenset],
) -> dict[str, float]:
    """Precision/recall/F1 of same-community pairs against reply pairs.

    Empty denominators yield 0 by convention.
    """
    for pair in reply_pairs:
        for reader in pair:
            if reader not in assignment:
                raise ValueError(f"reply pair names unclustered reader {reader!r}")
    readers = sorted(assignment)
    same = {frozenset((a, b))
            for a, b in itertools.combinations(readers, 2)
            if assignment[a] == assignment[b]}
    hit = len(same & reply_pairs)
    precision = hit / len(same) if same else 0.0
    recall = hit / len(reply_pairs) if reply_pairs else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


@dataclass
class TwoStepResult:
    community_model: CommunityModel
    maxent_model: MaxEntModel
    assignment: dict[str, int]  # every reader
    source: dict[str, str]  # reader_id -> "clustered" | "predicted"


def two_step_assign(
    fm: FeatureMatrix,
    k: int = 3,
    metric: str = "euclidean",
    lam: float = 1.0,
    seed: int = 0,
    cluster_groups: tuple[str, ...] = RPF_GROUPS,
    classifier_groups: tuple[str, ...] = DEFAULT_CLASSIFIER_GROUPS,
) -> TwoStepResult:
    """Cluster profile-bearing readers, then extend the assignment to the
    rest by a Maximum-Entropy classifier trained on behavior features.

    Steps: cluster readers with has_rpf on `cluster_groups`; use the cluster
    indices as labels; train the classifier on those readers'
    `classifier_groups` vectors; predict every remaining reader.
    """
    with_rpf = [r for r in fm.reader_ids if fm.has_rpf[r]]
    without_rpf = [r for r in fm.reader_ids if not fm.has_rpf[r]]
    if len(with_rpf) < k:
        raise ValueError(f"only {len(with_rpf)} profile-bearing readers for k={k}")

    cluster_vecs = combine_groups(fm.subset_readers(with_rpf), cluster_groups)
    model = cluster_readers(cluster_vecs, k, metric, seed, cluster_groups)

    behavior = combine_groups(fm, classifier_groups)
    row = {r: i for i, r in enumerate(behavior.reader_ids)}
    X_train = behavior.X[[row[r] for r in with_rpf]]
    y_train = np.array([model.assignment[r] for r in with_rpf])
    maxent = train_maxent(X_train, y_train, lam)
    maxent.feature_space = {"groups": list(classifier_groups), "dim": behavior.X.shape[1]}

    assignment = dict(model.assignment)
    source = {r: "clustered" for r in with_rpf}
    if without_rpf:
        labels, _ = predict_batch(maxent, behavior.X[[row[r] for r in without_rpf]])
        for r, c in zip(without_rpf, labels):
            assignment[r] = int(c)
            source[r] = "predicted"
    return TwoStepResult(model, maxent, assignment, source)


def reply_ground_truth(corpus: Corpus) -> set[frozenset]:
    return corpus.reply_pairs()


# -- communities.tsv ------------------------------------------------------

def write_communities(path, assignment: dict[str, int], source: dict[str, str],
                      comment: str | None = None) -> None:
    lines = ["# reader_id\tcommunity\tsource"]
    if comment:
        lines.append(f"# {comment}")
    for reader in sorted(assignment):
        lines.append(f"{reader}\t{assignment[reader]}\t{source.get(reader, 'clustered')}")
    atomic_write_text(Path(path), "".join(line + "\n" for line in lines))


def read_communities(path) -> tuple[dict[str, int], dict[str, str]]:
    assignment: dict[str, int] = {}
    source: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip() or raw.startswith("#"):
            continue
        reader, community, src = raw.split("\t")
        assignment[reader] = int(community)
        source[reader] = src
    return assignment, source
