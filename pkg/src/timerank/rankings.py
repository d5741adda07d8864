"""Simulated ground-truth evidence rankings derived from timestamp structure.

Each ranking method turns the day offsets of an evidence set into a relevance
ordering with explicit tie groups, plus an inclusion mask: undated snippets are
always excluded by the four temporal methods, and the claim-recency method
additionally excludes evidence published after the claim. The search-rank
baseline ignores timestamps entirely and orders by search result position.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .temporal import Claim, DeltaSet, EvidenceSet, compute_delta_set


class RankingMethod(Enum):
    EVIDENCE_RECENCY = "evidence_recency"
    CLAIM_RECENCY = "claim_recency"
    CLAIM_CLOSENESS = "claim_closeness"
    EVIDENCE_CLUSTERING = "evidence_clustering"
    SEARCH_RANK = "search_rank"

    @classmethod
    def from_name(cls, name: str) -> "RankingMethod":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown ranking method {name!r} (expected one of: {valid})")


TEMPORAL_METHODS = (
    RankingMethod.EVIDENCE_RECENCY,
    RankingMethod.CLAIM_RECENCY,
    RankingMethod.CLAIM_CLOSENESS,
    RankingMethod.EVIDENCE_CLUSTERING,
)


@dataclass(frozen=True)
class GroundTruthRanking:
    """A relevance ordering over the included snippets of one evidence set.

    ``order`` lists snippet indices most-relevant first and covers exactly the
    indices where ``included`` is true; ``tie_groups`` partitions ``order``
    into consecutive runs of equal relevance.
    """

    order: tuple[int, ...]
    tie_groups: tuple[tuple[int, ...], ...]
    included: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "tie_groups", tuple(tuple(g) for g in self.tie_groups))
        object.__setattr__(self, "included", tuple(bool(b) for b in self.included))
        flattened = tuple(i for group in self.tie_groups for i in group)
        if flattened != self.order:
            raise ValueError("tie_groups must partition order into consecutive groups")
        expected = {j for j, inc in enumerate(self.included) if inc}
        if len(set(self.order)) != len(self.order) or set(self.order) != expected:
            raise ValueError("order must be a permutation of the included indices")

    def included_indices(self) -> tuple[int, ...]:
        return tuple(j for j, inc in enumerate(self.included) if inc)

    def relevance_by_index(self) -> dict[int, int]:
        """Integer relevance per included snippet, higher meaning more relevant."""
        levels = {}
        n = len(self.tie_groups)
        for g, group in enumerate(self.tie_groups):
            for j in group:
                levels[j] = n - g
        return levels


def _ranking_from_keys(
    num_snippets: int,
    keyed: Sequence[tuple[int, int]],
    descending: bool,
) -> GroundTruthRanking:
    """Build a ranking from (snippet index, integer key) pairs; equal keys tie."""
    included = [False] * num_snippets
    for j, _ in keyed:
        included[j] = True
    ordered = sorted(keyed, key=lambda item: (-item[1] if descending else item[1], item[0]))
    groups: list[list[int]] = []
    last_key = None
    for j, key in ordered:
        if groups and key == last_key:
            groups[-1].append(j)
        else:
            groups.append([j])
            last_key = key
    order = tuple(j for group in groups for j in group)
    return GroundTruthRanking(order, tuple(tuple(g) for g in groups), tuple(included))


def evidence_recency_ranking(deltas: DeltaSet) -> GroundTruthRanking:
    """Most recently published evidence first, regardless of the claim date."""
    keyed = [(j, d) for j, d in enumerate(deltas.deltas) if d is not None]
    return _ranking_from_keys(len(deltas), keyed, descending=True)


def claim_recency_ranking(deltas: DeltaSet) -> GroundTruthRanking:
    """Evidence published at or before the claim, the most recent of those first.

    Evidence published after the claim is excluded from the ranking (masked),
    same as undated evidence.
    """
    keyed = [(j, d) for j, d in enumerate(deltas.deltas) if d is not None and d <= 0]
    return _ranking_from_keys(len(deltas), keyed, descending=True)


def claim_closeness_ranking(deltas: DeltaSet) -> GroundTruthRanking:
    """Evidence temporally closest to the claim first, by absolute day offset."""
    keyed = [(j, abs(d)) for j, d in enumerate(deltas.deltas) if d is not None]
    return _ranking_from_keys(len(deltas), keyed, descending=False)


def medoid(values: Sequence[int]) -> int:
    """The element minimizing total absolute distance to all elements.

    Computed by summing the rows of the pairwise distance matrix and taking the
    argmin; ties break toward the earliest position in the sequence.
    """
    if len(values) == 0:
        raise ValueError("medoid of an empty sequence is undefined")
    best_index = 0
    best_sum = None
    for i, v in enumerate(values):
        total = sum(abs(v - w) for w in values)
        if best_sum is None or total < best_sum:
            best_index, best_sum = i, total
    return values[best_index]


def evidence_clustering_ranking(deltas: DeltaSet) -> GroundTruthRanking:
    """Evidence closest to the temporal medoid of the set first."""
    present = [(j, d) for j, d in enumerate(deltas.deltas) if d is not None]
    if not present:
        return _ranking_from_keys(len(deltas), [], descending=False)
    center = medoid([d for _, d in present])
    keyed = [(j, abs(d - center)) for j, d in present]
    return _ranking_from_keys(len(deltas), keyed, descending=False)


def search_rank_ranking(evidence: EvidenceSet) -> GroundTruthRanking:
    """Search result order as relevance: position 1 first. Never masks anything."""
    keyed = [(j, s.search_rank) for j, s in enumerate(evidence)]
    return _ranking_from_keys(len(evidence), keyed, descending=False)


def build_ground_truth(
    method: RankingMethod, claim: Claim, evidence: EvidenceSet
) -> GroundTruthRanking:
    """Dispatch to the generator for ``method`` over one claim's evidence set."""
    if method is RankingMethod.SEARCH_RANK:
        return search_rank_ranking(evidence)
    deltas = compute_delta_set(claim, evidence)
    if method is RankingMethod.EVIDENCE_RECENCY:
        return evidence_recency_ranking(deltas)
    if method is RankingMethod.CLAIM_RECENCY:
        return claim_recency_ranking(deltas)
    if method is RankingMethod.CLAIM_CLOSENESS:
        return claim_closeness_ranking(deltas)
    if method is RankingMethod.EVIDENCE_CLUSTERING:
        return evidence_clustering_ranking(deltas)
    raise ValueError(f"unhandled ranking method: {method}")
