"""Listwise ranking loss: permutation log-likelihood and its analytic gradient.

The probability of a permutation decomposes into stepwise softmax choices among
the not-yet-ranked snippets; the loss is the negative log-likelihood of the
ground-truth permutation. Tied ground truths are linearized deterministically
(ascending snippet index within each tie group) and masked snippets contribute
neither loss nor gradient. The batch loss is a sum, not a mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericalError
from .rankings import GroundTruthRanking


@dataclass(frozen=True, eq=False)
class ScoredRanking:
    """Predicted ranking scores for all K snippets plus their ground truth."""

    scores: np.ndarray
    truth: GroundTruthRanking

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.shape[0] != len(self.truth.included):
            raise ValueError(
                f"scores must be a vector of length {len(self.truth.included)}, "
                f"got shape {scores.shape}")
        object.__setattr__(self, "scores", scores)


def canonical_permutation(truth: GroundTruthRanking) -> tuple[int, ...]:
    """Linearize a tied ranking into one target permutation.

    Ties within each group break by ascending snippet index, keeping training
    targets deterministic.
    """
    return tuple(i for group in truth.tie_groups for i in sorted(group))


def _suffix_logsumexp(s: np.ndarray) -> np.ndarray:
    """lse[u] = log sum_{v >= u} exp(s[v]), computed stably back to front."""
    lse = np.empty_like(s)
    lse[-1] = s[-1]
    for u in range(len(s) - 2, -1, -1):
        lse[u] = np.logaddexp(s[u], lse[u + 1])
    return lse


def permutation_log_prob(scores: np.ndarray, perm: Sequence[int]) -> float:
    """Log-probability of ranking the snippets exactly in ``perm`` order.

    An empty permutation is the vacuous product, log 1 = 0.
    """
    perm = tuple(perm)
    if not perm:
        return 0.0
    scores = np.asarray(scores, dtype=np.float64)
    if len(set(perm)) != len(perm):
        raise ValueError("permutation indices must be distinct")
    if min(perm) < 0 or max(perm) >= scores.shape[0]:
        raise ValueError("permutation index out of range")
    s = scores[list(perm)]
    return float(np.sum(s - _suffix_logsumexp(s)))


def listmle_loss(batch: Sequence[ScoredRanking]) -> float:
    """Summed negative log-likelihood of the canonical ground-truth permutations.

    Only included snippets' scores enter the computation. Items whose mask
    leaves at most one snippet contribute zero: a one-element permutation
    carries no ordering information.
    """
    total = 0.0
    for i, item in enumerate(batch):
        if not np.all(np.isfinite(item.scores)):
            raise NumericalError(f"non-finite ranking score in batch item {i}")
        perm = canonical_permutation(item.truth)
        if len(perm) <= 1:
            continue
        total -= permutation_log_prob(item.scores, perm)
    return total


def listmle_gradient(scores: np.ndarray, truth: GroundTruthRanking) -> np.ndarray:
    """Gradient of the listwise loss with respect to each snippet's score.

    For the canonical permutation p over included snippets, the component at
    p[w] is sum_{u <= w} exp(s[p[w]]) / Z_u - 1 with Z_u the softmax
    normalizer over positions u..end. Masked snippets get exactly zero.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NumericalError("non-finite ranking score")
    grad = np.zeros_like(scores)
    perm = canonical_permutation(truth)
    if len(perm) <= 1:
        return grad
    s = scores[list(perm)]
    lse = _suffix_logsumexp(s)
    for w, snippet_index in enumerate(perm):
        grad[snippet_index] = float(np.sum(np.exp(s[w] - lse[: w + 1]))) - 1.0
    return grad
