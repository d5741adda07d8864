"""Classification and ranking-fidelity metrics."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import stats

from .rankings import GroundTruthRanking
from .temporal import DeltaSet


def micro_f1(golds: Sequence[str], predictions: Sequence[str]) -> float:
    """Global F1 for single-label multi-class predictions, which equals accuracy."""
    if len(golds) == 0:
        raise ValueError("micro_f1 of an empty sequence is undefined")
    if len(golds) != len(predictions):
        raise ValueError("golds and predictions must have equal length")
    correct = sum(1 for g, p in zip(golds, predictions) if g == p)
    return correct / len(golds)


def macro_f1(golds: Sequence[str], predictions: Sequence[str],
             labels: Sequence[str]) -> float:
    """Unweighted mean of per-label F1 over the full label set.

    Labels with no gold and no predicted instances contribute an F1 of zero,
    so unused labels drag the average down rather than being skipped.
    """
    if len(golds) == 0:
        raise ValueError("macro_f1 of an empty sequence is undefined")
    if len(golds) != len(predictions):
        raise ValueError("golds and predictions must have equal length")
    label_set = set(labels)
    for value in list(golds) + list(predictions):
        if value not in label_set:
            raise ValueError(f"label {value!r} is not in the provided label set")
    total = 0.0
    for label in labels:
        tp = sum(1 for g, p in zip(golds, predictions) if g == label and p == label)
        fp = sum(1 for g, p in zip(golds, predictions) if g != label and p == label)
        fn = sum(1 for g, p in zip(golds, predictions) if g == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        total += 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return total / len(labels)


def kendall_tau_b(scores: np.ndarray, truth: GroundTruthRanking) -> float | None:
    """Tie-aware rank correlation between predicted scores and the ground truth.

    Computed over included snippets only. Returns None when fewer than two
    snippets are included or when either side is constant (the tie-corrected
    denominator vanishes).
    """
    included = truth.included_indices()
    if len(included) < 2:
        return None
    scores = np.asarray(scores, dtype=np.float64)
    relevance = truth.relevance_by_index()
    x = [float(scores[j]) for j in included]
    y = [relevance[j] for j in included]
    tau = stats.kendalltau(x, y).statistic
    if math.isnan(tau):
        return None
    return float(tau)


def dispersion_std(deltas: DeltaSet) -> float | None:
    """Population standard deviation of the present day offsets; None if all absent."""
    values = deltas.present_values()
    if not values:
        return None
    return float(np.std(np.asarray(values, dtype=np.float64)))
