"""Independent reference implementations used only to check the package."""

import itertools
import math

import numpy as np


def julian_day_number(year: int, month: int, day: int) -> int:
    """Gregorian date to Julian day number, via the standard integer formula."""
    a = (14 - month) // 12
    y = year + 4800 - a
    m = month + 12 * a - 3
    return day + (153 * m + 2) // 5 + 365 * y + y // 4 - y // 100 + y // 400 - 32045


def plackett_luce_prob(scores, perm) -> float:
    """Unstabilized stepwise-softmax probability of one permutation."""
    p = 1.0
    perm = list(perm)
    for u in range(len(perm)):
        denom = sum(math.exp(scores[i]) for i in perm[u:])
        p *= math.exp(scores[perm[u]]) / denom
    return p


def brute_force_log_prob(scores, perm) -> float:
    return math.log(plackett_luce_prob(scores, perm))


def all_permutation_probs(scores, indices):
    return [plackett_luce_prob(scores, perm)
            for perm in itertools.permutations(indices)]


def kendall_tau_b_pairs(x, y) -> float | None:
    """Tau-b by explicit concordant/discordant pair counting."""
    n = len(x)
    concordant = discordant = 0
    ties_x = ties_y = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = int(x[i] > x[j]) - int(x[i] < x[j])
            dy = int(y[i] > y[j]) - int(y[i] < y[j])
            if dx == 0:
                ties_x += 1
            if dy == 0:
                ties_y += 1
            if dx * dy > 0:
                concordant += 1
            elif dx * dy < 0:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        return None
    return (concordant - discordant) / denom


def medoid_by_matrix(values) -> int:
    """Medoid via an explicit pairwise distance matrix and column sums."""
    arr = np.asarray(values, dtype=np.int64)
    matrix = np.abs(arr[:, None] - arr[None, :])
    return int(arr[int(np.argmin(matrix.sum(axis=0)))])


def numerical_gradient(fn, arr, h=1e-5):
    """Central finite differences of fn() with respect to arr, in place."""
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        orig = arr[ix]
        arr[ix] = orig + h
        fp = fn()
        arr[ix] = orig - h
        fm = fn()
        arr[ix] = orig
        grad[ix] = (fp - fm) / (2 * h)
    return grad


def relative_error(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / scale))
