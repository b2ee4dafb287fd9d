"""Embedding quality measures: k-NN accuracy and neighborhood preservation."""

from __future__ import annotations

import numpy as np

from .linalg import as_data_matrix, sq_dist_matrix


def neighbor_ranks(X, kmax) -> np.ndarray:
    """``(n, kmax)`` indices of each point's nearest neighbors by Euclidean
    distance, excluding the point itself, ties broken by lower index."""
    X = as_data_matrix(X)
    n = X.shape[0]
    if not 1 <= kmax < n:
        raise ValueError(f"need 1 <= k < n={n}, got {kmax}")
    D = sq_dist_matrix(X, "euclidean_sq")
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :kmax]


def knn_accuracy(Y, labels, k=15) -> float:
    """Leave-one-out k-NN majority-vote accuracy in ``Y``.

    Vote ties go to the smallest label value. A single-class label vector
    trivially scores 1.0.
    """
    labels = np.asarray(labels)
    Y = as_data_matrix(Y, "Y")
    if labels.shape != (Y.shape[0],):
        raise ValueError("labels must have one entry per row of Y")
    classes, codes = np.unique(labels, return_inverse=True)
    if classes.size == 1:
        return 1.0
    nbrs = neighbor_ranks(Y, k)
    votes = np.zeros((Y.shape[0], classes.size), dtype=np.int64)
    np.add.at(votes, (np.repeat(np.arange(Y.shape[0]), k), codes[nbrs].ravel()), 1)
    pred = np.argmax(votes, axis=1)  # first maximum = smallest label
    return float(np.mean(pred == codes))


def preservation_profile(X, Y, kmax) -> np.ndarray:
    """``B(X, Y; k)`` for ``k = 1..kmax`` (entry ``k - 1``)."""
    X = as_data_matrix(X)
    Y = as_data_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    same = neighbor_ranks(X, kmax) == neighbor_ranks(Y, kmax)
    return same.mean(axis=0)


def neighborhood_b(X, Y, k) -> float:
    """Fraction of points whose ``k``-th nearest neighbor is the same point in X and Y."""
    return float(preservation_profile(X, Y, k)[k - 1])


def topk_overlap(X, Y, k) -> float:
    """Mean fraction of shared indices among the k nearest neighbors (set overlap)."""
    a = neighbor_ranks(X, k)
    b = neighbor_ranks(Y, k)
    return float(np.mean([np.intersect1d(r, s).size / k for r, s in zip(a, b)]))


def eq8_ratio(X, Y, l, m, inclusive=False, profile=None) -> float:
    """Preservation of neighbors ``l..m`` relative to the nearest neighbor.

    ``(1 / (m - l)) * sum_{k=l}^{m} B(k) / B(1)``; ``inclusive=True``
    divides by the number of terms ``m - l + 1`` instead.
    """
    if not 1 <= l <= m:
        raise ValueError(f"need 1 <= l <= m, got l={l}, m={m}")
    if not inclusive and m == l:
        raise ValueError("l == m makes the divisor m - l zero")
    B = preservation_profile(X, Y, m) if profile is None else np.asarray(profile)
    if B[0] == 0:
        raise ZeroDivisionError("B(X, Y; 1) is zero; the ratio is undefined")
    divisor = (m - l + 1) if inclusive else (m - l)
    return float(B[l - 1 : m].sum() / divisor / B[0])


def normalize_loss_curve(curve, reference=None):
    """Affinely map losses so the max becomes 1 and the min 0.

    ``reference`` (another sequence of losses, or several concatenated)
    fixes the min/max instead, so curves normalized against the same
    reference stay comparable. Constant curves map to zeros.
    """
    curve = list(curve)
    if not curve:
        raise ValueError("empty loss curve")
    vals = np.array([v for _, v in curve], dtype=np.float64)
    ref = vals if reference is None else np.asarray(reference, dtype=np.float64)
    lo, hi = float(np.min(ref)), float(np.max(ref))
    if hi == lo:
        return [(e, 0.0) for e, _ in curve]
    return [(e, float((v - lo) / (hi - lo))) for (e, _), v in zip(curve, vals)]
