"""Two-group k-means over resultant vectors, and agreement scoring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError

DEFAULT_RESTARTS = 10
MAX_ITER = 300


@dataclass
class Classification:
    predicted_labels: np.ndarray
    congruence_count: int | None = None
    congruence_fraction: float | None = None


def _as_points(rvs):
    return np.asarray(getattr(rvs, "values", rvs), dtype=float)


def _sse(x, labels):
    total = 0.0
    for c in (0, 1):
        pts = x[labels == c]
        if len(pts):
            total += float(np.sum((pts - pts.mean(axis=0)) ** 2))
    return total


def _centroids(x, labels):
    n1 = labels.sum()
    s1 = labels @ x
    return np.stack(((x.sum(axis=0) - s1) / (len(labels) - n1), s1 / n1))


def _assign(x, centroids):
    diff0 = x - centroids[0]
    diff1 = x - centroids[1]
    d0 = np.einsum("ij,ij->i", diff0, diff0)
    d1 = np.einsum("ij,ij->i", diff1, diff1)
    return (d1 < d0).astype(np.int64), d0, d1


def _lloyd(x, centroids):
    labels = None
    for _ in range(MAX_ITER):
        new, d0, d1 = _assign(x, centroids)
        for c in (0, 1):
            if not np.any(new == c):
                # reseed at the point farthest from the surviving centroid
                far = int(np.argmax(d1 if c == 0 else d0))
                new[far] = c
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centroids = _centroids(x, labels)
    return labels


def _best_transfer(x, labels):
    """Single point whose move to the other cluster lowers SSE the most, or None."""
    counts = np.bincount(labels, minlength=2)
    _, d0, d1 = _assign(x, _centroids(x, labels))
    d_own = np.where(labels == 1, d1, d0)
    d_other = np.where(labels == 1, d0, d1)
    n_own = counts[labels]
    n_other = counts[1 - labels]
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = n_own / (n_own - 1.0) * d_own - n_other / (n_other + 1.0) * d_other
    gain[n_own < 2] = -np.inf
    i = int(np.argmax(gain))
    # ignore rounding-level gains
    if gain[i] > 1e-12 * max(1.0, float(np.sum(d_own))):
        return i
    return None


def refine(x, labels):
    """Alternate Lloyd passes and single-point transfers until neither helps.

    The result is a Lloyd fixpoint from which no single relabeling
    lowers the within-cluster SSE.
    """
    for _ in range(MAX_ITER):
        labels = _lloyd(x, _centroids(x, labels))
        i = _best_transfer(x, labels)
        if i is None:
            return labels
        labels = labels.copy()
        labels[i] = 1 - labels[i]
    return labels


def kmeans_two(rvs, restarts=DEFAULT_RESTARTS, seed=None):
    """Split subjects into two clusters by k-means on the RV matrix.

    Each restart starts from two distinct subject rows chosen at random.
    The labeling with the lowest within-cluster SSE wins, earliest restart
    on ties. Labels are 1/2, with subject 1 always in cluster 1.
    """
    x = _as_points(rvs)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise InvalidArgumentError("k-means needs at least two subjects")
    if restarts < 1:
        raise InvalidArgumentError(f"restarts must be positive, got {restarts}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("RV matrix contains non-finite values")
    if np.all(x == x[0]):
        raise DegenerateInputError("all subjects coincide in RV space; k-means cannot split them")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    best_labels, best_sse = None, np.inf
    for _ in range(restarts):
        start = rng.choice(x.shape[0], size=2, replace=False)
        labels = _lloyd(x, x[start].copy())
        labels = refine(x, labels)
        sse = _sse(x, labels)
        if sse < best_sse:
            best_labels, best_sse = labels, sse
    if best_labels[0] == 1:
        best_labels = 1 - best_labels
    return best_labels + 1


def within_sse(rvs, labels):
    """Within-cluster sum of squared Euclidean distances for labels in {1, 2}."""
    return _sse(_as_points(rvs).reshape(len(labels), -1), np.asarray(labels) - 1)


def congruence(predicted, true_labels):
    """Matches under the better of the two label mappings.

    Returns ``(count, fraction)``.
    """
    predicted = np.asarray(predicted)
    true_labels = np.asarray(true_labels)
    if predicted.shape != true_labels.shape or predicted.ndim != 1:
        raise InvalidArgumentError(
            f"label vectors must be 1-D and of equal length, got {predicted.shape} and {true_labels.shape}"
        )
    for name, v in (("predicted", predicted), ("true", true_labels)):
        if len(np.unique(v)) > 2:
            raise InvalidArgumentError(f"{name} labels are not binary")
    p = _binary(predicted)
    t = _binary(true_labels)
    same = int(np.sum(p == t))
    count = max(same, len(p) - same)
    return count, count / len(p)


def _binary(v):
    # {1, 2} labels map 1 -> 0, 2 -> 1; any other binary coding by sort order
    values = np.unique(v)
    if set(values.tolist()) <= {1, 2}:
        return (v == 2).astype(int)
    return (v == values[-1]).astype(int)


def classify(rvs, true_labels=None, restarts=DEFAULT_RESTARTS, seed=None):
    labels = kmeans_two(rvs, restarts=restarts, seed=seed)
    if true_labels is None:
        return Classification(labels)
    count, fraction = congruence(labels, true_labels)
    return Classification(labels, count, fraction)
