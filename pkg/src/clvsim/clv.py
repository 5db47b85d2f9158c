"""Clustering of variables around latent components.

Variables are grouped by Ward agglomeration over the correlation distance
``1 - r``; every cluster of a tree cut is summarized by its resultant
vector, the mean of its standardized member variables.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVariableError, InvalidArgumentError


@dataclass
class DistanceMatrix:
    values: np.ndarray  # symmetric I x I, entries in [0, 2], zero diagonal

    @property
    def dimension(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class Merge:
    left_id: int
    right_id: int
    height: float
    size: int


@dataclass
class Dendrogram:
    """Merge history. Leaves are 1..I; merge t (1-based) creates cluster I + t."""

    merges: list[Merge]
    num_leaves: int

    @property
    def heights(self):
        return np.array([m.height for m in self.merges])

    def as_array(self):
        """(I-1) x 4 array of left_id, right_id, height, size."""
        return np.array([(m.left_id, m.right_id, m.height, m.size) for m in self.merges], dtype=float)


@dataclass
class ClusterCut:
    assignment: np.ndarray  # length I, values 1..C
    num_clusters: int

    def members(self, cluster):
        return np.flatnonzero(self.assignment == cluster)


@dataclass
class RVMatrix:
    values: np.ndarray  # S x R

    @property
    def num_rvs(self):
        return self.values.shape[1]


def _observations(data):
    return np.asarray(getattr(data, "observations", data), dtype=float)


def _check_variance(x, names=None):
    flat = np.ptp(x, axis=0) == 0
    if flat.any():
        idx = int(np.flatnonzero(flat)[0])
        raise DegenerateVariableError(idx, names[idx] if names is not None else None)


def correlation_distance_matrix(dataset):
    """Pairwise ``1 - pearson_r`` between the columns of the dataset."""
    x = _observations(dataset)
    _check_variance(x, getattr(dataset, "variable_names", None))
    xc = x - x.mean(axis=0)
    xc /= np.sqrt(np.einsum("ij,ij->j", xc, xc))
    d = 1.0 - xc.T @ xc
    d = 0.5 * (d + d.T)
    np.clip(d, 0.0, 2.0, out=d)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def ward_update(d2_ab, d2_a2b, d2_aa2, n_a, n_a2, n_b):
    """Lance-Williams update of the squared Ward distance from A = a u a' to b."""
    total = n_a + n_a2 + n_b
    return ((n_a + n_b) * d2_ab + (n_a2 + n_b) * d2_a2b - n_b * d2_aa2) / total


def ward_linkage(dist):
    """Agglomerate with Ward's criterion.

    Squared distances are carried internally. Among pairs at the minimal
    distance the one with the lexicographically smallest
    (smaller id, larger id) key is merged first.
    """
    d = np.asarray(getattr(dist, "values", dist), dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise InvalidArgumentError("distance matrix must be square")
    if n < 2:
        raise InvalidArgumentError("need at least two variables to build a dendrogram")

    d2 = d * d
    np.fill_diagonal(d2, np.inf)
    ids = np.arange(1, n + 1)
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    row_min = d2.min(axis=1)  # inf for retired slots
    merges = []

    for t in range(1, n):
        best = row_min.min()
        cand_rows = np.flatnonzero(row_min == best)
        if len(cand_rows) == 2:
            p, q = cand_rows
        else:
            rows, cols = np.nonzero(d2[cand_rows] == best)
            rows = cand_rows[rows]
            lo = np.minimum(ids[rows], ids[cols])
            hi = np.maximum(ids[rows], ids[cols])
            pick = np.lexsort((hi, lo))[0]
            p, q = rows[pick], cols[pick]
        if ids[p] > ids[q]:
            p, q = q, p
        n_p, n_q = sizes[p], sizes[q]
        merges.append(Merge(int(ids[p]), int(ids[q]), float(np.sqrt(best)), int(n_p + n_q)))

        active[[p, q]] = False
        others = np.flatnonzero(active)
        old_p = d2[others, p]
        old_q = d2[others, q]
        new = ward_update(old_p, d2[others, q], best, n_p, n_q, sizes[others])
        d2[p, others] = new
        d2[others, p] = new
        d2[q, :] = np.inf
        d2[:, q] = np.inf
        active[p] = True
        sizes[p] = n_p + n_q
        ids[p] = n + t

        # rows whose minimum sat on p or q need a rescan; others can only go down
        stale = (old_p == row_min[others]) | (old_q == row_min[others])
        fresh = others[~stale]
        row_min[fresh] = np.minimum(row_min[fresh], new[~stale])
        rescan = others[stale]
        if len(rescan):
            row_min[rescan] = d2[rescan].min(axis=1)
        row_min[p] = d2[p].min()
        row_min[q] = np.inf

    return Dendrogram(merges, n)


def cut_tree(tree, num_clusters):
    """Partition left after undoing the last ``num_clusters - 1`` merges.

    Clusters are numbered 1..C in order of their lowest-indexed variable.
    """
    n = tree.num_leaves
    if not 1 <= num_clusters <= n:
        raise InvalidArgumentError(f"num_clusters must be in 1..{n}, got {num_clusters}")
    parent = list(range(2 * n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # union-find over node ids (0-based: leaf v -> v, merge t -> n + t - 1)
    for t, m in enumerate(tree.merges[: n - num_clusters], start=1):
        new = n + t - 1
        parent[find(m.left_id - 1)] = new
        parent[find(m.right_id - 1)] = new

    roots = [find(v) for v in range(n)]
    numbering = {}
    assignment = np.empty(n, dtype=int)
    for v, r in enumerate(roots):
        assignment[v] = numbering.setdefault(r, len(numbering) + 1)
    return ClusterCut(assignment, num_clusters)


def standardize(x, ddof=0):
    x = np.asarray(x, dtype=float)
    _check_variance(x)
    return (x - x.mean(axis=0)) / x.std(axis=0, ddof=ddof)


def extract_rvs(dataset, cut, ddof=0, standardized=None):
    """Resultant vector per cluster: mean of the standardized member columns.

    ``ddof=0`` standardizes with the population standard deviation.
    A precomputed standardized matrix may be passed to skip recomputation.
    """
    if standardized is None:
        x = _observations(dataset)
        _check_variance(x, getattr(dataset, "variable_names", None))
        standardized = (x - x.mean(axis=0)) / x.std(axis=0, ddof=ddof)
    if len(cut.assignment) != standardized.shape[1]:
        raise InvalidArgumentError("cluster assignment length does not match the number of variables")
    cols = []
    for c in range(1, cut.num_clusters + 1):
        members = cut.members(c)
        if len(members) == 0:
            raise InvalidArgumentError(f"cluster {c} is empty")
        cols.append(standardized[:, members].mean(axis=1))
    return RVMatrix(np.column_stack(cols))
