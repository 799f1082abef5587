"""Complete-linkage agglomerative clustering and dendrogram cutting.

Each active cluster caches its nearest neighbour.  Under complete linkage a
merge can only raise distances, so a cached neighbour stays valid unless it
was one of the two merged clusters; only those rows are rescanned.  This
gives the exact greedy merge order at roughly O(n^2) cost.

Ties on distance go to the pair with the lexicographically smallest
(min node id, max node id).  Leaves are 0..n-1, the merge at step s
creates node n + s.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ._accel import njit, use_numba
from .errors import TooFewMessages


@dataclass(frozen=True)
class Dendrogram:
    """``merges`` rows are (left id, right id, height, size), left < right."""

    merges: np.ndarray
    n: int

    @property
    def heights(self) -> np.ndarray:
        return self.merges[:, 2]

    def to_scipy(self) -> np.ndarray:
        return self.merges.copy()


@dataclass(frozen=True)
class Partition:
    assign: np.ndarray

    @property
    def k(self) -> int:
        return int(self.assign.max()) + 1 if self.assign.size else 0

    def __len__(self) -> int:
        return int(self.assign.size)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Canonical ids 0..k-1 in order of first appearance."""
        ids = {}
        assign = np.empty(len(labels), dtype=np.int64)
        for i, lab in enumerate(labels):
            assign[i] = ids.setdefault(lab, len(ids))
        return cls(assign)


# -- numba path ---------------------------------------------------------------

@njit(cache=True, nogil=True)
def _better(dv, lo, hi, best_d, best_lo, best_hi):
    if dv < best_d:
        return True
    if dv > best_d:
        return False
    if lo < best_lo:
        return True
    if lo > best_lo:
        return False
    return hi < best_hi


@njit(cache=True, nogil=True)
def _rescan_nb(d, k, active, ids, nn, nnd):
    n = d.shape[0]
    best = -1
    best_d = np.inf
    best_lo = 1 << 62
    best_hi = 1 << 62
    for j in range(n):
        if j == k or not active[j]:
            continue
        lo = min(ids[k], ids[j])
        hi = max(ids[k], ids[j])
        if best == -1 or _better(d[k, j], lo, hi, best_d, best_lo, best_hi):
            best = j
            best_d = d[k, j]
            best_lo = lo
            best_hi = hi
    nn[k] = best
    nnd[k] = best_d


@njit(cache=True, nogil=True)
def _linkage_nb(dist):
    n = dist.shape[0]
    d = dist.copy()
    active = np.ones(n, dtype=np.bool_)
    ids = np.arange(n)
    sizes = np.ones(n, dtype=np.int64)
    nn = np.empty(n, dtype=np.int64)
    nnd = np.empty(n)
    out = np.empty((n - 1, 4))
    for k in range(n):
        _rescan_nb(d, k, active, ids, nn, nnd)
    for step in range(n - 1):
        i = -1
        bd = np.inf
        blo = 1 << 62
        bhi = 1 << 62
        for k in range(n):
            if not active[k]:
                continue
            j = nn[k]
            lo = min(ids[k], ids[j])
            hi = max(ids[k], ids[j])
            if i == -1 or _better(nnd[k], lo, hi, bd, blo, bhi):
                i = k
                bd = nnd[k]
                blo = lo
                bhi = hi
        j = nn[i]
        out[step, 0] = blo
        out[step, 1] = bhi
        out[step, 2] = bd
        out[step, 3] = sizes[i] + sizes[j]
        # merged cluster lives in slot i
        for k in range(n):
            if active[k] and k != i and k != j:
                v = max(d[i, k], d[j, k])
                d[i, k] = v
                d[k, i] = v
        active[j] = False
        sizes[i] += sizes[j]
        ids[i] = n + step
        if step == n - 2:
            break
        for k in range(n):
            if active[k] and k != i and (nn[k] == i or nn[k] == j):
                _rescan_nb(d, k, active, ids, nn, nnd)
        _rescan_nb(d, i, active, ids, nn, nnd)
    return out


# -- numpy path ---------------------------------------------------------------

def _rescan_np(d, k, active_idx, ids):
    others = active_idx[active_idx != k]
    row = d[k, others]
    cand = others[row == row.min()]
    if cand.size > 1:
        lo = np.minimum(ids[k], ids[cand])
        hi = np.maximum(ids[k], ids[cand])
        cand = cand[np.lexsort((hi, lo))]
    return cand[0], d[k, cand[0]]


def _linkage_np(dist: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    d = dist.astype(np.float64, copy=True)
    active = np.ones(n, dtype=bool)
    ids = np.arange(n, dtype=np.int64)
    sizes = np.ones(n, dtype=np.int64)
    nn = np.empty(n, dtype=np.int64)
    nnd = np.empty(n)
    out = np.empty((n - 1, 4))
    all_idx = np.arange(n)
    for k in range(n):
        nn[k], nnd[k] = _rescan_np(d, k, all_idx, ids)
    for step in range(n - 1):
        act = np.flatnonzero(active)
        vals = nnd[act]
        cand = act[vals == vals.min()]
        if cand.size > 1:
            lo = np.minimum(ids[cand], ids[nn[cand]])
            hi = np.maximum(ids[cand], ids[nn[cand]])
            cand = cand[np.lexsort((hi, lo))]
        i = int(cand[0])
        j = int(nn[i])
        out[step] = (min(ids[i], ids[j]), max(ids[i], ids[j]), nnd[i], sizes[i] + sizes[j])
        rest = act[(act != i) & (act != j)]
        merged = np.maximum(d[i, rest], d[j, rest])
        d[i, rest] = merged
        d[rest, i] = merged
        active[j] = False
        sizes[i] += sizes[j]
        ids[i] = n + step
        if step == n - 2:
            break
        act = np.flatnonzero(active)
        stale = rest[(nn[rest] == i) | (nn[rest] == j)]
        for k in stale:
            nn[k], nnd[k] = _rescan_np(d, k, act, ids)
        nn[i], nnd[i] = _rescan_np(d, i, act, ids)
    return out


def agglomerate(dm) -> Dendrogram:
    """Complete-linkage merge tree over a DistanceMatrix (or square array)."""
    d = np.asarray(getattr(dm, "d", dm), dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    n = d.shape[0]
    if n < 2:
        raise TooFewMessages(f"need at least 2 items to cluster, got {n}")
    merges = _linkage_nb(np.ascontiguousarray(d)) if use_numba() else _linkage_np(d)
    return Dendrogram(merges, n)


def cut(dendrogram: Dendrogram, h: float) -> Partition:
    """Flat clusters: undo every merge higher than ``h``.

    Cluster ids follow the order of each cluster's smallest leaf.
    """
    if h < 0:
        raise ValueError("cut height must be >= 0")
    n = dendrogram.n
    parent = np.arange(2 * n - 1)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for s, (left, right, height, _) in enumerate(dendrogram.merges):
        if height > h:
            break  # heights are non-decreasing
        node = n + s
        parent[find(int(left))] = node
        parent[find(int(right))] = node
    roots = [find(i) for i in range(n)]
    return Partition.from_labels(roots)


def cut_height(dendrogram: Dendrogram, measure, height: float = 0.5,
               euclidean_quantile: float = 0.5) -> float:
    """Fixed height for bounded measures; a merge-height quantile for Euclidean."""
    name = getattr(measure, "value", measure)
    if name == "euclidean":
        return float(np.quantile(dendrogram.heights, euclidean_quantile))
    return float(height)


def export_partition(p: Partition, path: Union[str, Path], rows: Optional[np.ndarray] = None) -> None:
    rows = np.arange(len(p)) if rows is None else rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cluster_id"])
        for idx, cid in zip(rows, p.assign):
            w.writerow([int(idx), int(cid)])


def export_dendrogram(dg: Dendrogram, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "left", "right", "height", "size"])
        for s, (left, right, height, size) in enumerate(dg.merges):
            w.writerow([s, int(left), int(right), repr(float(height)), int(size)])
