"""External (adjusted Rand) and internal cluster validity indices.

Internal indices work on the TF-IDF feature rows with Euclidean geometry,
independent of the distance measure used for clustering.  An index whose
precondition fails returns ``None`` (not defined) instead of NaN or inf.

Notation: cluster k has n_k members and centroid c_k, c is the overall
centroid, W is the pooled within-cluster scatter and B the between-cluster
scatter.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from ._accel import njit, use_numba
from .errors import LengthMismatch


class Index(str, enum.Enum):
    BALL_HALL = "ball_hall"
    CALINSKI_HARABASZ = "calinski_harabasz"
    DAVIES_BOULDIN = "davies_bouldin"
    TRACE_WIB = "trace_wib"
    SD = "sd_index"
    S_DBW = "s_dbw"

    @classmethod
    def parse(cls, value) -> "Index":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"sd": "sd_index", "sd_dis": "sd_index", "sdbw": "s_dbw", "ch": "calinski_harabasz",
                   "db": "davies_bouldin", "bh": "ball_hall"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown validity index {value!r}") from None


INDICES = tuple(Index)


class Direction(str, enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class IndexRule:
    index: Index
    direction: Direction

    def better(self, a: float, b: float) -> bool:
        """True when score ``a`` is strictly better than ``b``."""
        return a > b if self.direction is Direction.MAXIMIZE else a < b


_RULES = {
    Index.BALL_HALL: Direction.MINIMIZE,
    Index.CALINSKI_HARABASZ: Direction.MAXIMIZE,
    Index.DAVIES_BOULDIN: Direction.MINIMIZE,
    Index.TRACE_WIB: Direction.MAXIMIZE,
    Index.SD: Direction.MINIMIZE,
    Index.S_DBW: Direction.MINIMIZE,
}


def rule_for(index) -> IndexRule:
    index = Index.parse(index)
    return IndexRule(index, _RULES[index])


@dataclass
class ValidationScores:
    adjusted_rand: Optional[float]
    ball_hall: Optional[float]
    calinski_harabasz: Optional[float]
    davies_bouldin: Optional[float]
    trace_wib: Optional[float]
    sd_index: Optional[float]
    s_dbw: Optional[float]

    def internal(self) -> dict:
        d = asdict(self)
        d.pop("adjusted_rand")
        return d


# -- adjusted Rand ------------------------------------------------------------

def _assign(p) -> np.ndarray:
    return np.asarray(getattr(p, "assign", p))


def contingency(u, v) -> np.ndarray:
    u = _assign(u)
    v = _assign(v)
    _, ui = np.unique(u, return_inverse=True)
    _, vi = np.unique(v, return_inverse=True)
    table = np.zeros((ui.max() + 1, vi.max() + 1), dtype=np.int64)
    np.add.at(table, (ui, vi), 1)
    return table


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return int((x * (x - 1) // 2).sum())


def adjusted_rand(p, truth) -> float:
    """Hubert-Arabie adjusted Rand index from the contingency table.

    When the denominator vanishes (both partitions all singletons, or both a
    single cluster) the partitions are identical and 1.0 is returned.
    """
    u = _assign(p)
    v = _assign(truth)
    if u.shape != v.shape:
        raise LengthMismatch(f"partition lengths differ: {u.size} vs {v.size}")
    if u.size == 0:
        raise ValueError("partitions must be non-empty")
    table = contingency(u, v)
    total = _comb2(table)
    sa = _comb2(table.sum(axis=1))
    sb = _comb2(table.sum(axis=0))
    pairs = u.size * (u.size - 1) // 2
    if pairs == 0:
        return 1.0
    expected = sa * sb / pairs
    denom = 0.5 * (sa + sb) - expected
    if denom == 0:
        return 1.0 if total == sa == sb else 0.0
    return (total - expected) / denom


# -- internal indices -----------------------------------------------------------

class _Clusters:
    """Centroids and per-cluster statistics shared by the internal indices."""

    def __init__(self, x, p):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        _, lab = np.unique(_assign(p), return_inverse=True)
        if lab.size != x.shape[0]:
            raise LengthMismatch(f"{x.shape[0]} feature rows vs {lab.size} assignments")
        self.x = x
        self.lab = lab
        self.k = int(lab.max()) + 1
        self.n = x.shape[0]
        self.sizes = np.bincount(lab, minlength=self.k)
        sums = np.zeros((self.k, x.shape[1]))
        np.add.at(sums, lab, x)
        self.centroids = sums / self.sizes[:, None]
        self.mean = x.mean(axis=0)
        self.resid = x - self.centroids[lab]
        self.sq = np.einsum("ij,ij->i", self.resid, self.resid)

    def within_trace(self) -> float:
        return float(self.sq.sum())

    def between_trace(self) -> float:
        dc = self.centroids - self.mean
        return float((self.sizes * np.einsum("ij,ij->i", dc, dc)).sum())

    def centroid_distances(self) -> np.ndarray:
        return cdist(self.centroids, self.centroids)

    def grouped(self):
        """Row order grouping points by cluster, and the cluster start offsets."""
        order = np.argsort(self.lab, kind="stable")
        starts = np.concatenate(([0], np.cumsum(self.sizes)))
        return order, starts

    def cluster_variances(self) -> np.ndarray:
        """Component-wise (population) variance vector per cluster, shape (k, dim)."""
        v = np.zeros_like(self.centroids)
        np.add.at(v, self.lab, self.resid ** 2)
        return v / self.sizes[:, None]


def ball_hall(x, p) -> float:
    """Mean over clusters of the mean squared distance to the centroid."""
    cl = _Clusters(x, p)
    per = np.bincount(cl.lab, weights=cl.sq, minlength=cl.k) / cl.sizes
    return float(per.mean())


def calinski_harabasz(x, p) -> Optional[float]:
    cl = _Clusters(x, p)
    if not 2 <= cl.k <= cl.n - 1:
        return None
    w = cl.within_trace()
    if w == 0:
        return None
    return (cl.between_trace() / (cl.k - 1)) / (w / (cl.n - cl.k))


def davies_bouldin(x, p) -> Optional[float]:
    cl = _Clusters(x, p)
    if cl.k < 2:
        return None
    spread = np.bincount(cl.lab, weights=np.sqrt(cl.sq), minlength=cl.k) / cl.sizes
    m = cl.centroid_distances()
    off = ~np.eye(cl.k, dtype=bool)
    if np.any(m[off] == 0):
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (spread[:, None] + spread[None, :]) / m
    r[~off] = -np.inf
    return float(r.max(axis=1).mean())


def trace_wib(x, p) -> Optional[float]:
    """trace((W + eps I)^-1 B) with a ridge scaled to the mean of diag(W)."""
    cl = _Clusters(x, p)
    if cl.k < 2:
        return None
    dim = cl.x.shape[1]
    w = cl.resid.T @ cl.resid
    dc = cl.centroids - cl.mean
    b = (dc * cl.sizes[:, None]).T @ dc
    tw = float(np.trace(w))
    eps = 1e-9 * tw / dim if tw > 0 else 1e-9
    val = float(np.trace(np.linalg.solve(w + eps * np.eye(dim), b)))
    return val if np.isfinite(val) else None


def _scat(cl: _Clusters) -> Optional[float]:
    total = np.linalg.norm(cl.x.var(axis=0))
    if total == 0:
        return None
    return float(np.linalg.norm(cl.cluster_variances(), axis=1).mean() / total)


def sd_index(x, p, alpha: float = 1.0) -> Optional[float]:
    """alpha * Scat + Dis, Halkidi's SD with a fixed weighting factor."""
    cl = _Clusters(x, p)
    if cl.k < 2:
        return None
    scat = _scat(cl)
    if scat is None:
        return None
    m = cl.centroid_distances()
    off = m[~np.eye(cl.k, dtype=bool)]
    if np.any(off == 0):
        return None
    dis = (off.max() / off.min()) * float((1.0 / m.sum(axis=1)).sum())
    return float(alpha * scat + dis)


def s_dbw(x, p) -> Optional[float]:
    """Scat + inter-cluster density, counting points within sigma of a reference point."""
    cl = _Clusters(x, p)
    if cl.k < 2:
        return None
    scat = _scat(cl)
    if scat is None:
        return None
    sigma = float(np.sqrt(np.linalg.norm(cl.cluster_variances(), axis=1).sum())) / cl.k
    order, starts = cl.grouped()
    xs = np.ascontiguousarray(cl.x[order])
    if use_numba():
        acc = _dens_bw_nb(xs, starts, np.ascontiguousarray(cl.centroids), sigma * sigma)
    else:
        acc = _dens_bw_np(xs, starts, cl.centroids, sigma * sigma)
    return float(scat + acc / (cl.k * (cl.k - 1)))


@njit(cache=True, nogil=True)
def _dens_bw_nb(xs, starts, cent, sigma2):
    # sum over ordered pairs i != j; the (i, j) and (j, i) terms coincide
    k, dim = cent.shape
    acc = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            di = 0
            dj = 0
            du = 0
            for side in range(2):
                c = i if side == 0 else j
                for r in range(starts[c], starts[c + 1]):
                    si = 0.0
                    sj = 0.0
                    su = 0.0
                    for t in range(dim):
                        v = xs[r, t]
                        a = v - cent[i, t]
                        b = v - cent[j, t]
                        u = v - 0.5 * (cent[i, t] + cent[j, t])
                        si += a * a
                        sj += b * b
                        su += u * u
                    if si <= sigma2:
                        di += 1
                    if sj <= sigma2:
                        dj += 1
                    if su <= sigma2:
                        du += 1
            denom = max(di, dj)
            if denom > 0:
                acc += du / denom
    return 2.0 * acc


def _dens_bw_np(xs, starts, cent, sigma2):
    k = cent.shape[0]
    lab = np.repeat(np.arange(k), np.diff(starts))
    # near[r, c]: point r lies within sigma of centroid c
    near = cdist(xs, cent, "sqeuclidean") <= sigma2
    acc = 0.0
    for i in range(k - 1):
        own = slice(starts[i], starts[i + 1])
        js = np.arange(i + 1, k)
        mids = 0.5 * (cent[i] + cent[js])
        # points of cluster i against every midpoint (i, j)
        du = np.count_nonzero(cdist(xs[own], mids, "sqeuclidean") <= sigma2, axis=0)
        rest = slice(starts[i + 1], starts[k])
        rl = lab[rest]
        diff = xs[rest] - mids[rl - (i + 1)]
        du = du + np.bincount(rl - (i + 1), weights=np.einsum("ij,ij->i", diff, diff) <= sigma2,
                              minlength=js.size)
        di = np.count_nonzero(near[own, i]) + np.bincount(rl - (i + 1), weights=near[rest, i],
                                                          minlength=js.size)
        dj = np.count_nonzero(near[own][:, js], axis=0) + np.bincount(
            rl - (i + 1), weights=near[np.arange(starts[i + 1], starts[k]), rl], minlength=js.size)
        denom = np.maximum(di, dj)
        ok = denom > 0
        acc += float((du[ok] / denom[ok]).sum())
    return 2.0 * acc


def internal_scores(x, p, alpha: float = 1.0) -> dict:
    """All six internal indices keyed by Index value."""
    x = np.asarray(x, dtype=np.float64)
    return {
        Index.BALL_HALL.value: ball_hall(x, p),
        Index.CALINSKI_HARABASZ.value: calinski_harabasz(x, p),
        Index.DAVIES_BOULDIN.value: davies_bouldin(x, p),
        Index.TRACE_WIB.value: trace_wib(x, p),
        Index.SD.value: sd_index(x, p, alpha),
        Index.S_DBW.value: s_dbw(x, p),
    }


def validate(x, p, truth=None, alpha: float = 1.0) -> ValidationScores:
    ari = None if truth is None else adjusted_rand(p, truth)
    return ValidationScores(adjusted_rand=ari, **internal_scores(x, p, alpha))
