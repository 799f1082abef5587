"""Pairwise message distances.

Set-based coefficients (Jaccard, Dice, Braun-Blanquet) read the presence
pattern of a FeatureMatrix; Cosine and Euclidean read the TF-IDF weights.
For presence rows x, y: a = |x & y|, b = |x & ~y|, c = |~x & y|.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

from ._accel import njit, use_numba
from .errors import TooFewMessages
from .preprocess import FeatureMatrix


class Measure(str, enum.Enum):
    JACCARD = "jaccard"
    DICE = "dice"
    BRAUN_BLANQUET = "braun_blanquet"
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"

    @classmethod
    def parse(cls, value) -> "Measure":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown distance measure {value!r}") from None

    @property
    def bounded(self) -> bool:
        return self is not Measure.EUCLIDEAN

    @property
    def uses_presence(self) -> bool:
        return self in (Measure.JACCARD, Measure.DICE, Measure.BRAUN_BLANQUET)


MEASURES = tuple(Measure)
_CODE = {m: i for i, m in enumerate(MEASURES)}


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray
    measure: Measure

    @property
    def n(self) -> int:
        return self.d.shape[0]


# -- scalar kernels ---------------------------------------------------------

def _abc(x, y):
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    a = int(np.count_nonzero(x & y))
    b = int(np.count_nonzero(x & ~y))
    c = int(np.count_nonzero(~x & y))
    return a, b, c


def jaccard_distance(x, y) -> float:
    a, b, c = _abc(x, y)
    if a + b + c == 0:
        return 0.0
    return 1.0 - a / (a + b + c)


def dice_distance(x, y) -> float:
    a, b, c = _abc(x, y)
    if a + b + c == 0:
        return 0.0
    return 1.0 - 2 * a / (2 * a + b + c)


def braun_blanquet_distance(x, y) -> float:
    a, b, c = _abc(x, y)
    denom = max(a + b, a + c)
    if denom == 0:
        return 0.0
    return 1.0 - a / denom


def cosine_distance(x, y) -> float:
    """1 - cos(x, y).  Zero-norm rows: 0 against each other, 1 against anything else.

    Evaluated as half the squared distance between unit vectors, which is
    exactly 0 for parallel rows.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx = math.sqrt(float(np.dot(x, x)))
    ny = math.sqrt(float(np.dot(y, y)))
    if nx == 0.0 or ny == 0.0:
        return 0.0 if nx == ny else 1.0
    diff = x / nx - y / ny
    return min(0.5 * float(np.dot(diff, diff)), 1.0)


def euclidean_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    diff = x - y
    return math.sqrt(float(np.dot(diff, diff)))


KERNELS = {
    Measure.JACCARD: jaccard_distance,
    Measure.DICE: dice_distance,
    Measure.BRAUN_BLANQUET: braun_blanquet_distance,
    Measure.COSINE: cosine_distance,
    Measure.EUCLIDEAN: euclidean_distance,
}


def pair_distance(x, y, measure) -> float:
    return KERNELS[Measure.parse(measure)](x, y)


# -- numba path: merge-walk over sorted CSR rows ------------------------------

@njit(cache=True, nogil=True)
def _coef_from_abc(code, a, b, c):
    if code == 0:
        s = a + b + c
        return 0.0 if s == 0 else 1.0 - a / s
    if code == 1:
        s = 2 * a + b + c
        return 0.0 if s == 0 else 1.0 - 2.0 * a / s
    s = max(a + b, a + c)
    return 0.0 if s == 0 else 1.0 - a / s


@njit(cache=True, nogil=True)
def _pairwise_csr_nb(indptr, indices, data, code):
    n = indptr.shape[0] - 1
    out = np.zeros((n, n))
    for i in range(n):
        i0 = indptr[i]
        i1 = indptr[i + 1]
        for j in range(i + 1, n):
            p = i0
            q = indptr[j]
            q1 = indptr[j + 1]
            if code <= 2:
                a = 0
                while p < i1 and q < q1:
                    if indices[p] == indices[q]:
                        a += 1
                        p += 1
                        q += 1
                    elif indices[p] < indices[q]:
                        p += 1
                    else:
                        q += 1
                b = (i1 - i0) - a
                c = (q1 - indptr[j]) - a
                v = _coef_from_abc(code, a, b, c)
            else:
                acc = 0.0
                while p < i1 and q < q1:
                    if indices[p] == indices[q]:
                        t = data[p] - data[q]
                        acc += t * t
                        p += 1
                        q += 1
                    elif indices[p] < indices[q]:
                        acc += data[p] * data[p]
                        p += 1
                    else:
                        acc += data[q] * data[q]
                        q += 1
                while p < i1:
                    acc += data[p] * data[p]
                    p += 1
                while q < q1:
                    acc += data[q] * data[q]
                    q += 1
                if code == 3:
                    v = min(0.5 * acc, 1.0)
                else:
                    v = math.sqrt(acc)
            out[i, j] = v
            out[j, i] = v
    return out


# -- numpy path ---------------------------------------------------------------

def _pairwise_np(presence: sp.csr_matrix, weights: sp.csr_matrix, measure: Measure) -> np.ndarray:
    n = presence.shape[0]
    if measure.uses_presence:
        p = presence.astype(np.float64)
        a = (p @ p.T).toarray()
        s = np.asarray(p.sum(axis=1)).ravel()
        b = s[:, None] - a
        c = s[None, :] - a
        with np.errstate(invalid="ignore", divide="ignore"):
            if measure is Measure.JACCARD:
                denom = a + b + c
                d = 1.0 - a / denom
            elif measure is Measure.DICE:
                denom = 2 * a + b + c
                d = 1.0 - 2 * a / denom
            else:
                denom = np.maximum(a + b, a + c)
                d = 1.0 - a / denom
        d[denom == 0] = 0.0
    else:
        x = weights.toarray()
        if measure is Measure.COSINE:
            norms = np.sqrt(np.einsum("ij,ij->i", x, x))
            nz = norms > 0
            x[nz] /= norms[nz, None]
        d = np.empty((n, n))
        for i in range(n):
            diff = x - x[i]
            d[i] = np.einsum("ij,ij->i", diff, diff)
        if measure is Measure.COSINE:
            d = np.minimum(0.5 * d, 1.0)
            zero = ~nz
            d[zero, :] = 1.0
            d[:, zero] = 1.0
            d[np.ix_(zero, zero)] = 0.0
        else:
            d = np.sqrt(d)
        # mirror the upper triangle so the result is exactly symmetric
        iu = np.triu_indices(n, 1)
        d[(iu[1], iu[0])] = d[iu]
    np.fill_diagonal(d, 0.0)
    return d


def _row_norms(w: sp.csr_matrix) -> np.ndarray:
    return np.sqrt(np.asarray(w.multiply(w).sum(axis=1)).ravel())


def _normalised_rows(w: sp.csr_matrix) -> sp.csr_matrix:
    w = w.copy()
    for i in range(w.shape[0]):
        lo, hi = w.indptr[i], w.indptr[i + 1]
        norm = math.sqrt(float(np.dot(w.data[lo:hi], w.data[lo:hi])))
        if norm > 0:
            w.data[lo:hi] /= norm
    return w


def build_matrix(fm: FeatureMatrix, measure) -> DistanceMatrix:
    """Full symmetric distance matrix between the rows of ``fm``."""
    measure = Measure.parse(measure)
    n = fm.shape[0]
    if n < 2:
        raise TooFewMessages(f"need at least 2 messages, got {n}")
    presence = fm.presence.tocsr()
    presence.sort_indices()
    weights = fm.weights.tocsr()
    weights.sort_indices()
    if not use_numba():
        return DistanceMatrix(_pairwise_np(presence, weights, measure), measure)

    if measure.uses_presence:
        src = presence
        data = np.ones(src.indices.shape[0])
    elif measure is Measure.COSINE:
        src = _normalised_rows(weights)
        data = src.data.astype(np.float64)
    else:
        src = weights
        data = src.data.astype(np.float64)
    d = _pairwise_csr_nb(src.indptr.astype(np.int64), src.indices.astype(np.int64), data, _CODE[measure])
    if measure is Measure.COSINE:
        zero = _row_norms(weights) == 0
        if zero.any():
            d[zero, :] = 1.0
            d[:, zero] = 1.0
            d[np.ix_(zero, zero)] = 0.0
            np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d, measure)


def export_lower_triangle(dm: DistanceMatrix, path: Union[str, Path]) -> None:
    """CSV rows ``i,j,distance`` for every i > j."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "distance"])
        for i in range(dm.n):
            for j in range(i):
                w.writerow([i, j, repr(float(dm.d[i, j]))])
