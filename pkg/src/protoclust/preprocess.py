"""Sample manipulation, byte n-gram tokenisation and TF-IDF features."""
from __future__ import annotations

import csv
import logging
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import AllColumnsDropped, RangeExceedsCorpus
from .ingest import Corpus

log = logging.getLogger(__name__)

DEFAULT_MAX_SPARSITY = 0.97


@dataclass(frozen=True)
class PreprocessConfig:
    message_length: int
    ngram_length: int
    subsample_size: int
    subsample_offset: int = 0
    max_sparsity: float = DEFAULT_MAX_SPARSITY

    def __post_init__(self):
        if self.message_length < 1:
            raise ValueError("message_length must be >= 1")
        if self.ngram_length < 1:
            raise ValueError("ngram_length must be >= 1")
        if self.ngram_length > self.message_length:
            raise ValueError(f"n-gram length {self.ngram_length} exceeds message length "
                             f"{self.message_length} (need n <= m)")
        if self.subsample_size < 1 or self.subsample_offset < 0:
            raise ValueError("subsample size must be >= 1 and offset >= 0")
        if not 0.0 < self.max_sparsity <= 1.0:
            raise ValueError("max_sparsity must lie in (0, 1]")


@dataclass(frozen=True)
class GramCounts:
    """Raw n-gram counts: ``counts[i, t]`` occurrences of ``columns[t]`` in row i."""

    rows: np.ndarray
    columns: tuple
    counts: sp.csr_matrix


@dataclass(frozen=True)
class FeatureMatrix:
    """Messages x retained n-grams.

    ``weights`` holds TF-IDF values, ``presence`` the aligned boolean
    occurrence pattern.  Both are CSR with sorted column indices.
    """

    rows: np.ndarray
    columns: tuple
    weights: sp.csr_matrix
    presence: sp.csr_matrix

    @property
    def shape(self):
        return self.weights.shape

    def dense(self) -> np.ndarray:
        return self.weights.toarray()

    def dense_presence(self) -> np.ndarray:
        return self.presence.toarray()


def truncate(corpus: Corpus, message_length: int) -> Corpus:
    if message_length < 1:
        raise ValueError("message_length must be >= 1")
    msgs = [m if len(m.payload) <= message_length else replace(m, payload=m.payload[:message_length])
            for m in corpus]
    return Corpus(msgs, source=corpus.source, diagnostics=dict(corpus.diagnostics))


def subsample(corpus: Corpus, size: int, offset: int = 0) -> Corpus:
    """Contiguous slice ``[offset, offset + size)``, capture order kept."""
    if size < 1 or offset < 0:
        raise ValueError("size must be >= 1 and offset >= 0")
    if offset + size > len(corpus):
        raise RangeExceedsCorpus(f"sub-sample [{offset}, {offset + size}) exceeds corpus of {len(corpus)}")
    return Corpus(corpus.messages[offset:offset + size], source=corpus.source,
                  diagnostics=dict(corpus.diagnostics))


def tokenize(payload: bytes, n: int) -> Counter:
    """Multiset of overlapping byte n-grams; empty when n exceeds the length."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = len(payload)
    if n > m:
        log.warning("message of %d bytes yields no %d-grams", m, n)
        return Counter()
    return Counter(payload[i:i + n] for i in range(m - n + 1))


def ngram_counts(corpus: Union[Corpus, Sequence[bytes]], n: int) -> GramCounts:
    """Document-term count matrix with columns sorted by gram bytes."""
    if isinstance(corpus, Corpus):
        payloads = corpus.payloads
        rows = np.array([m.index for m in corpus], dtype=np.int64)
    else:
        payloads = [bytes(p) for p in corpus]
        rows = np.arange(len(payloads), dtype=np.int64)
    bags = [tokenize(p, n) for p in payloads]
    vocab = sorted(set().union(*bags)) if bags else []
    col_of = {g: j for j, g in enumerate(vocab)}
    indptr = [0]
    indices = []
    data = []
    for bag in bags:
        cols = sorted(col_of[g] for g in bag)
        indices.extend(cols)
        data.extend(bag[vocab[c]] for c in cols)
        indptr.append(len(indices))
    counts = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(payloads), len(vocab)))
    return GramCounts(rows, tuple(vocab), counts)


def tfidf_weight(counts: GramCounts) -> FeatureMatrix:
    """weight = raw count * ln(N / df), natural log, no smoothing."""
    n_docs, n_terms = counts.counts.shape
    if n_docs < 1 or n_terms < 1:
        raise AllColumnsDropped("no n-grams to weight")
    c = counts.counts.tocsr()
    presence = c.copy()
    presence.data = np.ones_like(presence.data, dtype=bool)
    presence = presence.astype(bool)
    df = np.bincount(c.indices, minlength=n_terms)
    idf = np.log(n_docs / df)
    w = c.copy()
    w.data = c.data * idf[c.indices]
    # idf == 0 entries stay stored so weights and presence share a sparsity pattern
    return FeatureMatrix(counts.rows, counts.columns, w, presence)


def filter_sparse(fm: FeatureMatrix, max_sparsity: float = DEFAULT_MAX_SPARSITY) -> FeatureMatrix:
    """Drop n-grams absent from more than ``max_sparsity`` of the rows."""
    if not 0.0 < max_sparsity <= 1.0:
        raise ValueError("max_sparsity must lie in (0, 1]")
    n_docs, n_terms = fm.presence.shape
    df = np.bincount(fm.presence.indices, minlength=n_terms)
    absence = (n_docs - df) / n_docs
    keep = np.flatnonzero(absence <= max_sparsity)
    if keep.size == 0:
        raise AllColumnsDropped(f"every n-gram is sparser than {max_sparsity}")
    if keep.size == n_terms:
        return fm
    return FeatureMatrix(
        fm.rows,
        tuple(fm.columns[j] for j in keep),
        fm.weights[:, keep].tocsr(),
        fm.presence[:, keep].tocsr(),
    )


def featurize(corpus: Corpus, config: PreprocessConfig) -> FeatureMatrix:
    """truncate -> subsample -> tokenize -> TF-IDF -> sparsity filter."""
    c = truncate(corpus, config.message_length)
    c = subsample(c, config.subsample_size, config.subsample_offset)
    fm = tfidf_weight(ngram_counts(c, config.ngram_length))
    return filter_sparse(fm, config.max_sparsity)


def export_csv(fm: FeatureMatrix, path: Union[str, Path]) -> None:
    """Dense dump: header of hex-encoded grams, one weight row per message."""
    dense = fm.dense()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([g.hex() for g in fm.columns])
        for row in dense:
            w.writerow([repr(float(v)) for v in row])
