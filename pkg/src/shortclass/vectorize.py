"""Count, TF-IDF and integer-sequence representations of token lists."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError, RepresentationError

REPRESENTATIONS = ("counts", "tfidf")


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-index map fitted on training documents.

    Indices ``0..V-1`` follow descending corpus frequency with ties broken
    lexicographically. ``fingerprint`` identifies the document set the
    vocabulary was fitted on.
    """

    tokens: tuple[str, ...]
    doc_frequency: np.ndarray
    corpus_frequency: np.ndarray
    max_features: int
    n_docs_fitted: int
    fingerprint: str | None = None
    token_to_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "token_to_index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_index

    def to_dict(self):
        return {"tokens": list(self.tokens), "doc_frequency": self.doc_frequency.tolist(),
                "corpus_frequency": self.corpus_frequency.tolist(), "max_features": self.max_features,
                "n_docs_fitted": self.n_docs_fitted, "fingerprint": self.fingerprint}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["tokens"]), np.asarray(d["doc_frequency"], dtype=np.int64),
                   np.asarray(d["corpus_frequency"], dtype=np.int64), int(d["max_features"]),
                   int(d["n_docs_fitted"]), d.get("fingerprint"))


def build_vocab(train_docs, max_features: int, fingerprint: str | None = None) -> Vocabulary:
    """Keep the ``max_features`` most frequent tokens of the training documents."""
    if max_features < 1:
        raise DataError("max_features must be >= 1")
    docs = list(train_docs)
    corpus = Counter()
    df = Counter()
    for toks in docs:
        corpus.update(toks)
        df.update(set(toks))
    if not corpus:
        raise DataError("cannot build a vocabulary: every training document is empty")
    ranked = sorted(corpus, key=lambda t: (-corpus[t], t))[:max_features]
    return Vocabulary(tuple(ranked), np.array([df[t] for t in ranked], dtype=np.int64),
                      np.array([corpus[t] for t in ranked], dtype=np.int64),
                      max_features, len(docs), fingerprint)


def count_vectorize(tokens, vocab: Vocabulary) -> list[tuple[int, int]]:
    """Sparse ``(index, count)`` pairs sorted by index; unknown tokens are dropped."""
    index = vocab.token_to_index
    counts = Counter(index[t] for t in tokens if t in index)
    return sorted(counts.items())


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-document sparse matrix tagged with its representation."""

    values: sp.csr_matrix
    representation: str

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise RepresentationError(f"unknown representation {self.representation!r}")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def row(self, i) -> list[tuple[int, float]]:
        r = self.values.getrow(i)
        return list(zip(r.indices.tolist(), r.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self.values.toarray()

    def take(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.values[np.asarray(rows, dtype=np.int64)], self.representation)


def vectorize(docs, vocab: Vocabulary) -> FeatureMatrix:
    """Count matrix for a list of token lists."""
    index = vocab.token_to_index
    indptr, indices, data = [0], [], []
    for toks in docs:
        counts = Counter(index[t] for t in toks if t in index)
        for j in sorted(counts):
            indices.append(j)
            data.append(counts[j])
        indptr.append(len(indices))
    m = sp.csr_matrix((np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
                       np.asarray(indptr, dtype=np.int64)), shape=(len(indptr) - 1, len(vocab)))
    return FeatureMatrix(m, "counts")


def idf_weights(vocab: Vocabulary) -> np.ndarray:
    n = vocab.n_docs_fitted
    return np.log((1.0 + n) / (1.0 + vocab.doc_frequency)) + 1.0


def tfidf_transform(matrix: FeatureMatrix, vocab: Vocabulary) -> FeatureMatrix:
    """Smoothed TF-IDF: ``count * (ln((1+N)/(1+df)) + 1)``, rows scaled to unit L2 norm.

    All-zero rows stay zero.
    """
    if matrix.representation != "counts":
        raise RepresentationError("tfidf_transform expects a count matrix")
    if matrix.n_cols != len(vocab):
        raise DataError("matrix width does not match the vocabulary")
    m = matrix.values @ sp.diags(idf_weights(vocab))
    m = sp.csr_matrix(m)
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return FeatureMatrix(sp.csr_matrix(sp.diags(scale) @ m), "tfidf")


def featurize(docs, vocab: Vocabulary, representation: str) -> FeatureMatrix:
    counts = vectorize(docs, vocab)
    if representation == "counts":
        return counts
    if representation == "tfidf":
        return tfidf_transform(counts, vocab)
    raise RepresentationError(f"unknown representation {representation!r}")


def encode_sequence(tokens, vocab: Vocabulary, max_len: int) -> list[int]:
    """Token ids ``1..V`` (0 is padding), post-padded or tail-truncated to ``max_len``."""
    if max_len < 1:
        raise DataError("max_len must be >= 1")
    index = vocab.token_to_index
    ids = [index[t] + 1 for t in tokens if t in index][:max_len]
    return ids + [0] * (max_len - len(ids))


def encode_sequences(docs, vocab: Vocabulary, max_len: int) -> np.ndarray:
    return np.array([encode_sequence(t, vocab, max_len) for t in docs], dtype=np.int64).reshape(-1, max_len)


def save_vocab(vocab: Vocabulary, path) -> None:
    """Audit file with one ``token<TAB>index<TAB>df`` line per entry, sorted by token."""
    lines = sorted(f"{t}\t{i}\t{vocab.doc_frequency[i]}" for i, t in enumerate(vocab.tokens))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
