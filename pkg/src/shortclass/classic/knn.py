"""Brute-force k-nearest-neighbour classifier (Euclidean, uniform weights)."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import DataError
from ..vectorize import FeatureMatrix
from .model import ClassifierModel, as_matrix


def _check_k(k, n_train):
    if n_train == 0:
        raise DataError("empty training set")
    if k < 1 or k % 2 == 0:
        raise DataError(f"k must be a positive odd number, got {k}")
    if k > n_train:
        raise DataError(f"k={k} exceeds the {n_train} training rows")


def train_knn(X, y, k=5, leaf_size=30) -> ClassifierModel:
    """Store the training rows. ``leaf_size`` is accepted and ignored."""
    M = sp.csr_matrix(as_matrix(X), dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    if M.shape[0] != y.shape[0]:
        raise DataError(f"{M.shape[0]} feature rows but {y.shape[0]} labels")
    _check_k(k, M.shape[0])
    kind = X.representation if isinstance(X, FeatureMatrix) else "counts"
    return ClassifierModel("knn", {"data": M.data, "indices": M.indices.astype(np.int64),
                                   "indptr": M.indptr.astype(np.int64), "y": y},
                           {"k": k, "leaf_size": leaf_size}, 0.5, kind, M.shape[1])


def _train_matrix(model):
    p = model.params
    return sp.csr_matrix((p["data"], p["indices"], p["indptr"]),
                         shape=(len(p["indptr"]) - 1, model.n_features))


def sq_distances(train, queries):
    """Squared Euclidean distances, shape ``(n_queries, n_train)``, clipped at 0."""
    tn = np.asarray(train.multiply(train).sum(axis=1)).ravel()
    if sp.issparse(queries):
        qn = np.asarray(queries.multiply(queries).sum(axis=1)).ravel()
        cross = (queries @ train.T).toarray()
    else:
        qn = (queries * queries).sum(axis=1)
        cross = np.asarray(train @ queries.T).T
    return np.maximum(qn[:, None] - 2.0 * cross + tn[None, :], 0.0)


def knn_neighbors(train_X, queries, k, chunk=512):
    """Indices of the ``k`` nearest training rows per query, nearest first.

    Distance ties go to the lower training index.
    """
    train = sp.csr_matrix(as_matrix(train_X), dtype=np.float64)
    Q = as_matrix(queries)
    _check_k(k, train.shape[0])
    out = np.empty((Q.shape[0], k), dtype=np.int64)
    for lo in range(0, Q.shape[0], chunk):
        d = sq_distances(train, Q[lo:lo + chunk])
        out[lo:lo + chunk] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def knn_predict(train_X, train_y, x, k) -> int:
    """Majority label among the ``k`` nearest training rows to ``x``."""
    train_y = np.asarray(train_y, dtype=np.int64)
    nb = knn_neighbors(train_X, x, k)[0]
    return int(2 * train_y[nb].sum() > k)


def knn_scores(model, X):
    nb = knn_neighbors(_train_matrix(model), X, model.hyperparameters["k"])
    return model.params["y"][nb].mean(axis=1)
