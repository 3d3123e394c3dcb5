"""Random forest of Gini decision trees with bootstrap bagging."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp

from .. import _backend
from ..errors import DataError
from ..vectorize import FeatureMatrix
from .model import ClassifierModel, as_matrix

# strict majority: a tied vote is labelled 0
VOTE_THRESHOLD = float(np.nextafter(0.5, 1.0))


def n_candidate_features(rule, n_features):
    if rule == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if rule in (None, "all"):
        return n_features
    if isinstance(rule, int) and rule >= 1:
        return min(rule, n_features)
    raise DataError(f"unknown max_features rule {rule!r}")


def _dense(X):
    M = as_matrix(X)
    return np.ascontiguousarray(M.toarray() if sp.issparse(M) else M, dtype=np.float64)


def _csc(X):
    M = sp.csc_matrix(as_matrix(X), dtype=np.float64)
    M.eliminate_zeros()
    M.sort_indices()
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), np.ascontiguousarray(M.data)


def _grow(cols, y, t, seed, depth, n_cand, bootstrap):
    n = y.shape[0]
    rng = np.random.default_rng([seed, t])
    samples = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
    tree_seed = int(rng.integers(0, 2**63 - 1))
    return _backend.kernels().build_tree(*cols, y, samples.astype(np.int64), depth, n_cand, tree_seed)


def train_random_forest(X, y, n_trees=100, max_depth=None, max_features="sqrt", seed=0,
                        bootstrap=True, workers=1) -> ClassifierModel:
    """Fit ``n_trees`` Gini trees, each on an N-row bootstrap sample.

    Tree ``t`` draws its sample and feature stream from ``(seed, t)``, so the
    forest does not depend on ``workers``. A node becomes a leaf when it is
    pure, reaches ``max_depth`` or has no split separating distinct values.
    ``bootstrap=False`` fits every tree on the full training set.
    """
    if n_trees < 1:
        raise DataError("n_trees must be >= 1")
    kind = X.representation if isinstance(X, FeatureMatrix) else "counts"
    M = as_matrix(X)
    y8 = np.asarray(y, dtype=np.int8).ravel()
    if M.shape[0] != y8.shape[0]:
        raise DataError(f"{M.shape[0]} feature rows but {y8.shape[0]} labels")
    if M.shape[0] == 0:
        raise DataError("empty training set")
    if not np.isin(y8, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    cols = _csc(M)
    depth = -1 if max_depth is None else int(max_depth)
    n_cand = n_candidate_features(max_features, M.shape[1])
    args = [(cols, y8, t, seed, depth, n_cand, bootstrap) for t in range(n_trees)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(lambda a: _grow(*a), args))
    else:
        trees = [_grow(*a) for a in args]
    roots, feats, thr, left, right, val = [], [], [], [], [], []
    offset = 0
    for f, th, lf, rt, v in trees:
        roots.append(offset)
        feats.append(f)
        thr.append(th)
        left.append(np.where(lf >= 0, lf + offset, -1))
        right.append(np.where(rt >= 0, rt + offset, -1))
        val.append(v)
        offset += len(f)
    params = {"roots": np.array(roots, dtype=np.int64), "feature": np.concatenate(feats),
              "threshold": np.concatenate(thr), "left": np.concatenate(left),
              "right": np.concatenate(right), "value": np.concatenate(val)}
    hp = {"n_trees": n_trees, "max_depth": max_depth, "max_features": max_features, "seed": seed,
          "bootstrap": bootstrap}
    return ClassifierModel("rf", params, hp, VOTE_THRESHOLD, kind, M.shape[1])


def tree_votes(model, X, chunk=1024):
    """Per-tree 0/1 votes, shape ``(n_trees, n)``."""
    p = model.params
    M = as_matrix(X)
    k = _backend.kernels()
    roots = p["roots"]
    ends = np.append(roots[1:], len(p["feature"]))
    trees = []
    for lo, hi in zip(roots, ends):
        lf = np.where(p["left"][lo:hi] >= 0, p["left"][lo:hi] - lo, -1)
        rt = np.where(p["right"][lo:hi] >= 0, p["right"][lo:hi] - lo, -1)
        trees.append((p["feature"][lo:hi], p["threshold"][lo:hi], lf, rt, p["value"][lo:hi]))
    votes = np.empty((len(roots), M.shape[0]))
    for start in range(0, M.shape[0], chunk):
        Xd = _dense(M[start:start + chunk])
        for i, tree in enumerate(trees):
            votes[i, start:start + chunk] = k.predict_tree(Xd, *tree) > 0.5
    return votes


def forest_scores(model, X):
    """Fraction of trees voting 1."""
    return tree_votes(model, X).mean(axis=0)
