"""Multinomial naive Bayes with Laplace smoothing."""
from __future__ import annotations

import numpy as np

from ..errors import DataError, RepresentationError
from ..vectorize import FeatureMatrix
from .model import ClassifierModel, as_matrix


def train_multinomial_nb(X, y, alpha=1.0) -> ClassifierModel:
    """Fit class priors and smoothed per-class token likelihoods.

    ``p(j | c) = (count(j, c) + alpha) / (sum_j count(j, c) + alpha * V)``.
    Only count features are accepted.
    """
    if isinstance(X, FeatureMatrix) and X.representation != "counts":
        raise RepresentationError("multinomial naive Bayes needs count features")
    if alpha <= 0:
        raise DataError("alpha must be > 0")
    M = as_matrix(X)
    y = np.asarray(y, dtype=np.int64).ravel()
    if M.shape[0] != y.shape[0]:
        raise DataError(f"{M.shape[0]} feature rows but {y.shape[0]} labels")
    V = M.shape[1]
    log_prior = np.empty(2)
    log_lik = np.empty((2, V))
    for c in (0, 1):
        rows = y == c
        n_c = int(rows.sum())
        if n_c == 0:
            raise DataError(f"class {c} is absent from the training data")
        counts = np.asarray(M[rows].sum(axis=0)).ravel()
        log_prior[c] = np.log(n_c / y.shape[0])
        log_lik[c] = np.log(counts + alpha) - np.log(counts.sum() + alpha * V)
    return ClassifierModel("nb", {"log_prior": log_prior, "log_likelihood": log_lik},
                           {"alpha": alpha}, 0.5, "counts", V)


def nb_joint_log(model, X):
    """Unnormalized log posterior per class, shape ``(n, 2)``."""
    return np.asarray(X @ model.params["log_likelihood"].T) + model.params["log_prior"]


def nb_posteriors(model, X):
    """Normalized class posteriors, shape ``(n, 2)``."""
    jl = nb_joint_log(model, X)
    top = jl.max(axis=1, keepdims=True)
    lse = top + np.log(np.exp(jl - top).sum(axis=1, keepdims=True))
    return np.exp(jl - lse)


def nb_scores(model, X):
    jl = nb_joint_log(model, X)
    # P(1|x) = sigmoid(l1 - l0), computed without overflow
    d = jl[:, 1] - jl[:, 0]
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out
