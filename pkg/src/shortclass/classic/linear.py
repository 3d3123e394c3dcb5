"""Logistic regression (full-batch gradient descent) and a linear soft-margin SVM."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .. import _backend
from ..errors import DataError, NumericError
from ..vectorize import FeatureMatrix
from .model import ClassifierModel, as_matrix


def _feature_kind(X):
    return X.representation if isinstance(X, FeatureMatrix) else "counts"


def _labels(y, n):
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise DataError(f"{n} feature rows but {y.shape[0]} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("labels must be 0 or 1")
    return y


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_loss(X, y, w, b, l2_strength):
    """Mean binary cross-entropy of ``sigmoid(Xw + b)`` plus ``l2/2 * ||w||^2``."""
    with np.errstate(over="ignore", invalid="ignore"):  # overflow surfaces as a non-finite loss
        z = X @ w + b
        return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_strength * (w @ w))


def logreg_gradient(X, y, w, b, l2_strength, fit_intercept=True):
    r = sigmoid(X @ w + b) - y
    gw = np.asarray(X.T @ r).ravel() / X.shape[0] + l2_strength * w
    gb = float(r.mean()) if fit_intercept else 0.0
    return gw, gb


def train_logreg(X, y, l2_strength=1e-4, learning_rate=1.0, max_iter=500, tol=1e-6, seed=0,
                 fit_intercept=True) -> ClassifierModel:
    """Fit logistic regression by full-batch gradient descent.

    A step that would raise the regularized loss is retried with half the
    step size; accepted steps grow the step by 20%, so the loss sequence is
    non-increasing. Stops when the gradient's infinity norm drops below
    ``tol``, when the step size collapses, or after ``max_iter`` steps.
    ``seed`` is accepted for interface symmetry; the fit is deterministic.
    """
    del seed
    if l2_strength < 0 or learning_rate <= 0:
        raise DataError("need l2_strength >= 0 and learning_rate > 0")
    kind = _feature_kind(X)
    X = as_matrix(X)
    n, m = X.shape
    y = _labels(y, n)
    w = np.zeros(m)
    b = 0.0
    loss = logreg_loss(X, y, w, b, l2_strength)
    if not np.isfinite(loss):
        raise NumericError("initial logistic loss is not finite")
    step = learning_rate
    losses = [loss]
    converged = False
    for _ in range(max_iter):
        gw, gb = logreg_gradient(X, y, w, b, l2_strength, fit_intercept)
        if max(np.abs(gw).max(initial=0.0), abs(gb)) < tol:
            converged = True
            break
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss = logreg_loss(X, y, w_new, b_new, l2_strength)
            if np.isfinite(new_loss) and new_loss <= loss:
                break
            step /= 2.0
            if step < learning_rate * 1e-15:
                if not np.isfinite(new_loss):
                    raise NumericError("logistic loss became non-finite; lower the learning rate")
                break
        if step < learning_rate * 1e-15:
            converged = True
            break
        w, b, loss = w_new, b_new, new_loss
        losses.append(loss)
        step *= 1.2
    return ClassifierModel(
        "logreg", {"w": w, "b": b},
        {"l2_strength": l2_strength, "learning_rate": learning_rate, "max_iter": max_iter,
         "tol": tol, "fit_intercept": fit_intercept},
        0.5, kind, m,
        {"loss_history": losses, "converged": converged})


def logreg_scores(model, X):
    return sigmoid(np.asarray(X @ model.params["w"]).ravel() + model.params["b"])


def train_linear_svm(X, y, C=1.0, epochs=20, seed=0) -> ClassifierModel:
    """Linear SVM minimizing ``0.5*||w||^2 + C * sum(hinge)`` with Pegasos steps.

    Each epoch visits the rows in a fresh seeded permutation; the step at
    update ``t`` is ``1/(lambda*t)`` with ``lambda = 1/(C*n)``. The bias is
    learned as the weight of a constant feature, so it is regularized too.
    """
    if C <= 0 or epochs < 1:
        raise DataError("need C > 0 and epochs >= 1")
    kind = _feature_kind(X)
    M = sp.csr_matrix(as_matrix(X), dtype=np.float64)
    M.sort_indices()
    n, m = M.shape
    ys = 2.0 * _labels(y, n) - 1.0
    lam = 1.0 / (C * n)
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    w = np.zeros(m)
    b, _ = _backend.kernels().pegasos(M.data, M.indices.astype(np.int64), M.indptr.astype(np.int64),
                                      ys, order, w, 0.0, lam, 0)
    if not (np.isfinite(w).all() and np.isfinite(b)):
        raise NumericError("SVM weights diverged")
    return ClassifierModel("svm", {"w": w, "b": float(b)}, {"C": C, "epochs": epochs, "seed": seed},
                           0.0, kind, m)


def svm_objective(X, y, w, b, C):
    ys = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    margins = ys * (np.asarray(as_matrix(X) @ w).ravel() + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def svm_scores(model, X):
    return np.asarray(X @ model.params["w"]).ravel() + model.params["b"]
