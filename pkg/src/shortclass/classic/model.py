"""Unified fitted-model record and the prediction surface shared by all kinds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import _serial
from ..errors import DataError, RepresentationError
from ..vectorize import FeatureMatrix

KINDS = ("lexicon", "logreg", "svm", "nb", "knn", "rf")
MARGIN_KINDS = ("svm",)


@dataclass(frozen=True)
class ClassifierModel:
    """A fitted classifier.

    ``params`` holds the learned state (arrays and scalars). Probabilistic
    kinds score in [0, 1]; ``svm`` scores are signed margins. A row is
    labelled positive when its score is ``>= threshold``.
    """

    kind: str
    params: dict
    hyperparameters: dict
    threshold: float
    feature_kind: str
    n_features: int | None = None
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def to_dict(self):
        arrays, values = _serial.encode_params(self.params)
        return {"format": _serial.FORMAT, "version": _serial.VERSION, "kind": self.kind,
                "hyperparameters": self.hyperparameters, "threshold": self.threshold,
                "feature_kind": self.feature_kind, "n_features": self.n_features,
                "arrays": arrays, "values": values}

    @classmethod
    def from_dict(cls, d):
        _serial.check_envelope(d)
        return cls(d["kind"], _serial.decode_params(d["arrays"], d["values"]), d["hyperparameters"],
                   float(d["threshold"]), d["feature_kind"], d["n_features"])


def as_matrix(X):
    """CSR view of a feature container (FeatureMatrix, sparse or dense)."""
    if isinstance(X, FeatureMatrix):
        return X.values
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def check_features(model: ClassifierModel, X):
    if model.feature_kind == "tokens":
        return X
    if isinstance(X, FeatureMatrix) and X.representation != model.feature_kind:
        raise RepresentationError(f"{model.kind} model expects {model.feature_kind} features, "
                                  f"got {X.representation}")
    M = as_matrix(X)
    if model.n_features is not None and M.shape[1] != model.n_features:
        raise DataError(f"dimension mismatch: model has {model.n_features} features, input has {M.shape[1]}")
    return M


def scores(model: ClassifierModel, X) -> np.ndarray:
    from . import bayes, forest, knn, lexicon, linear

    scorer = {"lexicon": lexicon.lexicon_scores, "logreg": linear.logreg_scores,
              "svm": linear.svm_scores, "nb": bayes.nb_scores, "knn": knn.knn_scores,
              "rf": forest.forest_scores}[model.kind]
    return np.asarray(scorer(model, check_features(model, X)), dtype=np.float64)


def classify(model: ClassifierModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and scores for every row; labels use ``score >= threshold``."""
    s = scores(model, X)
    return (s >= model.threshold).astype(np.int64), s
