"""Per-method fitting on token lists and the serializable fitted pipeline."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _serial
from .classic import (ClassifierModel, classify, make_lexicon_model, train_knn, train_linear_svm,
                      train_logreg, train_multinomial_nb, train_random_forest)
from .classic.lexicon import Lexicon
from .corpus import CLIMATE_TERMS
from .errors import ConfigError, DataError
from .neural import NetConfig, TrainedNet, net_scores, train_net
from .textprep import PrepConfig, clean_and_tokenize
from .tune import Categorical, Integer, Real, SearchSpace
from .vectorize import Vocabulary, build_vocab, encode_sequences, featurize

TRADITIONAL = ("logreg", "svm", "nb", "knn", "rf")
NEURAL = ("fcnn", "cnn", "lstm")
METHODS = ("lexicon",) + TRADITIONAL + NEURAL

_COMMON = {"representation": Categorical(("counts", "tfidf")), "max_features": Integer(200, 3000, log=True)}
_NET = {"embedding_dim": Categorical((16, 32, 64)), "dropout_rate": Real(0.0, 0.5),
        "learning_rate": Real(1e-3, 2e-2, log=True), "batch_size": Categorical((32, 64, 128)),
        "max_vocab": Integer(500, 3000, log=True)}

DEFAULT_SPACES = {
    "logreg": {**_COMMON, "l2_strength": Real(1e-5, 1e-1, log=True)},
    "svm": {**_COMMON, "C": Real(1e-2, 10.0, log=True)},
    "nb": {"representation": Categorical(("counts",)), "max_features": _COMMON["max_features"],
           "alpha": Real(1e-2, 2.0, log=True)},
    "knn": {**_COMMON, "k": Categorical((1, 3, 5, 7, 9, 11, 15))},
    "rf": {**_COMMON, "n_trees": Integer(50, 150), "max_depth": Categorical((0, 20, 40))},
    "fcnn": {**_NET, "units": Categorical((16, 32, 64))},
    "cnn": {**_NET, "filters": Categorical((16, 32, 64)), "kernel_size": Categorical((2, 3, 5))},
    "lstm": {**_NET, "units": Categorical((16, 32)), "layer_dropout": Real(0.0, 0.5)},
}

# settings used when a method is fitted without tuning
DEFAULT_PARAMS = {
    "lexicon": {"min_matches": 1},
    "logreg": {"representation": "counts", "max_features": 2000, "l2_strength": 1e-3,
               "learning_rate": 1.0, "max_iter": 500, "tol": 1e-6},
    "svm": {"representation": "counts", "max_features": 2000, "C": 1.0, "epochs": 20},
    "nb": {"representation": "counts", "max_features": 2000, "alpha": 1.0},
    "knn": {"representation": "tfidf", "max_features": 2000, "k": 5, "leaf_size": 30},
    "rf": {"representation": "counts", "max_features": 2000, "n_trees": 100, "max_depth": 0},
    "fcnn": {}, "cnn": {}, "lstm": {},
}

NET_FIELDS = {f for f in NetConfig.__dataclass_fields__}


def default_space(method) -> SearchSpace:
    if method not in DEFAULT_SPACES:
        raise ConfigError(f"method {method!r} has no search space")
    return SearchSpace(dict(DEFAULT_SPACES[method]))


def prep_for(method, prep: PrepConfig) -> PrepConfig:
    """Keywords are matched before stemming, so the lexicon never stems."""
    return replace(prep, stemming=False) if method == "lexicon" else prep


@dataclass(frozen=True)
class FittedPipeline:
    """Text preprocessing, features and a fitted model, ready to score raw texts."""

    method: str
    prep: PrepConfig
    params: dict
    vocab: Vocabulary | None
    model: ClassifierModel | TrainedNet

    def features(self, tokens):
        if self.method == "lexicon":
            return list(tokens)
        if self.method in NEURAL:
            return encode_sequences(tokens, self.vocab, self.model.config.max_len)
        return featurize(tokens, self.vocab, self.params["representation"])

    def predict_features(self, X):
        """Labels and scores from precomputed features."""
        if self.method in NEURAL:
            s = net_scores(self.model, X)
            return (s >= 0.5).astype(np.int64), s
        return classify(self.model, X)

    def predict_tokens(self, tokens):
        return self.predict_features(self.features(tokens))

    def predict_texts(self, texts):
        return self.predict_tokens([clean_and_tokenize(t, self.prep) for t in texts])

    def to_dict(self):
        return {"format": _serial.FORMAT, "version": _serial.VERSION, "pipeline": self.method,
                "prep": self.prep.to_dict(), "params": self.params,
                "vocab": None if self.vocab is None else self.vocab.to_dict(),
                "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, d):
        _serial.check_envelope(d)
        method = d.get("pipeline")
        if method not in METHODS:
            raise DataError(f"unknown pipeline method {method!r}")
        model = (TrainedNet if method in NEURAL else ClassifierModel).from_dict(d["model"])
        vocab = None if d["vocab"] is None else Vocabulary.from_dict(d["vocab"])
        return cls(method, PrepConfig.from_dict(d["prep"]), d["params"], vocab, model)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from exc
        try:
            return cls.from_dict(d)
        except (KeyError, TypeError, AttributeError) as exc:
            raise DataError(f"malformed model file {path}: {exc!r}") from exc


def resolve_params(method, params=None) -> dict:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return {**DEFAULT_PARAMS[method], **(params or {})}


def net_config(params, base: NetConfig | None = None, seed=0) -> NetConfig:
    base = base or NetConfig()
    return base.replace(**{k: v for k, v in params.items() if k in NET_FIELDS}, seed=seed)


def fit(method, params, train_tokens, y_train, prep: PrepConfig, valid=None, seed=0,
        net_base: NetConfig | None = None, workers=1, early_stopping=True):
    """Fit one method on tokenized documents.

    Parameters
    ----------
    method : str
    params : dict
        Hyperparameters; missing keys take the values in ``DEFAULT_PARAMS``
        (or ``net_base`` for neural methods).
    train_tokens : list of token lists
    y_train : array of 0/1 labels
    prep : PrepConfig
        Recorded in the pipeline so raw texts can be scored later.
    valid : (token lists, labels), optional
        Validation data for early stopping of neural methods.
    early_stopping : bool
        With ``False`` a neural method trains for exactly ``epochs`` epochs
        and keeps the last weights.

    Returns
    -------
    FittedPipeline, training seconds (model fitting only) and an info dict.
    """
    params = resolve_params(method, params)
    y_train = np.asarray(y_train, dtype=np.int64)
    if method == "lexicon":
        t0 = time.perf_counter()
        model = make_lexicon_model(Lexicon(frozenset(params.get("key_terms", CLIMATE_TERMS)),
                                           int(params["min_matches"])))
        return FittedPipeline(method, prep, params, None, model), time.perf_counter() - t0, {}
    if method in NEURAL:
        cfg = net_config(params, net_base, seed)
        vocab = build_vocab(train_tokens, cfg.max_vocab)
        X = encode_sequences(train_tokens, vocab, cfg.max_len)
        v = None
        if valid is not None:
            v = (encode_sequences(valid[0], vocab, cfg.max_len), np.asarray(valid[1]))
        t0 = time.perf_counter()
        net = train_net(method, X, y_train, v, cfg, early_stopping=early_stopping)
        elapsed = time.perf_counter() - t0
        stored = {k: v for k, v in params.items() if k not in NET_FIELDS}
        return FittedPipeline(method, prep, stored, vocab, net), elapsed, {"best_epoch": net.best_epoch}
    vocab = build_vocab(train_tokens, int(params["max_features"]))
    X = featurize(train_tokens, vocab, params["representation"])
    t0 = time.perf_counter()
    if method == "logreg":
        model = train_logreg(X, y_train, params["l2_strength"], params["learning_rate"],
                             int(params["max_iter"]), params["tol"], seed)
    elif method == "svm":
        model = train_linear_svm(X, y_train, params["C"], int(params["epochs"]), seed)
    elif method == "nb":
        model = train_multinomial_nb(X, y_train, params["alpha"])
    elif method == "knn":
        model = train_knn(X, y_train, int(params["k"]), params.get("leaf_size", 30))
    else:
        depth = int(params["max_depth"]) or None
        model = train_random_forest(X, y_train, int(params["n_trees"]), depth,
                                    params.get("max_features_rule", "sqrt"), seed, workers=workers)
    return FittedPipeline(method, prep, params, vocab, model), time.perf_counter() - t0, {}
