import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from datasets import blobs, xor_points
from shortclass.classic import (CLIMATE_LEXICON, ClassifierModel, Lexicon, classify, knn_neighbors,
                                knn_predict, lexicon_classify, logreg_gradient, logreg_loss,
                                make_lexicon_model, nb_posteriors, svm_objective, train_knn,
                                train_linear_svm, train_logreg, train_multinomial_nb,
                                train_random_forest)
from shortclass.classic.forest import n_candidate_features, tree_votes
from shortclass.errors import DataError, RepresentationError
from shortclass.vectorize import build_vocab, featurize


# lexicon

def test_lexicon_examples():
    assert lexicon_classify(["globalwarming", "is", "real"]) == 1
    assert lexicon_classify(["vaccines", "save", "lives"]) == 0
    two = Lexicon(CLIMATE_LEXICON.key_terms, min_matches=2)
    assert lexicon_classify(["climate", "policy"], two) == 0
    assert lexicon_classify(["climate", "agw"], two) == 1


def test_lexicon_model_scores_equal_labels():
    m = make_lexicon_model()
    labels, scores = classify(m, [["climate"], ["cats"], []])
    assert labels.tolist() == [1, 0, 0]
    assert np.array_equal(scores, labels)


def test_lexicon_validation():
    with pytest.raises(ValueError):
        Lexicon(frozenset())
    assert Lexicon(frozenset({"AGW"})).key_terms == {"agw"}


# logistic regression

def test_logreg_separable_1d():
    X = np.array([[-1.0], [1.0]] * 50)
    y = np.array([0, 1] * 50)
    labels, _ = classify(train_logreg(X, y, l2_strength=0.0, max_iter=200), X)
    assert np.array_equal(labels, y)


def test_logreg_zero_weights_score_half():
    m = ClassifierModel("logreg", {"w": np.zeros(3), "b": 0.0}, {}, 0.5, "counts", 3)
    labels, scores = classify(m, np.eye(3))
    assert np.all(scores == 0.5) and np.all(labels == 1)


def test_logreg_matches_grid_oracle(rng):
    X = rng.normal(size=(40, 2))
    y = (X[:, 0] - 0.5 * X[:, 1] + rng.normal(scale=0.8, size=40) > 0).astype(int)
    l2 = 0.1
    m = train_logreg(X, y, l2_strength=l2, fit_intercept=False, max_iter=2000, tol=1e-9)
    grid = np.linspace(-5, 5, 201)
    W = np.array(list(itertools.product(grid, grid)))
    Z = X @ W.T
    losses = np.mean(np.logaddexp(0, Z) - y[:, None] * Z, axis=0) + 0.5 * l2 * (W ** 2).sum(axis=1)
    learned = logreg_loss(X, y, m.params["w"], 0.0, l2)
    assert learned <= losses.min() + 1e-12
    assert abs(learned - losses.min()) < 1e-2


def test_logreg_loss_monotone_and_stationary(rng):
    X, y = blobs(80, seed=1, gap=0.7)
    tol = 1e-6
    m = train_logreg(X, y, l2_strength=1e-2, tol=tol, max_iter=5000)
    hist = m.diagnostics["loss_history"]
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    gw, gb = logreg_gradient(X, y, m.params["w"], m.params["b"], 1e-2)
    assert max(np.abs(gw).max(), abs(gb)) < 10 * tol


def test_logreg_gradient_finite_differences(rng):
    X = rng.normal(size=(15, 4))
    y = rng.integers(0, 2, 15)
    w, b = rng.normal(size=4), 0.3
    gw, gb = logreg_gradient(X, y, w, b, 0.05)
    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        num = (logreg_loss(X, y, w + e, b, 0.05) - logreg_loss(X, y, w - e, b, 0.05)) / (2 * h)
        assert num == pytest.approx(gw[j], rel=1e-6, abs=1e-9)
    num_b = (logreg_loss(X, y, w, b + h, 0.05) - logreg_loss(X, y, w, b - h, 0.05)) / (2 * h)
    assert num_b == pytest.approx(gb, rel=1e-6)


# SVM

def test_svm_separable_blobs():
    X, y = blobs(100, seed=2)
    m = train_linear_svm(X, y, C=10.0, epochs=50)
    labels, margins = classify(m, X)
    assert np.array_equal(labels, y)
    assert np.all((2 * y - 1) * margins > 0)


def test_svm_weights_shrink_with_c():
    X, y = blobs(100, seed=3, gap=1.0)
    norms = [np.linalg.norm(train_linear_svm(X, y, C=c, epochs=30).params["w"])
             for c in (10.0, 1.0, 0.1, 0.01, 0.001)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_svm_objective_near_grid_minimum(rng):
    X, y = blobs(20, seed=4, gap=0.4)
    C = 1.0
    m = train_linear_svm(X, y, C=C, epochs=3000, seed=1)
    learned = svm_objective(X, y, m.params["w"], m.params["b"], C)
    g = np.linspace(-4, 4, 161)
    W1, W2, B = np.meshgrid(g, g, g, indexing="ij")
    Wf = np.stack([W1.ravel(), W2.ravel()], axis=1)
    ys = 2.0 * y - 1.0
    hinge = np.zeros(len(Wf))
    for i in range(len(y)):
        hinge += np.maximum(0.0, 1.0 - ys[i] * (Wf @ X[i] + B.ravel()))
    grid_min = (0.5 * (Wf ** 2).sum(axis=1) + C * hinge).min()
    assert learned <= 1.01 * grid_min


def test_svm_rejects_bad_settings():
    X, y = blobs(10)
    with pytest.raises(DataError):
        train_linear_svm(X, y, C=0.0)


# naive Bayes

def test_nb_hand_arithmetic():
    v = build_vocab([["a", "a"], ["b"]], 10)
    X = featurize([["a", "a"], ["b"]], v, "counts")
    m = train_multinomial_nb(X, [1, 0], alpha=1.0)
    a = v.token_to_index["a"]
    assert np.exp(m.params["log_likelihood"][1, a]) == pytest.approx(0.75)
    assert np.exp(m.params["log_prior"]).tolist() == [0.5, 0.5]


def test_nb_symmetry_gives_half():
    X = np.array([[1, 1], [1, 1]], dtype=float)
    m = train_multinomial_nb(X, [0, 1])
    _, scores = classify(m, np.array([[3.0, 0.0], [0.0, 0.0], [2.0, 5.0]]))
    assert np.allclose(scores, 0.5)


def test_nb_unseen_token_has_smoothed_floor():
    X = np.array([[2, 0], [0, 3]], dtype=float)
    m = train_multinomial_nb(X, [0, 1])
    assert np.all(np.isfinite(m.params["log_likelihood"]))
    post = nb_posteriors(m, np.array([[0.0, 5.0]]))
    assert 0 < post[0, 0] < 1


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_nb_posteriors_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    X = rng.poisson(1.0, size=(30, 12)).astype(float)
    y = np.r_[0, 1, rng.integers(0, 2, 28)]
    m = train_multinomial_nb(X, y, alpha=float(rng.uniform(0.01, 2)))
    Q = rng.poisson(rng.uniform(0.1, 20), size=(20, 12)).astype(float)
    assert np.allclose(nb_posteriors(m, Q).sum(axis=1), 1.0, atol=1e-12, rtol=0)


def test_nb_errors():
    v = build_vocab([["a"], ["b"]], 10)
    with pytest.raises(RepresentationError):
        train_multinomial_nb(featurize([["a"], ["b"]], v, "tfidf"), [0, 1])
    with pytest.raises(DataError):
        train_multinomial_nb(np.ones((2, 2)), [1, 1])


# k nearest neighbours

def knn_oracle(train, y, q, k):
    d = [float(((train[i] - q) ** 2).sum()) for i in range(len(train))]
    order = sorted(range(len(train)), key=lambda i: (d[i], i))[:k]
    return int(sum(y[i] for i in order) * 2 > k), order


def test_knn_examples():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    y = np.array([0, 1, 1, 0])
    assert knn_predict(X, y, X[3], 1) == 0
    assert knn_predict(X, y, np.array([0.6, 0.6]), 3) == 1


def test_knn_matches_exhaustive_oracle(rng):
    train = rng.integers(0, 4, size=(50, 5)).astype(float)
    y = rng.integers(0, 2, 50)
    queries = rng.integers(0, 4, size=(500, 5)).astype(float)
    for k in (1, 3, 5, 7):
        got = knn_neighbors(train, queries, k)
        m = train_knn(train, y, k=k)
        labels, _ = classify(m, queries)
        for q, row, lab in zip(queries, got, labels):
            exp_label, exp_order = knn_oracle(train, y, q, k)
            assert row.tolist() == exp_order
            assert lab == exp_label


def test_knn_sparse_and_dense_agree(rng):
    train = rng.poisson(0.4, size=(60, 30)).astype(float)
    q = rng.poisson(0.4, size=(25, 30)).astype(float)
    assert np.array_equal(knn_neighbors(sp.csr_matrix(train), sp.csr_matrix(q), 5), knn_neighbors(train, q, 5))


@pytest.mark.parametrize("k,n", [(2, 10), (11, 10), (1, 0)])
def test_knn_errors(k, n):
    with pytest.raises(DataError):
        train_knn(np.zeros((n, 2)), np.zeros(n), k=k)


# random forest

def test_forest_xor():
    X, y = xor_points(25)
    labels, _ = classify(train_random_forest(X, y, n_trees=50, seed=0), X)
    assert (labels == y).mean() >= 0.95


def test_single_tree_memorizes(rng):
    X = rng.integers(0, 5, size=(120, 6)).astype(float)
    X, keep = np.unique(X, axis=0, return_index=True)
    y = rng.integers(0, 2, len(X))
    m = train_random_forest(X, y, n_trees=1, bootstrap=False, seed=3)
    assert np.array_equal(classify(m, X)[0], y)


@pytest.mark.parametrize("label", [0, 1])
def test_forest_single_class(label):
    X = np.arange(10.0).reshape(5, 2)
    m = train_random_forest(X, np.full(5, label), n_trees=5)
    assert np.all(classify(m, X)[0] == label)
    assert len(m.params["feature"]) == 5


def test_forest_tie_goes_to_zero():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    m = train_random_forest(X, y, n_trees=2, bootstrap=False)
    votes = tree_votes(m, X)
    m.params["value"][:] = np.where(m.params["feature"] >= 0, 0.0, m.params["value"])
    flipped = dict(m.params)
    # make one tree vote 1 and the other 0 everywhere
    value = flipped["value"].copy()
    r1 = m.params["roots"][1]
    value[:r1] = 1.0
    value[r1:] = 0.0
    tie = ClassifierModel("rf", {**flipped, "value": value}, m.hyperparameters, m.threshold, "counts", 1)
    labels, scores = classify(tie, X)
    assert np.all(scores == 0.5) and np.all(labels == 0)
    assert votes.shape == (2, 2)


def test_forest_independent_of_workers(rng):
    X = rng.poisson(0.5, size=(200, 40)).astype(float)
    y = (X[:, 0] + X[:, 1] > X[:, 2]).astype(int)
    a = train_random_forest(X, y, n_trees=12, seed=9, workers=1)
    b = train_random_forest(X, y, n_trees=12, seed=9, workers=4)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert np.array_equal(classify(a, X)[1], classify(b, X)[1])


def test_max_features_rule():
    assert n_candidate_features("sqrt", 10) == 4
    assert n_candidate_features("sqrt", 16) == 4
    assert n_candidate_features(None, 7) == 7
    assert n_candidate_features(3, 7) == 3


def test_forest_depth_limit(rng):
    X = rng.normal(size=(100, 5))
    y = rng.integers(0, 2, 100)
    m = train_random_forest(X, y, n_trees=3, max_depth=1)
    # depth-1 trees: a root plus at most two leaves
    assert len(m.params["feature"]) <= 9


# shared prediction surface

MODELS = {
    "logreg": lambda X, y: train_logreg(X, y),
    "svm": lambda X, y: train_linear_svm(X, y),
    "nb": lambda X, y: train_multinomial_nb(X, y),
    "knn": lambda X, y: train_knn(X, y, k=3),
    "rf": lambda X, y: train_random_forest(X, y, n_trees=10),
}


@pytest.mark.parametrize("kind", sorted(MODELS))
def test_row_permutation_and_serialization(kind, rng):
    X = rng.poisson(1.0, size=(60, 8)).astype(float)
    y = (X[:, 0] > X[:, 1]).astype(int)
    y[:2] = [0, 1]
    m = MODELS[kind](X, y)
    labels, scores = classify(m, X)
    perm = rng.permutation(60)
    pl, ps = classify(m, X[perm])
    assert np.array_equal(pl, labels[perm]) and np.array_equal(ps, scores[perm])
    m2 = ClassifierModel.from_dict(m.to_dict())
    l2, s2 = classify(m2, X)
    assert np.array_equal(l2, labels) and np.array_equal(s2, scores)
    with pytest.raises(DataError):
        classify(m, X[:, :5])


@pytest.mark.parametrize("kind", ["logreg", "svm", "nb"])
def test_labels_agree_with_class_scores(kind, rng):
    X = rng.poisson(1.0, size=(80, 6)).astype(float)
    y = (X[:, 0] + rng.normal(size=80) > 1).astype(int)
    m = MODELS[kind](X, y)
    labels, scores = classify(m, X)
    if kind == "svm":
        assert np.array_equal(labels, (scores >= 0).astype(int))
        assert np.array_equal(labels, (3.5 * scores >= 0).astype(int))
    else:
        assert np.array_equal(labels, (scores >= 1 - scores).astype(int))
