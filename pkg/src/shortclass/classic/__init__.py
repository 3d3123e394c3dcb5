"""Lexicon and traditional supervised classifiers behind one model record."""
from .bayes import nb_posteriors, train_multinomial_nb
from .forest import train_random_forest
from .knn import knn_neighbors, knn_predict, train_knn
from .lexicon import CLIMATE_LEXICON, Lexicon, lexicon_classify, make_lexicon_model
from .linear import logreg_gradient, logreg_loss, svm_objective, train_linear_svm, train_logreg
from .model import KINDS, ClassifierModel, classify, scores

__all__ = ["CLIMATE_LEXICON", "ClassifierModel", "KINDS", "Lexicon", "classify", "knn_neighbors",
           "knn_predict", "lexicon_classify", "logreg_gradient", "logreg_loss", "make_lexicon_model",
           "nb_posteriors", "scores", "svm_objective", "train_knn", "train_linear_svm", "train_logreg",
           "train_multinomial_nb", "train_random_forest"]
