"""Keyword-lexicon classifier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import CLIMATE_TERMS
from .model import ClassifierModel


@dataclass(frozen=True)
class Lexicon:
    key_terms: frozenset
    min_matches: int = 1

    def __post_init__(self):
        terms = frozenset(t.lower() for t in self.key_terms)
        if not terms:
            raise ValueError("a lexicon needs at least one key term")
        if self.min_matches < 1:
            raise ValueError("min_matches must be >= 1")
        object.__setattr__(self, "key_terms", terms)


CLIMATE_LEXICON = Lexicon(frozenset(CLIMATE_TERMS))


def lexicon_classify(tokens, lexicon: Lexicon = CLIMATE_LEXICON) -> int:
    """1 when at least ``min_matches`` tokens are key terms.

    Tokens are matched before stemming; repeated occurrences each count.
    """
    hits = sum(1 for t in tokens if t in lexicon.key_terms)
    return int(hits >= lexicon.min_matches)


def make_lexicon_model(lexicon: Lexicon = CLIMATE_LEXICON) -> ClassifierModel:
    return ClassifierModel("lexicon", {"key_terms": sorted(lexicon.key_terms),
                                       "min_matches": lexicon.min_matches},
                           {"min_matches": lexicon.min_matches}, 0.5, "tokens")


def lexicon_scores(model: ClassifierModel, docs):
    lex = Lexicon(frozenset(model.params["key_terms"]), int(model.params["min_matches"]))
    return np.array([lexicon_classify(toks, lex) for toks in docs], dtype=np.float64)
