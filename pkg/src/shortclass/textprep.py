"""Cleaning and tokenization of short texts."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from nltk.stem.porter import PorterStemmer


def load_stopwords(path) -> frozenset[str]:
    """Read a newline-delimited stopword file; ``#`` starts a comment line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(w.strip().lower() for w in lines if w.strip() and not w.startswith("#"))


def _bundled_stopwords():
    text = resources.files("shortclass").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


DEFAULT_STOPWORDS = _bundled_stopwords()

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"@\w+")
_HASHTAG = re.compile(r"#(\w+)")
_NON_ALPHA_LOWER = re.compile(r"[^a-z]+")
_NON_ALPHA = re.compile(r"[^a-zA-Z]+")


@dataclass(frozen=True)
class PrepConfig:
    lowercase: bool = True
    strip_urls: bool = True
    strip_mentions: bool = True
    keep_hashtag_word: bool = True
    min_token_len: int = 3
    stopwords: frozenset = field(default=DEFAULT_STOPWORDS)
    stemming: bool = False

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        object.__setattr__(self, "stopwords", frozenset(w.lower() for w in self.stopwords))

    def to_dict(self):
        d = {k: getattr(self, k) for k in ("lowercase", "strip_urls", "strip_mentions",
                                           "keep_hashtag_word", "min_token_len", "stemming")}
        d["stopwords"] = None if self.stopwords == DEFAULT_STOPWORDS else sorted(self.stopwords)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        stop = d.pop("stopwords", None)
        stop_file = d.pop("stopwords_file", None)
        if stop_file:
            d["stopwords"] = load_stopwords(stop_file)
        elif stop is not None:
            d["stopwords"] = frozenset(stop)
        return cls(**d)


def clean_and_tokenize(raw_text: str, config: PrepConfig = PrepConfig()) -> list[str]:
    """Clean a short text and split it into tokens.

    Steps run in a fixed order: lowercase, strip URLs, strip @mentions,
    drop the ``#`` of hashtags (or the whole hashtag), drop non-alphabetic
    characters, split on whitespace, drop short tokens, drop stopwords and
    optionally stem.

    >>> clean_and_tokenize("Check https://t.co/x #ClimateChange @UNDP!!")
    ['check', 'climatechange']
    """
    text = raw_text.lower() if config.lowercase else raw_text
    if config.strip_urls:
        text = _URL.sub(" ", text)
    if config.strip_mentions:
        text = _MENTION.sub(" ", text)
    text = _HASHTAG.sub(r" \1" if config.keep_hashtag_word else " ", text)
    text = (_NON_ALPHA_LOWER if config.lowercase else _NON_ALPHA).sub(" ", text)
    tokens = [t for t in text.split() if len(t) >= config.min_token_len]
    tokens = [t for t in tokens if t.lower() not in config.stopwords]
    if config.stemming:
        tokens = stem_tokens(tokens)
    return tokens


@lru_cache(maxsize=1)
def _stemmer():
    return PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


@lru_cache(maxsize=65536)
def _stem(token):
    return _stemmer().stem(token)


def stem_tokens(tokens: list[str]) -> list[str]:
    """Porter stems (original published rule set), order and multiplicity preserved."""
    return [_stem(t) for t in tokens]
