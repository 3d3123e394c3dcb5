"""Labeled corpora: loading, stratified splits, class balance and synthetic data."""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, PoolExhaustedError

SOURCES = ("primary_corpus", "augmentation_pool", "synthetic")

# Key terms of the climate-change lexicon used throughout the experiments.
CLIMATE_TERMS = ("climate", "climatechange", "globalwarming", "climaterealists", "agw")


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    raw_text: str
    label: int
    source: str = "primary_corpus"
    label2: int | None = None
    flagged_empty: bool = False

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataError(f"document {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if self.label2 is not None and self.label2 not in (0, 1):
            raise DataError(f"document {self.id!r}: label2 must be 0 or 1, got {self.label2!r}")
        if self.source not in SOURCES:
            raise DataError(f"document {self.id!r}: unknown source {self.source!r}")
        if not self.raw_text and not self.flagged_empty:
            raise DataError(f"document {self.id!r}: empty text must be flagged by the loader")


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of labeled documents."""

    documents: tuple[LabeledDocument, ...]
    positive_count: int = field(init=False)
    negative_count: int = field(init=False)

    def __post_init__(self):
        docs = tuple(self.documents)
        object.__setattr__(self, "documents", docs)
        seen = set()
        for doc in docs:
            if doc.id in seen:
                raise DataError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
        pos = sum(doc.label for doc in docs)
        object.__setattr__(self, "positive_count", pos)
        object.__setattr__(self, "negative_count", len(docs) - pos)

    def __len__(self):
        return len(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def __iter__(self):
        return iter(self.documents)

    @property
    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)

    @property
    def texts(self) -> list[str]:
        return [d.raw_text for d in self.documents]

    def extend(self, docs) -> "Dataset":
        return Dataset(self.documents + tuple(docs))

    def fingerprint(self, indices=None) -> str:
        """SHA-256 over (id, label, text) of the selected documents."""
        h = hashlib.sha256()
        rows = self.documents if indices is None else (self.documents[i] for i in indices)
        for d in rows:
            h.update(f"{d.id}\x1f{d.label}\x1f{d.raw_text}\x1e".encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class DataSplit:
    """Disjoint train/valid/test index sets over one dataset."""

    dataset: Dataset
    train: tuple[int, ...]
    valid: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        for name in ("train", "valid", "test"):
            object.__setattr__(self, name, tuple(sorted(int(i) for i in getattr(self, name))))
        a, b, c = set(self.train), set(self.valid), set(self.test)
        if a & b or a & c or b & c:
            raise DataError("split index sets overlap")
        if any(i < 0 or i >= len(self.dataset) for i in a | b | c):
            raise DataError("split index out of range")

    def indices(self, name) -> tuple[int, ...]:
        return getattr(self, name)

    def documents(self, name) -> list[LabeledDocument]:
        return [self.dataset[i] for i in getattr(self, name)]

    def labels(self, name) -> np.ndarray:
        return np.array([self.dataset[i].label for i in getattr(self, name)], dtype=np.int64)

    def counts(self, name) -> tuple[int, int]:
        """(positives, negatives) in one split."""
        y = self.labels(name)
        return int(y.sum()), int(len(y) - y.sum())


def load_csv(path, text_column="text", label_column="label", id_column="id",
             label2_column="label2", source="primary_corpus") -> Dataset:
    """Read a UTF-8 CSV with a header row into a :class:`Dataset`.

    Row numbers in error messages count data rows from 1 (the header is not
    counted). Documents get ids ``row-<n>`` when the file has no id column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    docs = []
    seen = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (text_column, label_column):
            if col not in header:
                raise DataError(f"{path}: missing column {col!r} (header: {header})")
        has_id = id_column in header
        has_label2 = label2_column in header
        for rowno, row in enumerate(reader, start=1):
            label = _parse_label(row[label_column], rowno, label_column)
            label2 = None
            if has_label2 and row[label2_column] not in ("", None):
                label2 = _parse_label(row[label2_column], rowno, label2_column)
            doc_id = row[id_column] if has_id else f"row-{rowno}"
            if doc_id in seen:
                raise DataError(f"{path}: duplicate id {doc_id!r} at row {rowno}")
            seen.add(doc_id)
            text = row[text_column] or ""
            docs.append(LabeledDocument(doc_id, text, label, source, label2, flagged_empty=not text))
    return Dataset(tuple(docs))


def _parse_label(raw, rowno, column):
    value = (raw or "").strip()
    if value not in ("0", "1"):
        raise DataError(f"row {rowno}: {column} must be 0 or 1, got {raw!r}")
    return int(value)


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the same CSV shape :func:`load_csv` reads."""
    with_label2 = any(d.label2 is not None for d in dataset)
    cols = ["id", "text", "label", "source"] + (["label2"] if with_label2 else [])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for d in dataset:
            row = [d.id, d.raw_text, d.label, d.source]
            if with_label2:
                row.append("" if d.label2 is None else d.label2)
            writer.writerow(row)


def _largest_remainder(quotas: dict, total: int) -> dict:
    alloc = {k: math.floor(q) for k, q in quotas.items()}
    left = total - sum(alloc.values())
    order = sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), k))
    for k in order[:max(left, 0)]:
        alloc[k] += 1
    return alloc


def stratified_split(dataset: Dataset, test_frac=0.15, valid_frac_of_train=0.15, seed=0) -> DataSplit:
    """Stratified train/valid/test split.

    Split sizes are ``round(test_frac * n)`` for test and
    ``round(valid_frac_of_train * rest)`` for validation. Positives are then
    apportioned to the three splits in proportion to their sizes with the
    largest-remainder rule, so every split's positive (and negative) count is
    within one document of its exact share.
    """
    if not (0 < test_frac < 1 and 0 <= valid_frac_of_train < 1):
        raise DataError("split fractions must lie in (0, 1)")
    y = dataset.labels
    by_class = {c: np.nonzero(y == c)[0] for c in (0, 1)}
    for c, idx in by_class.items():
        if len(idx) < 3:
            raise DataError(f"class {c} has {len(idx)} documents; at least 3 are needed to stratify")

    rng = np.random.default_rng(seed)
    shuffled = {c: rng.permutation(idx) for c, idx in by_class.items()}
    n = len(dataset)
    n_pos = len(by_class[1])
    size = {"test": int(math.floor(test_frac * n + 0.5))}
    size["valid"] = int(math.floor(valid_frac_of_train * (n - size["test"]) + 0.5))
    size["train"] = n - size["test"] - size["valid"]
    pos = _largest_remainder({k: v * n_pos / n for k, v in size.items()}, n_pos)
    n_test = {1: pos["test"], 0: size["test"] - pos["test"]}
    n_valid = {1: pos["valid"], 0: size["valid"] - pos["valid"]}
    train, valid, test = [], [], []
    for c, idx in shuffled.items():
        test.extend(idx[:n_test[c]])
        valid.extend(idx[n_test[c]:n_test[c] + n_valid[c]])
        train.extend(idx[n_test[c] + n_valid[c]:])
    return DataSplit(dataset, tuple(train), tuple(valid), tuple(test), seed)


def balance_ratio(dataset) -> float:
    """Positives divided by negatives."""
    if isinstance(dataset, Dataset):
        pos, neg = dataset.positive_count, dataset.negative_count
    else:
        y = np.asarray(dataset)
        pos, neg = int((y == 1).sum()), int((y == 0).sum())
    if neg == 0:
        raise DataError("balance ratio is undefined without negative documents")
    return pos / neg


def rebalance(split: DataSplit, pool: Dataset, target_ratio: float, seed: int = 0,
              tolerance: float = 0.01) -> DataSplit:
    """Raise every split's balance ratio to ``target_ratio`` with pool positives.

    Original documents keep their split; each pool document joins exactly one
    split. A split already within ``tolerance`` of the target is left alone;
    any other receives ``round(target * negatives) - positives`` documents,
    taken from one seeded permutation of the pool in the order train, valid,
    test. Returns ``split`` unchanged when nothing is needed.
    """
    if not 0 < target_ratio <= 1:
        raise DataError(f"target ratio must lie in (0, 1], got {target_ratio}")
    if any(d.label != 1 for d in pool):
        raise DataError("augmentation pool must contain only positive documents")
    need = {}
    for name in ("train", "valid", "test"):
        pos, neg = split.counts(name)
        if neg == 0:
            need[name] = 0
            continue
        if pos / neg > target_ratio + tolerance:
            raise DataError(f"{name} split ratio {pos / neg:.4f} already exceeds target {target_ratio}")
        if abs(pos / neg - target_ratio) <= tolerance:
            need[name] = 0
        else:
            need[name] = max(0, int(math.floor(target_ratio * neg + 0.5)) - pos)
    total = sum(need.values())
    if total == 0:
        return split
    if total > len(pool):
        raise PoolExhaustedError(f"need {total} pool documents for ratio {target_ratio}, pool has {len(pool)}")

    existing = {d.id for d in split.dataset}
    order = np.random.default_rng(seed).permutation(len(pool))
    base = len(split.dataset)
    added, members, cursor = [], {}, 0
    for name in ("train", "valid", "test"):
        chunk = order[cursor:cursor + need[name]]
        cursor += need[name]
        members[name] = tuple(range(base + len(added), base + len(added) + len(chunk)))
        for j in chunk:
            doc = pool[int(j)]
            if doc.id in existing:
                raise DataError(f"pool document id {doc.id!r} collides with the corpus")
            added.append(doc)
    dataset = split.dataset.extend(added)
    return DataSplit(dataset, split.train + members["train"], split.valid + members["valid"],
                     split.test + members["test"], split.seed)


_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"


def noise_vocabulary(size: int) -> list[str]:
    """Deterministic pseudo-words; depends on ``size`` only, so corpora and pools share it."""
    from .textprep import DEFAULT_STOPWORDS

    rng = np.random.default_rng(1_000_003 + size)
    words, seen = [], set(CLIMATE_TERMS) | set(DEFAULT_STOPWORDS)
    while len(words) < size:
        n_syl = int(rng.integers(2, 4))
        w = "".join(_CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(n_syl))
        if rng.random() < 0.5:
            w += _CONSONANTS[rng.integers(len(_CONSONANTS))]
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


class _Generator:
    """Token-level generator of keyword-planted short texts.

    Noise words follow a Zipf-like law over the pseudo-vocabulary. A band of
    less frequent "cue" words (starting at relative rank ``cue_rank``)
    co-occurs with the topic: positives draw a noise token from that band
    with probability ``cue_prob``. Supervised models can
    exploit the cue words, a fixed keyword list cannot.
    """

    def __init__(self, topic_terms, noise_vocab_size, seed, topic_prob=0.95, leak_prob=0.02,
                 cue_prob=0.3, cue_rank=0.3, min_len=6, max_len=16):
        if not topic_terms:
            raise DataError("topic_terms must not be empty")
        self.topic = [t.lower() for t in topic_terms]
        self.vocab = noise_vocabulary(noise_vocab_size)
        weights = 1.0 / (np.arange(len(self.vocab)) + 10.0)
        self.p_noise = weights / weights.sum()
        lo = max(1, int(len(self.vocab) * cue_rank))
        self.cue = self.vocab[lo:lo + max(5, len(self.vocab) // 20)]
        self.rng = np.random.default_rng(seed)
        self.topic_prob, self.leak_prob, self.cue_prob = topic_prob, leak_prob, cue_prob
        self.min_len, self.max_len = min_len, max_len

    def _noise(self, k, positive):
        rng = self.rng
        toks = list(rng.choice(self.vocab, size=k, p=self.p_noise))
        if positive:
            for i in range(k):
                if rng.random() < self.cue_prob:
                    toks[i] = self.cue[rng.integers(len(self.cue))]
        return toks

    def text(self, label):
        rng = self.rng
        toks = self._noise(int(rng.integers(self.min_len, self.max_len + 1)), label == 1)
        n_topic = 0
        if label == 1 and rng.random() < self.topic_prob:
            n_topic = 2 if rng.random() < 0.2 else 1
        elif label == 0 and rng.random() < self.leak_prob:
            n_topic = 1
        for _ in range(n_topic):
            term = self.topic[rng.integers(len(self.topic))]
            if rng.random() < 0.3:
                term = "#" + term
            toks.insert(int(rng.integers(len(toks) + 1)), term)
        if rng.random() < 0.25:
            toks.insert(0, "@" + self.vocab[rng.integers(len(self.vocab))])
        if rng.random() < 0.3:
            toks.append("https://t.co/" + "".join(self.vocab[rng.integers(len(self.vocab))][:3]
                                                  for _ in range(2)))
        if rng.random() < 0.5:
            toks[0] = toks[0][:1].upper() + toks[0][1:]
        return " ".join(toks) + ("!" if rng.random() < 0.2 else ".")


def positives_for_ratio(n: int, ratio: float) -> int:
    """Positive count p closest to ``p / (n - p) == ratio``."""
    exact = ratio * n / (1.0 + ratio)
    cands = [c for c in (math.floor(exact), math.ceil(exact)) if 0 <= c < n]
    return min(cands, key=lambda p: (abs(p / (n - p) - ratio), p))


def generate_synthetic(n: int, ratio: float, topic_terms=CLIMATE_TERMS, noise_vocab_size=1000,
                       seed=0, id_prefix="syn", **generator_options) -> Dataset:
    """Synthetic corpus of ``n`` short texts whose balance ratio is close to ``ratio``.

    Positives carry at least one topic term with probability 0.95; 2% of
    negatives carry one too.
    """
    if n < 10:
        raise DataError("synthetic corpora need n >= 10")
    if not 0 < ratio <= 1:
        raise DataError(f"ratio must lie in (0, 1], got {ratio}")
    gen = _Generator(topic_terms, noise_vocab_size, seed, **generator_options)
    n_pos = positives_for_ratio(n, ratio)
    labels = np.zeros(n, dtype=np.int64)
    labels[gen.rng.permutation(n)[:n_pos]] = 1
    docs = [LabeledDocument(f"{id_prefix}-{i:06d}", gen.text(int(lab)), int(lab), "synthetic")
            for i, lab in enumerate(labels)]
    return Dataset(tuple(docs))


def generate_pool(n: int, topic_terms=CLIMATE_TERMS, noise_vocab_size=1000, seed=0,
                  id_prefix="pool", **generator_options) -> Dataset:
    """Positive-only augmentation pool drawn from the same generator."""
    if not topic_terms:
        raise DataError("topic_terms must not be empty")
    gen = _Generator(topic_terms, noise_vocab_size, seed, **generator_options)
    return Dataset(tuple(LabeledDocument(f"{id_prefix}-{i:06d}", gen.text(1), 1, "augmentation_pool")
                         for i in range(n)))
