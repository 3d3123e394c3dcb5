import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shortclass.corpus import (Dataset, LabeledDocument, balance_ratio, generate_pool, generate_synthetic,
                               load_csv, rebalance, stratified_split, write_csv)
from shortclass.errors import DataError, PoolExhaustedError


def make_dataset(n_pos, n_neg, prefix="d"):
    docs = [LabeledDocument(f"{prefix}{i}", f"text {i}", 1 if i < n_pos else 0) for i in range(n_pos + n_neg)]
    return Dataset(tuple(docs))


def test_load_csv_counts(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("id,text,label\n1,hello world,1\n2,foo,0\n3,bar,0\n", encoding="utf-8")
    ds = load_csv(p)
    assert (ds.positive_count, ds.negative_count) == (1, 2)


def test_load_csv_bad_label_names_row(tmp_path):
    p = tmp_path / "a.csv"
    rows = ["id,text,label"] + [f"{i},t{i},0" for i in range(1, 5)] + ["5,t5,2"]
    p.write_text("\n".join(rows) + "\n", encoding="utf-8")
    with pytest.raises(DataError, match="row 5"):
        load_csv(p)


def test_load_csv_quoted_text_roundtrip(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text('id,text,label\n1,"a, b\nand ""c""",1\n2,plain,0\n', encoding="utf-8")
    ds = load_csv(p)
    assert ds[0].raw_text == 'a, b\nand "c"'
    out = tmp_path / "b.csv"
    write_csv(ds, out)
    assert load_csv(out).texts == ds.texts


@pytest.mark.parametrize("body,err", [
    (None, "no such file"),
    ("id,words,label\n1,a,1\n", "column"),
    ("id,text,label\n1,a,1\n1,b,0\n", "duplicate"),
])
def test_load_csv_errors(tmp_path, body, err):
    p = tmp_path / "a.csv"
    if body is not None:
        p.write_text(body, encoding="utf-8")
    with pytest.raises(DataError, match=err):
        load_csv(p)


def test_load_csv_empty_text_is_flagged(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text('id,text,label\n1,"",1\n2,x,0\n', encoding="utf-8")
    ds = load_csv(p)
    assert ds[0].flagged_empty and ds[0].raw_text == ""


def test_load_csv_second_label(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("id,text,label,label2\n1,a,1,1\n2,b,0,1\n", encoding="utf-8")
    assert [d.label2 for d in load_csv(p)] == [1, 1]


def test_split_example_100():
    ds = make_dataset(50, 50)
    s = stratified_split(ds, seed=7)
    assert len(s.test) == 15
    assert s.counts("test")[0] in (7, 8)
    assert s == stratified_split(ds, seed=7)


def test_split_example_large_corpus():
    n_pos = round(5750 * 0.09)
    s = stratified_split(make_dataset(n_pos, 5750 - n_pos), seed=0)
    assert abs(len(s.test) - 862) <= 1
    assert abs(s.counts("test")[0] - 78) <= 1


def test_split_needs_three_per_class():
    with pytest.raises(DataError):
        stratified_split(make_dataset(2, 50))


@settings(max_examples=60, deadline=None)
@given(n_pos=st.integers(3, 100), n_neg=st.integers(3, 100), seed=st.integers(0, 2**31))
def test_split_properties(n_pos, n_neg, seed):
    ds = make_dataset(n_pos, n_neg)
    s = stratified_split(ds, 0.15, 0.15, seed)
    sets = [set(s.train), set(s.valid), set(s.test)]
    assert sum(map(len, sets)) == len(ds) == len(set().union(*sets))
    for name in ("train", "valid", "test"):
        pos, neg = s.counts(name)
        size = pos + neg
        assert abs(pos - size * n_pos / len(ds)) <= 1 + 1e-9
        assert abs(neg - size * n_neg / len(ds)) <= 1 + 1e-9


def test_split_stratification_exhaustive():
    for n in range(10, 201):
        for n_pos in range(3, n - 2, max(1, n // 25)):
            ds = make_dataset(n_pos, n - n_pos)
            s = stratified_split(ds, 0.15, 0.15, n)
            assert len(s.test) == int(0.15 * n + 0.5)
            assert sorted(s.train + s.valid + s.test) == list(range(n))
            for name in ("train", "valid", "test"):
                pos, neg = s.counts(name)
                assert abs(pos - (pos + neg) * n_pos / n) <= 1 + 1e-9, (n, n_pos, name)


@pytest.mark.parametrize("pos,neg,ratio", [(9, 100, 0.09), (40, 40, 1.0), (0, 10, 0.0)])
def test_balance_ratio(pos, neg, ratio):
    assert balance_ratio(make_dataset(pos, neg)) == pytest.approx(ratio)


def test_balance_ratio_needs_negatives():
    with pytest.raises(DataError):
        balance_ratio(make_dataset(5, 0))


def _split_ratio(split, name):
    pos, neg = split.counts(name)
    return pos / neg


def test_rebalance_to_one():
    ds = generate_synthetic(1200, 0.09, seed=3)
    pool = generate_pool(2000, seed=4)
    s = stratified_split(ds, seed=0)
    r = rebalance(s, pool, 1.0, seed=0)
    for name in ("train", "valid", "test"):
        assert 0.99 <= _split_ratio(r, name) <= 1.01
        assert set(s.indices(name)) <= set(r.indices(name))
    n0 = len(ds)
    added = [i for name in ("train", "valid", "test") for i in r.indices(name) if i >= n0]
    assert len(added) == len(set(added)) == len(r.dataset) - n0
    assert all(r.dataset[i] == ds[i] for i in range(n0))
    assert r == rebalance(s, pool, 1.0, seed=0)


def test_rebalance_noop():
    ds = generate_synthetic(1000, 0.25, seed=1)
    s = stratified_split(ds, seed=0)
    target = balance_ratio(ds)
    r = rebalance(s, generate_pool(10, seed=2), target, seed=0)
    assert r.train == s.train and r.valid == s.valid and r.test == s.test
    assert len(r.dataset) == len(ds)


def test_rebalance_half_adds_forty():
    ds = make_dataset(10, 100)
    pool = Dataset(tuple(LabeledDocument(f"p{i}", "pool", 1, "augmentation_pool") for i in range(200)))
    s = stratified_split(ds, seed=0)
    r = rebalance(s, pool, 0.5, seed=0)
    assert abs((len(r.dataset) - len(ds)) - 40) <= 1
    for name in ("train", "valid", "test"):
        pos, neg = r.counts(name)
        assert abs(pos - 0.5 * neg) <= 1


def test_rebalance_errors():
    ds = make_dataset(10, 100)
    s = stratified_split(ds, seed=0)
    small = Dataset(tuple(LabeledDocument(f"p{i}", "x", 1, "augmentation_pool") for i in range(5)))
    with pytest.raises(PoolExhaustedError):
        rebalance(s, small, 1.0)
    neg = Dataset((LabeledDocument("p0", "x", 0, "augmentation_pool"),))
    with pytest.raises(DataError):
        rebalance(s, neg, 0.2)


def test_synthetic_counts_and_determinism(tmp_path):
    ds = generate_synthetic(1000, 0.09, seed=5)
    assert 82 <= ds.positive_count <= 84
    assert abs(balance_ratio(ds) - 0.09) <= 0.02
    even = generate_synthetic(200, 1.0, seed=5)
    assert (even.positive_count, even.negative_count) == (100, 100)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(ds, a)
    write_csv(generate_synthetic(1000, 0.09, seed=5), b)
    assert a.read_bytes() == b.read_bytes()


def test_synthetic_planted_terms():
    from shortclass.corpus import CLIMATE_TERMS
    from shortclass.textprep import clean_and_tokenize
    ds = generate_synthetic(4000, 1.0, seed=0)
    has = np.array([bool(set(clean_and_tokenize(d.raw_text)) & set(CLIMATE_TERMS)) for d in ds])
    y = ds.labels
    assert has[y == 1].mean() == pytest.approx(0.95, abs=0.02)
    assert has[y == 0].mean() == pytest.approx(0.02, abs=0.01)


def test_synthetic_errors():
    with pytest.raises(DataError):
        generate_synthetic(5, 0.5)
    with pytest.raises(DataError):
        generate_synthetic(100, 0.0)
    with pytest.raises(DataError):
        generate_synthetic(100, 0.5, topic_terms=())


def test_document_invariants():
    with pytest.raises(DataError):
        LabeledDocument("a", "x", 2)
    with pytest.raises(DataError):
        LabeledDocument("a", "", 1)
    with pytest.raises(DataError):
        Dataset((LabeledDocument("a", "x", 1), LabeledDocument("a", "y", 0)))
