import json

import numpy as np
import pytest

from shortclass.bench import (ExperimentConfig, MethodResult, RunResult, balance_sweep, emit_report,
                              emit_sweep, pairwise_mcnemar, report_csv, report_md, run_benchmark)
from shortclass.corpus import generate_synthetic, stratified_split
from shortclass.errors import ConfigError, DataError
from shortclass.metrics import TABLE_COLUMNS, compute_report
from shortclass.pipeline import FittedPipeline, fit
from shortclass.textprep import PrepConfig, clean_and_tokenize


def config(**kw):
    base = {"methods": ["lexicon", "nb", "logreg"], "budgets": {"nb": 2, "logreg": 2}, "seed": 3,
            "synthetic": {"n": 500, "ratio": 0.3}}
    return ExperimentConfig.from_dict({**base, **kw})


@pytest.fixture(scope="module")
def small_run():
    return run_benchmark(config())


def test_config_validation():
    with pytest.raises(ConfigError):
        config(methods=[])
    with pytest.raises(ConfigError):
        config(methods=["lexicon", "gpt"])
    with pytest.raises(ConfigError):
        config(budgets={"nb": 2})
    with pytest.raises(ConfigError):
        config(balance_points=[0.5, 0.25])
    with pytest.raises(ConfigError):
        config(balance_points=[0.0, 0.5])
    with pytest.raises(ConfigError):
        config(data={"primary": "x.csv"})
    with pytest.raises(ConfigError):
        config(colour="blue")
    assert config().config_hash() == config(output_dir="elsewhere", workers=2).config_hash()
    assert config().config_hash() != config(seed=4).config_hash()


def test_config_from_toml(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('methods = ["nb"]\nseed = 2\n[budgets]\nnb = 3\n[synthetic]\nn = 200\nratio = 0.5\n'
                    '[spaces.nb]\nalpha = {low = 0.5, high = 2.0}\n')
    cfg = ExperimentConfig.from_toml(path)
    assert cfg.budgets == {"nb": 3} and cfg.space("nb").params["alpha"].low == 0.5
    path.write_text("methods = [")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_toml(path)


def test_lexicon_only_run():
    run = run_benchmark(config(methods=["lexicon"], budgets={}))
    rep = run.result("lexicon").report
    assert rep.f1 > 0 and rep.training_time_s < 0.01


def test_shared_test_set(small_run):
    n_test = len(small_run.y_test)
    assert n_test > 0
    for r in small_run.results:
        assert not r.failed
        assert len(r.predictions) == n_test and r.test_fingerprint == small_run.test_fingerprint
    f1 = [r.report.f1 for r in small_run.results]
    assert f1 == sorted(f1, reverse=True)


def test_each_report_matches_its_predictions(small_run):
    for r in small_run.results:
        rep = compute_report(small_run.y_test, r.predictions, np.asarray(r.predictions, dtype=float))
        assert rep.accuracy == r.report.accuracy and rep.f1 == r.report.f1


def test_determinism(small_run, tmp_path):
    again = run_benchmark(config())
    a = emit_report(small_run, tmp_path / "a")
    b = emit_report(again, tmp_path / "b")
    for pa, pb in zip(a, b):
        if pa.name not in ("timings.json", "report.md"):
            assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_json_round_trip(small_run, tmp_path):
    emit_report(small_run, tmp_path)
    loaded = RunResult.load(tmp_path / "report.json")
    assert loaded.to_dict() == json.loads((tmp_path / "report.json").read_text())
    assert loaded.f1() == pytest.approx(small_run.f1(), abs=1e-6)
    assert [r.predictions for r in loaded.results] == [r.predictions for r in small_run.results]
    assert {p.name for p in tmp_path.iterdir()} >= {"report.json", "report.csv", "report.md", "mcnemar.json",
                                                    "trials.jsonl"}
    trials = [json.loads(line) for line in (tmp_path / "trials.jsonl").read_text().splitlines()]
    assert len(trials) == 4 and {t["method"] for t in trials} == {"nb", "logreg"}


def test_csv_and_md_layout(small_run):
    rows = report_csv(small_run).splitlines()
    assert tuple(rows[0].split(",")[1:]) == TABLE_COLUMNS
    assert all(len(c.split(".")[1]) == 6 for c in rows[1].split(",")[1:])
    md = report_md(small_run).splitlines()
    names = [line.split("|")[1].strip() for line in md[2:]]
    assert names == [r.method for r in small_run.results]
    f1 = [float(line.split("|")[5]) for line in md[2:]]
    assert f1 == sorted(f1, reverse=True)


def test_emit_report_unwritable(small_run, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(DataError):
        emit_report(small_run, blocker / "sub")


def fake_run(preds, y):
    y = tuple(y)
    results = tuple(MethodResult(f"m{i}", compute_report(y, p, np.asarray(p, dtype=float)), tuple(p), {}, (), "fp")
                    for i, p in enumerate(preds))
    return RunResult(results, y, 0, "h", "d", "fp", 1.0)


def test_pairwise_mcnemar_cases():
    y = [1] * 40
    a = [1] * 20 + [0] * 15 + [1] * 5
    b = [1] * 20 + [1] * 15 + [0] * 5
    out = pairwise_mcnemar(fake_run([a, b, a], y))
    assert out["status"][0][0] == "no_discordants" and out["statistic"][0][0] is None
    assert out["statistic"][0][1] == 5.0 and out["statistic"][1][0] == 5.0
    assert out["p_value"][0][1] == pytest.approx(0.02535, abs=1e-4) and out["reject"][0][1]
    assert out["status"][0][2] == "no_discordants"  # identical predictions
    with pytest.raises(DataError):
        pairwise_mcnemar(fake_run([a], y))


def test_pairwise_mcnemar_identical_but_wrong():
    out = pairwise_mcnemar(fake_run([[1, 0, 1], [1, 0, 1]], [1, 1, 0]))
    assert out["status"][0][1] == "no_discordants"


def test_run_result_rejects_foreign_test_set():
    y = (1, 0, 1)
    good = MethodResult("a", compute_report(y, y, np.asarray(y, float)), y, {}, (), "fp")
    bad = MethodResult("b", compute_report(y, y, np.asarray(y, float)), y, {}, (), "other")
    with pytest.raises(DataError):
        RunResult((good, bad), y, 0, "h", "d", "fp", 1.0)


def test_failed_method_does_not_abort():
    cfg = config(methods=["nb", "rf"], budgets={"nb": 1, "rf": 1}, params={"rf": {"n_trees": -3}})
    run = run_benchmark(cfg)
    assert run.result("rf").failed and run.result("rf").error
    assert not run.result("nb").failed
    assert run.results[-1].method == "rf"


def test_objective_never_sees_test_documents(monkeypatch):
    import shortclass.bench as bench_mod

    cfg = config(methods=["nb"], budgets={"nb": 3})
    split = stratified_split(generate_synthetic(400, 0.3, seed=3), 0.15, 0.15, 3)
    test_docs = {split.dataset.documents[i].raw_text for i in split.test}
    tokenized_test = {tuple(clean_and_tokenize(t, cfg.prep)) for t in test_docs}
    seen = []
    real_fit = bench_mod.fit

    def spy(method, params, train_tokens, y_train, prep, valid=None, **kw):
        seen.append((train_tokens, valid, kw.get("early_stopping", True)))
        return real_fit(method, params, train_tokens, y_train, prep, valid=valid, **kw)

    monkeypatch.setattr(bench_mod, "fit", spy)
    run_benchmark(cfg, split)
    tuning_calls = [s for s in seen if s[1] is not None]
    assert len(tuning_calls) == 3
    for train_tokens, valid, _ in tuning_calls:
        for toks in list(train_tokens) + list(valid[0]):
            assert tuple(toks) not in tokenized_test or toks == []
    final = [s for s in seen if s[1] is None]
    assert len(final) == 1 and len(final[0][0]) == len(split.train) + len(split.valid)


def test_training_slower_than_execution():
    cfg = config(methods=["nb", "logreg", "svm", "rf"], budgets={m: 1 for m in ("nb", "logreg", "svm", "rf")},
                 synthetic={"n": 1200, "ratio": 0.5})
    run = run_benchmark(cfg)
    for r in run.results:
        assert r.report.execution_time_s < r.report.training_time_s, r.method


def test_sweep_shape_and_unreachable(tmp_path):
    cfg = config(methods=["lexicon", "nb"], budgets={"nb": 1}, balance_points=[0.1, 0.3, 0.6, 1.0],
                 synthetic={"n": 400, "ratio": 0.3, "pool_size": 120})
    points = balance_sweep(cfg)
    status = {p.target: p.status for p in points}
    assert status[0.3] == "ok" and status[0.6] == "ok"
    assert status[0.1] == "unreachable" and status[1.0] == "unreachable"
    assert abs(points[2].ratio - 0.6) < 0.03
    emit_sweep(points, tmp_path)
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "target_ratio,ratio,method,F1 score,status"
    assert len(rows) == 1 + 2 * 2 + 2
    assert (tmp_path / "ratio-0.600000" / "report.json").exists()


def test_sweep_rows_per_method():
    cfg = config(methods=["lexicon", "nb"], budgets={"nb": 1}, balance_points=[0.09, 0.5, 1.0],
                 synthetic={"n": 400, "ratio": 0.09, "pool_size": 400})
    points = balance_sweep(cfg)
    assert [p.status for p in points] == ["ok"] * 3
    for p in points:
        assert sorted(r.method for r in p.run.results) == ["lexicon", "nb"]
        assert abs(p.ratio - p.target) < 0.03


@pytest.mark.parametrize("method", ["lexicon", "logreg", "svm", "nb", "knn", "rf", "fcnn"])
def test_pipeline_save_load(method, tmp_path):
    ds = generate_synthetic(300, 0.5, seed=1)
    prep = PrepConfig(stemming=method != "lexicon")
    toks = [clean_and_tokenize(d.raw_text, prep) for d in ds]
    params = {"epochs": 2, "max_len": 12} if method == "fcnn" else {}
    pipe, _, _ = fit(method, params, toks, ds.labels, prep, seed=2, early_stopping=False)
    pipe.save(tmp_path / "m.json")
    back = FittedPipeline.load(tmp_path / "m.json")
    texts = [d.raw_text for d in ds][:50]
    la, sa = pipe.predict_texts(texts)
    lb, sb = back.predict_texts(texts)
    assert np.array_equal(la, lb) and np.allclose(sa, sb, rtol=0, atol=1e-12)


def test_pipeline_load_errors(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    with pytest.raises(DataError):
        FittedPipeline.load(p)
    p.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(DataError):
        FittedPipeline.load(p)
    p.write_text(json.dumps({"format": "shortclass-model", "version": 1, "pipeline": "nb"}))
    with pytest.raises(DataError):
        FittedPipeline.load(p)


def test_shipped_example_config_is_valid():
    from pathlib import Path

    cfg = ExperimentConfig.from_toml(Path(__file__).parents[1] / "configs" / "example.toml")
    assert len(cfg.methods) == 9 and cfg.params["rf"]["n_trees"] == 100
    assert "n_trees" not in cfg.space("rf").params and cfg.space("logreg").params["l2_strength"].log
