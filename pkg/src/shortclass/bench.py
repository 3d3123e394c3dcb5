"""Experiment orchestration: tuned benchmarks, balance sweeps, pairwise tests and reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (DataSplit, balance_ratio, generate_pool, generate_synthetic, load_csv,
                     rebalance, stratified_split)
from .errors import ConfigError, DataError, NoDiscordantsError, ShortclassError
from .metrics import (REPORT_FIELDS, TABLE_COLUMNS, ConfusionMatrix, EvaluationReport,
                      compute_report, contingency_table, mcnemar_test)
from .neural import NetConfig
from .pipeline import METHODS, NEURAL, default_space, fit, prep_for
from .textprep import PrepConfig, clean_and_tokenize
from .tune import SearchSpace, random_search, tune

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SUPERVISED = tuple(m for m in METHODS if m != "lexicon")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a benchmark run.

    Exactly one of ``data`` (CSV paths) and ``synthetic`` (generator
    settings) must be given. ``budgets`` is required for every tuned method.
    """

    methods: tuple
    budgets: dict
    seed: int = 0
    data: dict | None = None
    synthetic: dict | None = None
    test_frac: float = 0.15
    valid_frac_of_train: float = 0.15
    balance_points: tuple = ()
    n_startup: int = 10
    tie_break: str = "index"
    prep: PrepConfig = PrepConfig(stemming=True)
    params: dict = field(default_factory=dict)
    spaces: dict = field(default_factory=dict)
    net: dict = field(default_factory=dict)
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "balance_points", tuple(float(r) for r in self.balance_points))
        if not self.methods:
            raise ConfigError("method list is empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("method list has duplicates")
        for m in self.methods:
            if m == "lexicon":
                continue
            b = self.budgets.get(m)
            if not isinstance(b, int) or b < 1:
                raise ConfigError(f"budgets.{m} must be a positive integer (no default is assumed)")
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of [data] and [synthetic]")
        if self.data is not None and "primary" not in self.data:
            raise ConfigError("[data] needs a 'primary' path")
        pts = self.balance_points
        if any(not 0 < r <= 1 for r in pts) or list(pts) != sorted(pts):
            raise ConfigError("balance_points must be ascending ratios in (0, 1]")
        if not (0 < self.test_frac < 1 and 0 < self.valid_frac_of_train < 1):
            raise ConfigError("split fractions must lie in (0, 1)")
        if self.n_startup < 1:
            raise ConfigError("n_startup must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        NetConfig().replace(**self.net)
        for m, space in self.spaces.items():
            SearchSpace.from_dict(space)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "methods" not in d:
            raise ConfigError("config needs a 'methods' list")
        if "budgets" not in d:
            raise ConfigError("config needs a [budgets] table")
        if "prep" in d and not isinstance(d["prep"], PrepConfig):
            try:
                d["prep"] = PrepConfig.from_dict({"stemming": True, **d["prep"]})
            except (TypeError, ValueError, OSError) as exc:
                raise ConfigError(f"bad [prep] section: {exc}") from exc
        return cls(**d)

    @classmethod
    def from_toml(cls, path):
        try:
            with open(path, "rb") as fh:
                d = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["methods"] = list(self.methods)
        d["balance_points"] = list(self.balance_points)
        d["prep"] = self.prep.to_dict()
        return d

    def config_hash(self) -> str:
        """Digest of every setting that can change results (not output_dir or workers)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True, default=str).encode()).hexdigest()[:12]

    def space(self, method) -> SearchSpace:
        """Default space, overridden per parameter by [spaces.<method>], minus fixed [params.<method>]."""
        params = dict(default_space(method).params)
        if self.spaces.get(method):
            params.update(SearchSpace.from_dict(self.spaces[method]).params)
        for k in self.params.get(method, {}):
            params.pop(k, None)
        return SearchSpace(params)

    def net_base(self) -> NetConfig:
        return NetConfig().replace(**self.net)


def load_data(config: ExperimentConfig):
    """The primary dataset and the augmentation pool (``None`` when absent)."""
    if config.synthetic is not None:
        s = {"n": 4000, "ratio": 0.09, "pool_size": 0, "noise_vocab_size": 1000, **config.synthetic}
        seed = int(s.pop("seed", config.seed))
        n, ratio, pool_size = int(s.pop("n")), float(s.pop("ratio")), int(s.pop("pool_size"))
        dataset = generate_synthetic(n, ratio, seed=seed, **s)
        pool = generate_pool(pool_size, seed=seed + 1, **s) if pool_size > 0 else None
        return dataset, pool
    cols = {k: config.data[k] for k in ("text_column", "label_column") if k in config.data}
    dataset = load_csv(config.data["primary"], **cols)
    pool = None
    if config.data.get("pool"):
        pool = load_csv(config.data["pool"], source="augmentation_pool", **cols)
    return dataset, pool


@dataclass(frozen=True)
class MethodResult:
    method: str
    report: EvaluationReport | None
    predictions: tuple
    best_config: dict
    trials: tuple = ()
    test_fingerprint: str = ""
    error: str | None = None

    @property
    def failed(self):
        return self.report is None

    def to_dict(self):
        return {"method": self.method, "failed": self.failed, "error": self.error,
                "metrics": None if self.report is None else self.report.to_dict(timings=False),
                "best_config": self.best_config, "test_fingerprint": self.test_fingerprint,
                "predictions": list(self.predictions),
                "trials": [t if isinstance(t, dict) else t.to_dict(timings=False) for t in self.trials]}

    @classmethod
    def from_dict(cls, d):
        report = None
        if d["metrics"] is not None:
            m = d["metrics"]
            report = EvaluationReport(*(m[k] for k in REPORT_FIELDS), ConfusionMatrix(**m["confusion"]),
                                      tuple(m["degenerate"]))
        return cls(d["method"], report, tuple(d["predictions"]), d["best_config"],
                   tuple(d.get("trials", ())), d["test_fingerprint"], d["error"])


@dataclass(frozen=True)
class RunResult:
    results: tuple
    y_test: tuple
    seed: int
    config_hash: str
    dataset_fingerprint: str
    test_fingerprint: str
    ratio: float

    def __post_init__(self):
        for r in self.results:
            if not r.failed and (len(r.predictions) != len(self.y_test)
                                 or r.test_fingerprint != self.test_fingerprint):
                raise DataError(f"{r.method} was not evaluated on the shared test set")

    def result(self, method) -> MethodResult:
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)

    def f1(self):
        return {r.method: (math.nan if r.failed else r.report.f1) for r in self.results}

    def to_dict(self):
        return {"seed": self.seed, "config_hash": self.config_hash,
                "dataset_fingerprint": self.dataset_fingerprint, "test_fingerprint": self.test_fingerprint,
                "balance_ratio": self.ratio, "test_size": len(self.y_test), "y_test": list(self.y_test),
                "results": [r.to_dict() for r in self.results]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(MethodResult.from_dict(r) for r in d["results"]), tuple(d["y_test"]), d["seed"],
                   d["config_hash"], d["dataset_fingerprint"], d["test_fingerprint"], d["balance_ratio"])

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"cannot read run result {path}: {exc}") from exc


def _sort_key(r: MethodResult):
    return (r.failed, -(r.report.f1 if r.report else 0.0), r.method)


class _TokenCache:
    def __init__(self, dataset):
        self.dataset = dataset
        self.cache = {}

    def get(self, prep, indices):
        if prep not in self.cache:
            self.cache[prep] = [clean_and_tokenize(d.raw_text, prep) for d in self.dataset]
        toks = self.cache[prep]
        return [toks[i] for i in indices]


def _f1(y, labels):
    return compute_report(y, labels, labels.astype(float)).f1


def _run_method(method, config: ExperimentConfig, split: DataSplit, tokens: _TokenCache):
    prep = prep_for(method, config.prep)
    y = {s: split.labels(s) for s in ("train", "valid", "test")}
    tok = {s: tokens.get(prep, split.indices(s)) for s in ("train", "valid")}
    fixed = dict(config.params.get(method, {}))
    net_base = config.net_base()
    trials = ()
    best_cfg = dict(fixed)
    if method != "lexicon":
        # the objective sees train and valid only
        def objective(cfg):
            pipe, _, info = fit(method, {**fixed, **cfg}, tok["train"], y["train"], prep,
                                valid=(tok["valid"], y["valid"]), seed=config.seed, net_base=net_base,
                                workers=config.workers)
            labels, _ = pipe.predict_tokens(tok["valid"])
            return _f1(y["valid"], labels), info

        budget = config.budgets[method]
        space = config.space(method)
        if budget == 1:
            res = random_search(space, objective, 1, seed=config.seed, tie_break=config.tie_break,
                                return_history=True)
        else:
            res = tune(space, objective, budget, min(config.n_startup, budget - 1), seed=config.seed,
                       tie_break=config.tie_break)
        trials = res.history
        best_cfg = {**fixed, **res.best.config}
        if method in NEURAL:
            best_cfg["epochs"] = int(res.best.info["best_epoch"])
    final_idx = split.train + split.valid
    pipe, train_time, _ = fit(method, best_cfg, tokens.get(prep, final_idx),
                              np.concatenate([y["train"], y["valid"]]), prep, seed=config.seed,
                              net_base=net_base, workers=config.workers, early_stopping=False)
    X_test = pipe.features(tokens.get(prep, split.test))
    t0 = time.perf_counter()
    labels, scores = pipe.predict_features(X_test)
    exec_time = time.perf_counter() - t0
    report = compute_report(y["test"], labels, scores, train_time, exec_time)
    return MethodResult(method, report, tuple(int(v) for v in labels), best_cfg, trials,
                        split.dataset.fingerprint(split.test))


def run_benchmark(config: ExperimentConfig, split: DataSplit | None = None) -> RunResult:
    """Tune every method on train/valid, refit on train+valid and score once on test.

    A method that fails is reported as a failed row; the others still run.
    Results are sorted by test F1 (descending), then by method name.
    """
    if split is None:
        dataset, _ = load_data(config)
        split = stratified_split(dataset, config.test_frac, config.valid_frac_of_train, config.seed)
    tokens = _TokenCache(split.dataset)
    test_fp = split.dataset.fingerprint(split.test)
    results = []
    for method in config.methods:
        try:
            results.append(_run_method(method, config, split, tokens))
        except (ShortclassError, ArithmeticError, ValueError) as exc:
            results.append(MethodResult(method, None, (), {}, (), test_fp, f"{type(exc).__name__}: {exc}"))
    results.sort(key=_sort_key)
    return RunResult(tuple(results), tuple(int(v) for v in split.labels("test")), config.seed,
                     config.config_hash(), split.dataset.fingerprint(), test_fp,
                     balance_ratio(split.dataset.labels[list(split.train + split.valid + split.test)]))


@dataclass(frozen=True)
class SweepPoint:
    target: float
    ratio: float | None
    status: str
    run: RunResult | None = None
    error: str | None = None


def balance_sweep(config: ExperimentConfig) -> tuple:
    """Run the benchmark at every ratio in ``config.balance_points``.

    The raw corpus is split once; each point adds pool positives to every
    split (:func:`rebalance`) so train, valid and test share the target
    ratio. A target within 0.01 of the raw ratio uses the raw split. Points
    the pool cannot reach, or that lie below the raw ratio, are marked
    ``unreachable``.
    """
    if not config.balance_points:
        raise ConfigError("balance_points is empty")
    dataset, pool = load_data(config)
    base = stratified_split(dataset, config.test_frac, config.valid_frac_of_train, config.seed)
    raw = balance_ratio(dataset)
    points = []
    for target in config.balance_points:
        try:
            if abs(target - raw) <= 0.01:
                split = base
            else:
                if pool is None:
                    raise DataError("no augmentation pool configured")
                split = rebalance(base, pool, target, seed=config.seed)
            run = run_benchmark(config, split)
            points.append(SweepPoint(target, run.ratio, "ok", run))
        except DataError as exc:
            points.append(SweepPoint(target, None, "unreachable", None, str(exc)))
    return tuple(points)


def sweep_rows(points):
    """(target, achieved ratio, method, F1, status) rows in method order."""
    rows = []
    for p in points:
        if p.run is None:
            rows.append((p.target, None, "", None, p.status))
            continue
        for r in sorted(p.run.results, key=lambda r: METHODS.index(r.method)):
            rows.append((p.target, p.ratio, r.method, None if r.failed else r.report.f1,
                         "failed" if r.failed else "ok"))
    return rows


def pairwise_mcnemar(result: RunResult) -> dict:
    """McNemar statistics for every pair of methods with test predictions.

    Returns symmetric matrices (lists of lists) ``statistic``, ``p_value``
    and ``reject`` plus ``status``; pairs without discordant predictions,
    including each method with itself, carry ``"no_discordants"`` and null
    values.
    """
    methods = [r for r in result.results if not r.failed]
    if len(methods) < 2:
        raise DataError("pairwise comparison needs at least two methods with test predictions")
    for r in methods:
        if len(r.predictions) != len(result.y_test):
            raise DataError(f"missing test predictions for {r.method}")
    k = len(methods)
    stat = [[None] * k for _ in range(k)]
    pval = [[None] * k for _ in range(k)]
    reject = [[None] * k for _ in range(k)]
    status = [["no_discordants"] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            table = contingency_table(result.y_test, methods[i].predictions, methods[j].predictions)
            try:
                mu, p, rej = mcnemar_test(table)
            except NoDiscordantsError:
                continue
            for a, b in ((i, j), (j, i)):
                stat[a][b], pval[a][b], reject[a][b], status[a][b] = mu, p, rej, "ok"
    return {"methods": [r.method for r in methods], "statistic": stat, "p_value": pval,
            "reject": reject, "status": status}


def _round(obj, nd=6):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else round(obj, nd)
    if isinstance(obj, dict):
        return {k: _round(v, nd) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, nd) for v in obj]
    return obj


def _dumps(obj):
    return json.dumps(_round(obj), indent=2, sort_keys=True, default=str) + "\n"


def table_rows(result: RunResult):
    rows = []
    for r in result.results:
        if r.failed:
            rows.append([r.method] + ["failed"] * len(TABLE_COLUMNS))
        else:
            rows.append([r.method] + [f"{getattr(r.report, k):.6f}" for k in REPORT_FIELDS])
    return rows


def report_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("Method",) + TABLE_COLUMNS)
    w.writerows(table_rows(result))
    return buf.getvalue()


def report_md(result: RunResult) -> str:
    head = ("Method",) + TABLE_COLUMNS + ("Training time [s]", "Execution time [s]")
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join(["---"] + [":---:"] * (len(head) - 1)) + "|"]
    for r, row in zip(result.results, table_rows(result)):
        times = (["-", "-"] if r.failed else
                 [f"{r.report.training_time_s:.6f}", f"{r.report.execution_time_s:.6f}"])
        lines.append("| " + " | ".join(row + times) + " |")
    return "\n".join(lines) + "\n"


def timings(result: RunResult) -> dict:
    return {r.method: {"training_time_s": r.report.training_time_s,
                       "execution_time_s": r.report.execution_time_s,
                       "trial_times_s": [t.train_time_s for t in r.trials if hasattr(t, "train_time_s")]}
            for r in result.results if not r.failed}


def result_dir(config: ExperimentConfig, out=None) -> Path:
    return Path(out if out is not None else config.output_dir) / config.config_hash()


def emit_report(result: RunResult, out_dir, formats=("json", "csv", "md")) -> list:
    """Write the run's tables, McNemar matrices, trial history and timings.

    ``report.json`` holds no wall-clock values, so identical runs produce
    identical bytes; timings go to ``timings.json`` and ``report.md``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    files = {}
    if "json" in formats:
        files["report.json"] = _dumps(result.to_dict())
    if "csv" in formats:
        files["report.csv"] = report_csv(result)
    if "md" in formats:
        files["report.md"] = report_md(result)
    try:
        files["mcnemar.json"] = _dumps(pairwise_mcnemar(result))
    except DataError:
        pass
    files["trials.jsonl"] = "".join(
        json.dumps(_round({"method": r.method, **(t if isinstance(t, dict) else t.to_dict(timings=False))}),
                   sort_keys=True, default=str) + "\n"
        for r in result.results for t in r.trials)
    files["timings.json"] = _dumps(timings(result))
    written = []
    for name, text in files.items():
        path = out / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    return written


def emit_sweep(points, out_dir) -> list:
    """``sweep.csv`` (one row per ratio and method) and one report set per reachable point."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("target_ratio", "ratio", "method", "F1 score", "status"))
    for target, ratio, method, f1, status in sweep_rows(points):
        w.writerow((f"{target:.6f}", "" if ratio is None else f"{ratio:.6f}", method,
                    "" if f1 is None else f"{f1:.6f}", status))
    path = out / "sweep.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    written = [path]
    for p in points:
        if p.run is not None:
            written += emit_report(p.run, out / f"ratio-{p.target:.6f}")
    return written
