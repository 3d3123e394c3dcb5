"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .corpus import (balance_ratio, generate_pool, generate_synthetic, load_csv, stratified_split,
                     write_csv)
from .errors import ConfigError, DataError, NumericError, ShortclassError
from .metrics import REPORT_FIELDS, TABLE_COLUMNS, compute_report
from .pipeline import METHODS, NEURAL, FittedPipeline, fit, prep_for
from .textprep import PrepConfig, clean_and_tokenize
from .tune import best_trial

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _global_options(parser, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(None), help="random seed (overrides the config)")
    parser.add_argument("--out", default=d(None), help="output directory (default: $SHORTCLASS_OUT or ./results)")
    parser.add_argument("--format", choices=("table", "json"), default=d("table"), help="standard output format")
    parser.add_argument("--workers", type=int, default=d(1), help="parallel workers (default 1)")
    parser.add_argument("--config", default=d(None), help="experiment config file (TOML)")


def build_parser():
    parser = _Parser(prog="shortclass", description="Short-text classification benchmarks.")
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="validate a CSV and report class balance")
    p.add_argument("path")
    p.add_argument("--text-column", default="text")
    p.add_argument("--label-column", default="label")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--pool", type=int, default=0, help="also write an augmentation pool of this size")
    p.add_argument("--noise-vocab", type=int, default=1000)
    p.add_argument("--name", default="synthetic.csv")

    p = sub.add_parser("train", parents=[common], help="fit and save one model")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--data", help="training CSV (default: the config's data)")
    p.add_argument("--params", default="{}", help="JSON object of hyperparameters")
    p.add_argument("--name", help="model file name (default: model-<method>.json)")

    p = sub.add_parser("evaluate", parents=[common], help="score a saved model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = sub.add_parser("tune", parents=[common], help="tune one method on the train/valid split")
    p.add_argument("--method", required=True, choices=[m for m in METHODS if m != "lexicon"])
    p.add_argument("--budget", type=int)

    sub.add_parser("bench", parents=[common], help="run the configured benchmark")
    sub.add_parser("sweep", parents=[common], help="run the balance-ratio sweep")

    p = sub.add_parser("compare", parents=[common], help="pairwise McNemar tests on a saved report.json")
    p.add_argument("--result", required=True)
    return parser


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("SHORTCLASS_OUT") or "results")


def _emit(args, payload, table):
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        print(table)


def _load_config(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("this command needs --config")
        return None
    cfg = bench.ExperimentConfig.from_toml(args.config)
    changes = {"workers": args.workers}
    if args.seed is not None:
        changes["seed"] = args.seed
    return replace(cfg, **changes)


def _report_table(report):
    width = max(len(c) for c in TABLE_COLUMNS)
    return "\n".join(f"{c:<{width}}  {getattr(report, k):.6f}" for c, k in zip(TABLE_COLUMNS, REPORT_FIELDS))


def cmd_ingest(args):
    ds = load_csv(args.path, args.text_column, args.label_column)
    ratio = balance_ratio(ds) if ds.negative_count else None
    payload = {"documents": len(ds), "positive": ds.positive_count, "negative": ds.negative_count,
               "balance_ratio": ratio, "empty_texts": sum(d.flagged_empty for d in ds)}
    table = "\n".join(f"{k:<14}{'undefined' if v is None else (f'{v:.6f}' if isinstance(v, float) else v)}"
                      for k, v in payload.items())
    _emit(args, payload, table)


def cmd_synth(args):
    seed = 0 if args.seed is None else args.seed
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate_synthetic(args.n, args.ratio, noise_vocab_size=args.noise_vocab, seed=seed)
    write_csv(ds, out / args.name)
    files = [str(out / args.name)]
    if args.pool:
        pool = generate_pool(args.pool, noise_vocab_size=args.noise_vocab, seed=seed + 1)
        write_csv(pool, out / ("pool-" + args.name))
        files.append(str(out / ("pool-" + args.name)))
    payload = {"files": files, "documents": len(ds), "positive": ds.positive_count,
               "balance_ratio": balance_ratio(ds)}
    _emit(args, payload, "\n".join(f"wrote {f}" for f in files))


def cmd_train(args):
    cfg = _load_config(args, required=False)
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    prep = cfg.prep if cfg else PrepConfig(stemming=True)
    if args.data:
        ds = load_csv(args.data)
    elif cfg is not None:
        ds, _ = bench.load_data(cfg)
    else:
        raise ConfigError("train needs --data or --config")
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params is not valid JSON: {exc}") from exc
    if cfg is not None:
        params = {**cfg.params.get(args.method, {}), **params}
    prep = prep_for(args.method, prep)
    tokens = [clean_and_tokenize(d.raw_text, prep) for d in ds]
    y = ds.labels
    valid = None
    if args.method in NEURAL:
        frac = cfg.valid_frac_of_train if cfg else 0.15
        split = stratified_split(ds, test_frac=frac, valid_frac_of_train=0.0, seed=seed)
        train_idx, valid_idx = list(split.train), list(split.test)
        valid = ([tokens[i] for i in valid_idx], y[valid_idx])
        tokens, y = [tokens[i] for i in train_idx], y[train_idx]
    pipe, elapsed, info = fit(args.method, params, tokens, y, prep, valid=valid, seed=seed,
                              net_base=cfg.net_base() if cfg else None, workers=args.workers)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.name or f"model-{args.method}.json")
    pipe.save(path)
    payload = {"model": str(path), "method": args.method, "training_time_s": elapsed, **info}
    _emit(args, payload, f"wrote {path} ({args.method}, trained in {elapsed:.3f} s)")


def cmd_evaluate(args):
    pipe = FittedPipeline.load(args.model)
    ds = load_csv(args.data)
    labels, scores = pipe.predict_texts(ds.texts)
    report = compute_report(ds.labels, labels, scores)
    _emit(args, report.to_dict(timings=False), _report_table(report))


def cmd_tune(args):
    cfg = _load_config(args)
    if args.budget is not None:
        cfg = replace(cfg, budgets={**cfg.budgets, args.method: args.budget})
    if args.method not in cfg.methods:
        cfg = replace(cfg, methods=cfg.methods + (args.method,))
    dataset, _ = bench.load_data(cfg)
    split = stratified_split(dataset, cfg.test_frac, cfg.valid_frac_of_train, cfg.seed)
    res = bench._run_method(args.method, cfg, split, bench._TokenCache(dataset))
    out = _out_dir(args) / cfg.config_hash()
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trials-{args.method}.jsonl"
    path.write_text("".join(json.dumps(bench._round(t.to_dict(timings=False)), sort_keys=True) + "\n"
                            for t in res.trials), encoding="utf-8")
    best = best_trial(res.trials, tie_break=cfg.tie_break)
    payload = {"method": args.method, "best_config": res.best_config, "valid_f1": best.objective,
               "trials": str(path)}
    _emit(args, payload, f"best validation F1 {best.objective:.6f} with {res.best_config}\nwrote {path}")


def cmd_bench(args):
    cfg = _load_config(args)
    result = bench.run_benchmark(cfg)
    out = bench.result_dir(cfg, _out_dir(args) if (args.out or os.environ.get("SHORTCLASS_OUT")) else None)
    bench.emit_report(result, out)
    payload = {"output": str(out), **result.to_dict()}
    _emit(args, payload, bench.report_md(result) + f"\nwrote {out}")
    return EXIT_OK if any(not r.failed for r in result.results) else EXIT_NUMERIC


def cmd_sweep(args):
    cfg = _load_config(args)
    points = bench.balance_sweep(cfg)
    out = bench.result_dir(cfg, _out_dir(args) if (args.out or os.environ.get("SHORTCLASS_OUT")) else None)
    bench.emit_sweep(points, out)
    rows = bench.sweep_rows(points)
    payload = {"output": str(out), "rows": [dict(zip(("target", "ratio", "method", "f1", "status"), r))
                                            for r in rows]}
    lines = [f"{'target':>8} {'method':<8} {'F1':>9}  status"]
    lines += [f"{t:8.3f} {m:<8} {'' if f is None else f'{f:9.6f}':>9}  {s}" for t, _, m, f, s in rows]
    _emit(args, payload, "\n".join(lines) + f"\nwrote {out}")


def cmd_compare(args):
    result = bench.RunResult.load(args.result)
    mc = bench.pairwise_mcnemar(result)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mcnemar.json").write_text(bench._dumps(mc), encoding="utf-8")
    m = mc["methods"]
    lines = []
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            if mc["status"][i][j] != "ok":
                lines.append(f"{m[i]:>8} vs {m[j]:<8} no discordant pairs")
            else:
                lines.append(f"{m[i]:>8} vs {m[j]:<8} mu={mc['statistic'][i][j]:9.4f} "
                             f"p={mc['p_value'][i][j]:.6f}{'  reject' if mc['reject'][i][j] else ''}")
    _emit(args, mc, "\n".join(lines))


COMMANDS = {"ingest": cmd_ingest, "synth": cmd_synth, "train": cmd_train, "evaluate": cmd_evaluate,
            "tune": cmd_tune, "bench": cmd_bench, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers < 1:
        parser.print_usage(sys.stderr)
        print("shortclass: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"shortclass: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"shortclass: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ShortclassError, OSError) as exc:
        print(f"shortclass: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
