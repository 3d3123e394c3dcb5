"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Fits a random forest and a linear SVM on one synthetic bag-of-words matrix
with each backend, checks that both give identical models and prints the
best-of-``repeat`` wall-clock times.
"""
import argparse
import time

import numpy as np

from shortclass import _backend
from shortclass.classic import classify, train_linear_svm, train_random_forest
from shortclass.corpus import generate_synthetic
from shortclass.textprep import PrepConfig, clean_and_tokenize
from shortclass.vectorize import build_vocab, featurize


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="documents")
    ap.add_argument("--features", type=int, default=2000)
    ap.add_argument("--trees", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    ds = generate_synthetic(args.n, 0.5, seed=0)
    tokens = [clean_and_tokenize(d.raw_text, PrepConfig(stemming=True)) for d in ds]
    X = featurize(tokens, build_vocab(tokens, args.features), "counts")
    y = ds.labels
    print(f"{X.n_rows} documents x {X.n_cols} features, {X.values.nnz} non-zeros")

    tasks = {
        f"random forest ({args.trees} trees)": lambda: train_random_forest(X, y, n_trees=args.trees, seed=1),
        f"linear SVM ({args.epochs} epochs)": lambda: train_linear_svm(X, y, C=1.0, epochs=args.epochs, seed=1),
    }
    backends = _backend.available()
    if "compiled" not in backends:
        print("compiled kernels not built; timing the pure-Python backend only")
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for label, task in tasks.items():
        times, outputs = [], []
        for b in backends:
            with _backend.use(b):
                t, model = best_time(task, args.repeat)
            times.append(t)
            outputs.append(classify(model, X)[1])
        same = all(np.array_equal(outputs[0], o) for o in outputs[1:])
        row = f"{label:<28}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:>12.1f}x" + ("" if same else "  (outputs differ!)")
        print(row)


if __name__ == "__main__":
    main()
