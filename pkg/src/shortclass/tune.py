"""Hyperparameter search: random search and a tree-structured Parzen estimator."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, ShortclassError, TuningError


@dataclass(frozen=True)
class Real:
    low: float
    high: float
    log: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ConfigError(f"empty range [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise ConfigError("log-scale ranges must be strictly positive")

    @property
    def bounds(self):
        """Bounds in the search coordinates (log space for log-scale ranges)."""
        return (math.log(self.low), math.log(self.high)) if self.log else (self.low, self.high)

    def to_coord(self, v):
        return math.log(v) if self.log else float(v)

    def from_coord(self, u):
        lo, hi = self.bounds
        u = min(max(u, lo), hi)
        v = math.exp(u) if self.log else u
        return min(max(v, self.low), self.high)

    def contains(self, v):
        return self.low <= v <= self.high


@dataclass(frozen=True)
class Integer(Real):
    def __post_init__(self):
        if int(self.low) != self.low or int(self.high) != self.high:
            raise ConfigError("integer ranges need integer bounds")
        super().__post_init__()

    @property
    def bounds(self):
        # widen by half a step so the end points are as likely as interior values
        lo, hi = self.low - 0.5, self.high + 0.5
        if self.log:
            return math.log(max(lo, self.low * 0.5)), math.log(hi)
        return lo, hi

    def from_coord(self, u):
        lo, hi = self.bounds
        u = min(max(u, lo), hi)
        v = math.exp(u) if self.log else u
        return int(min(max(round(v), self.low), self.high))

    def contains(self, v):
        return int(v) == v and self.low <= v <= self.high


@dataclass(frozen=True)
class Categorical:
    choices: tuple

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))
        if not self.choices:
            raise ConfigError("categorical parameters need at least one choice")

    def contains(self, v):
        return v in self.choices


@dataclass(frozen=True)
class SearchSpace:
    params: dict

    @classmethod
    def from_dict(cls, d):
        """Build from ``{name: entry}`` where entry is a list of choices or a
        table ``{low, high, log, type}`` with type ``real`` or ``int``."""
        params = {}
        for name, entry in d.items():
            if isinstance(entry, (list, tuple)):
                params[name] = Categorical(tuple(entry))
            elif isinstance(entry, dict):
                kind = entry.get("type", "real")
                cls_ = {"real": Real, "int": Integer}.get(kind)
                if cls_ is None:
                    raise ConfigError(f"unknown parameter type {kind!r} for {name}")
                params[name] = cls_(entry["low"], entry["high"], bool(entry.get("log", False)))
            else:
                params[name] = Categorical((entry,))
        return cls(params)

    def contains(self, config):
        return set(config) == set(self.params) and all(p.contains(config[k]) for k, p in self.params.items())

    def sample(self, rng):
        """Uniform draw (log-uniform on log-scale ranges)."""
        out = {}
        for name, p in self.params.items():
            if isinstance(p, Categorical):
                out[name] = p.choices[int(rng.integers(len(p.choices)))]
            else:
                lo, hi = p.bounds
                out[name] = p.from_coord(rng.uniform(lo, hi))
        return out


@dataclass(frozen=True)
class Trial:
    index: int
    config: dict
    objective: float | None
    train_time_s: float = field(default=0.0, compare=False)
    info: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def failed(self):
        return self.objective is None

    def to_dict(self, timings=True):
        d = {"index": self.index, "config": self.config, "objective": self.objective,
             "info": self.info, "error": self.error}
        if timings:
            d["train_time_s"] = self.train_time_s
        return d


@dataclass(frozen=True)
class TuneResult:
    best: Trial
    history: tuple


def run_trial(index, config, objective_fn) -> Trial:
    """Evaluate one configuration; package errors and non-finite values mark the trial failed."""
    t0 = time.perf_counter()
    try:
        out = objective_fn(config)
    except (ShortclassError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return Trial(index, config, None, time.perf_counter() - t0, {}, f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0
    value, info = out if isinstance(out, tuple) else (out, {})
    value = float(value)
    if not math.isfinite(value):
        return Trial(index, config, None, elapsed, dict(info), "non-finite objective")
    return Trial(index, config, value, elapsed, dict(info))


def best_trial(history, tie_break="time") -> Trial:
    """Highest objective; ties go to the faster trial (``"time"``) or the earlier one (``"index"``)."""
    done = [t for t in history if not t.failed]
    if not done:
        raise TuningError("all trials failed: " + "; ".join(str(t.error) for t in history[:3]))
    if tie_break == "time":
        key = lambda t: (-t.objective, t.train_time_s, t.index)
    elif tie_break == "index":
        key = lambda t: (-t.objective, t.index)
    else:
        raise ConfigError(f"unknown tie_break {tie_break!r}")
    return min(done, key=key)


def random_search(space: SearchSpace, objective_fn, budget: int, seed=0, tie_break="time",
                  return_history=False):
    """Evaluate ``budget`` independent uniform draws and return the best trial."""
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    history = tuple(run_trial(i, space.sample(rng), objective_fn) for i in range(budget))
    best = best_trial(history, tie_break)
    return TuneResult(best, history) if return_history else best


def _spread(points):
    """Robust scale: the smaller of the standard deviation and IQR/1.349."""
    if len(points) < 2:
        return 0.0
    q75, q25 = np.percentile(points, [75, 25])
    return min(float(np.std(points)), float(q75 - q25) / 1.349)


def _bandwidth(points, lo, hi):
    return max(1.06 * _spread(points) * len(points) ** (-0.2), 0.01 * (hi - lo))


def _log_density(x, centers, h, lo, hi):
    """Log of an equal-weight mixture of Gaussians truncated to ``[lo, hi]``."""
    x = np.asarray(x, dtype=np.float64)[:, None]
    c = np.asarray(centers, dtype=np.float64)[None, :]
    mass = ndtr((hi - c) / h) - ndtr((lo - c) / h)
    pdf = np.exp(-0.5 * ((x - c) / h) ** 2) / (h * math.sqrt(2.0 * math.pi) * mass)
    return np.log(pdf.mean(axis=1) + 1e-300)


def _sample_mixture(rng, centers, h, lo, hi, n):
    out = np.empty(n)
    for i in range(n):
        c = centers[int(rng.integers(len(centers)))]
        for _ in range(100):
            v = rng.normal(c, h)
            if lo <= v <= hi:
                break
        out[i] = min(max(v, lo), hi)
    return out


def tpe_suggest(history, space: SearchSpace, gamma=0.25, n_candidates=24, seed=0) -> dict:
    """Next configuration proposed by a tree-structured Parzen estimator.

    Completed trials are split at the ``gamma`` quantile of the objective
    (higher is better). Each parameter gets one density from the good trials
    and one from the rest: Gaussian kernels with bandwidth
    ``1.06 * s * n**(-1/5)`` (at least 1% of the range), where ``s`` is the
    smaller of the standard deviation and IQR/1.349 of the points, for numeric
    parameters and add-one smoothed frequencies for categorical ones.
    ``n_candidates`` draws from the good densities are scored by the ratio
    good/bad and the best is returned. Without a usable split (fewer than two
    completed trials or all objectives equal) the suggestion is a uniform draw.
    """
    rng = np.random.default_rng(seed)
    done = sorted((t for t in history if not t.failed), key=lambda t: (-t.objective, t.index))
    if len(done) < 2 or done[0].objective == done[-1].objective:
        return space.sample(rng)
    n_good = min(len(done) - 1, max(1, math.ceil(gamma * len(done))))
    good, bad = done[:n_good], done[n_good:]
    cands = [dict() for _ in range(n_candidates)]
    score = np.zeros(n_candidates)
    for name, p in space.params.items():
        if isinstance(p, Categorical):
            k = len(p.choices)
            pos = {c: i for i, c in enumerate(p.choices)}
            cg = np.ones(k)
            cb = np.ones(k)
            for t in good:
                cg[pos[t.config[name]]] += 1
            for t in bad:
                cb[pos[t.config[name]]] += 1
            pg, pb = cg / cg.sum(), cb / cb.sum()
            draws = rng.choice(k, size=n_candidates, p=pg)
            score += np.log(pg[draws]) - np.log(pb[draws])
            for c, d in zip(cands, draws):
                c[name] = p.choices[int(d)]
        else:
            lo, hi = p.bounds
            xg = np.array([p.to_coord(t.config[name]) for t in good])
            xb = np.array([p.to_coord(t.config[name]) for t in bad])
            hg, hb = _bandwidth(xg, lo, hi), _bandwidth(xb, lo, hi)
            draws = _sample_mixture(rng, xg, hg, lo, hi, n_candidates)
            score += _log_density(draws, xg, hg, lo, hi) - _log_density(draws, xb, hb, lo, hi)
            for c, d in zip(cands, draws):
                c[name] = p.from_coord(float(d))
    return cands[int(np.argmax(score))]


def tune(space: SearchSpace, objective_fn, budget: int, n_startup=10, seed=0, gamma=0.25,
         n_candidates=24, tie_break="time") -> TuneResult:
    """Random start-up trials followed by TPE suggestions; maximizes the objective.

    Trial ``i`` draws from a generator seeded with ``(seed, i)``, so the
    history is a deterministic function of the seed and the objective.
    """
    if n_startup < 1 or budget <= n_startup:
        raise ConfigError(f"need 1 <= n_startup < budget, got n_startup={n_startup}, budget={budget}")
    history = []
    for i in range(budget):
        if i < n_startup:
            config = space.sample(np.random.default_rng([seed, i]))
        else:
            config = tpe_suggest(history, space, gamma, n_candidates, seed=[seed, i])
        history.append(run_trial(i, config, objective_fn))
    return TuneResult(best_trial(history, tie_break), tuple(history))
