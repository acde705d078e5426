"""Stein Point sequences: greedy and herding selection, block coordinate
descent under a point budget, and compression of a fixed reference set.

At iteration n both algorithms pick x_n by a global search over the box:

    greedy   argmin_x  k0(x, x) / 2 + sum_{i<n} k0(x_i, x)
    herding  argmin_x                 sum_{i<n} k0(x_i, x)

and x_1 is the maximiser of log q. Each candidate costs one score
evaluation; scores of accepted points are cached in the builder, so stored
points are never re-evaluated.
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .kernels import KernelParams
from .optimize import (FiniteSetSearch, OptimizerConfig, SearchError, Searcher,
                       SearchSpace, make_searcher)
from .stein import SequenceBuilder, SteinKernel
from .targets import TargetDensity

KINDS = ("greedy", "herding")

# stream tags keep per-stage RNG seeds disjoint
_FIRST, _STEP, _SWEEP = 0, 1, 2


class TruncationError(SearchError):
    """Every candidate violated k0(x, x) <= R_j^2."""


def rng_for(seed: int, stage: int, a: int = 0, b: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), stage, int(a), int(b)])


def truncation_radius(j: int, c2: float) -> float:
    """R_j = sqrt(2 log j / c2), with log 2 standing in for log 1 at j = 1."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if not c2 > 0:
        raise ValueError("c2 must be positive")
    return math.sqrt(2.0 * math.log(max(j, 2)) / c2)


@dataclass
class RunConfig:
    space: SearchSpace
    n_points: int = 100
    kernel: KernelParams = field(default_factory=KernelParams)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    c2: Optional[float] = None
    delta: float = 0.0  # recorded only; heuristic searches give no certificate
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.c2 is not None and not self.c2 > 0:
            raise ValueError("c2 must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass
class TraceRow:
    iter: int
    n_logp: int
    n_grad: int
    ksd: float
    wall_ms: float

    @property
    def n_eval(self) -> int:
        return self.n_logp + self.n_grad


TRACE_COLUMNS = ("iter", "n_logp", "n_grad", "ksd", "wall_ms")


@dataclass
class RunTrace:
    rows: List[TraceRow] = field(default_factory=list)
    points: Optional[np.ndarray] = None
    switchover: Optional[int] = None
    partial: bool = False
    n_clamped: int = 0

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name == "n_eval":
            return np.array([r.n_eval for r in self.rows])
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def final_ksd(self) -> float:
        return self.rows[-1].ksd

    @property
    def n_eval(self) -> int:
        return self.rows[-1].n_eval if self.rows else 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for r in self.rows:
                w.writerow([r.iter, r.n_logp, r.n_grad, repr(float(r.ksd)),
                            f"{r.wall_ms:.3f}"])


class _Recorder:
    """Appends trace rows with evaluation counts relative to the run start."""

    def __init__(self, target: TargetDensity, trace: RunTrace):
        self.target = target
        self.trace = trace
        self.start = target.counts()
        self.t0 = time.perf_counter()

    def spent(self) -> int:
        return (self.target.counts() - self.start).n_eval

    def record(self, it: int, ksd: float) -> None:
        c = self.target.counts() - self.start
        self.trace.rows.append(TraceRow(it, c.n_logp, c.n_grad, float(ksd),
                                        1000.0 * (time.perf_counter() - self.t0)))


class SteinObjective:
    """Batched greedy/herding objective over candidates.

    Keeps the scores of the best candidate seen so the winner can be stored
    without another (charged) score evaluation.
    """

    def __init__(self, builder: SequenceBuilder, kind: str = "greedy",
                 radius: Optional[float] = None, exclude: Optional[int] = None):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.builder = builder
        self.kind = kind
        self.radius = radius
        self.exclude = exclude
        self._best = (np.inf, None, None, None)

    def __call__(self, X):
        X = np.atleast_2d(X)
        state = self.builder.state
        S, J = state.scores(X)
        diag, cross = self.builder.candidate_terms(X, S, J, self.exclude)
        vals = cross + 0.5 * diag if self.kind == "greedy" else cross
        if self.radius is not None:
            vals = np.where(diag > self.radius**2, np.inf, vals)
        vals = np.where(np.isnan(vals), np.inf, vals)
        i = int(np.argmin(vals))
        if vals[i] < self._best[0]:
            self._best = (vals[i], X[i].copy(), S[i], None if J is None else J[i])
        return vals

    def cached_scores(self, x):
        _, bx, bs, bj = self._best
        if bx is not None and np.array_equal(bx, x):
            return bs, bj
        return None, None


def first_point(target: TargetDensity, searcher: Searcher, rng=None) -> np.ndarray:
    """Maximiser of log q found by the given search."""
    rng = np.random.default_rng(0) if rng is None else rng

    def neg_log_q(X):
        X = np.atleast_2d(X)
        out = np.full(X.shape[0], np.inf)
        ok = target.in_domain(X)
        if np.any(ok):
            out[ok] = -np.asarray(target.log_q(X[ok]), dtype=float)
        return np.where(np.isnan(out), np.inf, out)

    return searcher.minimize(neg_log_q, 1, np.empty((0, target.dim)), rng)


def _select(builder, searcher, kind, t, rng, radius):
    if builder.n < 1:
        raise ValueError("builder needs at least one point")
    objective = SteinObjective(builder, kind, radius)
    try:
        x = searcher.minimize(objective, t, builder.points, rng)
    except SearchError as err:
        if radius is not None:
            raise TruncationError(
                f"all candidates exceed k0(x,x) <= R^2 = {radius**2:.4g} at iteration {t}; "
                "c2 is too large for this kernel/target") from err
        raise
    S, J = objective.cached_scores(x)
    builder.append(x, S, J)
    return x


def greedy_step(builder: SequenceBuilder, searcher: Searcher, t: Optional[int] = None,
                rng=None, radius: Optional[float] = None) -> np.ndarray:
    """Append argmin_x k0(x,x)/2 + sum_i k0(x_i, x); returns the new point."""
    t = builder.n + 1 if t is None else t
    rng = np.random.default_rng(0) if rng is None else rng
    return _select(builder, searcher, "greedy", t, rng, radius)


def herding_step(builder: SequenceBuilder, searcher: Searcher, t: Optional[int] = None,
                 rng=None, radius: Optional[float] = None) -> np.ndarray:
    """Append argmin_x sum_i k0(x_i, x); returns the new point."""
    t = builder.n + 1 if t is None else t
    rng = np.random.default_rng(0) if rng is None else rng
    return _select(builder, searcher, "herding", t, rng, radius)


def _check_kind(kind, config):
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind == "herding" and config.c2 is None:
        warnings.warn("herding without truncation (c2 unset) has no convergence guarantee",
                      stacklevel=3)


def _grow(kind, config, target, searcher, builder, rec, budget=None):
    """Add points until n_points (or the budget runs out). Returns True if complete."""
    step = greedy_step if kind == "greedy" else herding_step
    if builder.n == 0:
        x1 = first_point(target, searcher, rng_for(config.seed, _FIRST))
        builder.append(x1)
        rec.record(1, builder.ksd())
    while builder.n < config.n_points:
        if budget is not None and rec.spent() >= budget:
            return False
        t = builder.n + 1
        radius = None if config.c2 is None else truncation_radius(t, config.c2)
        step(builder, searcher, t, rng_for(config.seed, _STEP, t), radius)
        rec.record(t, builder.ksd())
    return not (budget is not None and builder.n < config.n_points)


def run_sequence(kind: str, config: RunConfig, target: TargetDensity,
                 searcher: Optional[Searcher] = None):
    """Build ``config.n_points`` Stein Points. Returns (points, RunTrace)."""
    _check_kind(kind, config)
    searcher = make_searcher(config.optimizer, config.space) if searcher is None else searcher
    builder = SequenceBuilder(SteinKernel(config.kernel, target))
    trace = RunTrace()
    rec = _Recorder(target, trace)
    _grow(kind, config, target, searcher, builder, rec)
    trace.points = builder.points.copy()
    trace.n_clamped = builder.n_clamped
    return trace.points, trace


def bcd_sweep(builder: SequenceBuilder, searcher: Searcher, seed: int = 0, sweep: int = 0,
              t: Optional[int] = None, on_update=None) -> int:
    """One pass i = 1..n of coordinate replacements minimising the KSD.

    Point i is replaced by the search result only when that lowers the KSD
    objective below the incumbent's and the running double sum does not
    increase, so the KSD never goes up. Returns the number of replacements.
    """
    n = builder.n
    if n < 1:
        raise ValueError("need at least one point")
    t = n if t is None else t
    replaced = 0
    for i in range(n):
        objective = SteinObjective(builder, "greedy", exclude=i)
        x = searcher.minimize(objective, t, builder.points, rng_for(seed, _SWEEP, sweep, i))
        incumbent = 0.5 * builder.diag[i] + (builder.row_sums[i] - builder.diag[i])
        S, J = objective.cached_scores(x)
        if S is not None and objective._best[0] < incumbent:
            snap = builder.snapshot()
            before = builder.total_sum
            builder.replace(i, x, S, J)
            if builder.total_sum > before:
                builder.restore(snap)
            else:
                replaced += 1
        if on_update is not None:
            on_update(i)
    return replaced


def run_budgeted(kind: str, config: RunConfig, target: TargetDensity, eval_budget: int,
                 searcher: Optional[Searcher] = None):
    """Stein Greedy-n / Herding-n: build n points, then sweep until n_eval >= budget.

    If the budget is spent before n points exist the partial sequence is
    returned with ``trace.partial`` set.
    """
    if not eval_budget > 0:
        raise ValueError("eval_budget must be positive")
    _check_kind(kind, config)
    searcher = make_searcher(config.optimizer, config.space) if searcher is None else searcher
    builder = SequenceBuilder(SteinKernel(config.kernel, target))
    trace = RunTrace()
    rec = _Recorder(target, trace)
    complete = _grow(kind, config, target, searcher, builder, rec, eval_budget)
    if not complete:
        trace.partial = True
    else:
        trace.switchover = len(trace.rows)
        it = builder.n
        sweep = 0
        while rec.spent() < eval_budget:
            def on_update(i):
                nonlocal it
                it += 1
                rec.record(it, builder.ksd())
            bcd_sweep(builder, searcher, config.seed, sweep, t=builder.n, on_update=on_update)
            sweep += 1
    trace.points = builder.points.copy()
    trace.n_clamped = builder.n_clamped
    return trace.points, trace


def fixed_set_compress(reference, state: SteinKernel, kind: str = "greedy", n: int = 100):
    """Run greedy/herding with exhaustive search over a fixed set Y.

    Returns (indices, weights, trace): the n selected row indices (with
    repeats), the induced weights count_i / n over Y, and the KSD trace.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    Y = np.asarray(reference, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(Y) == 0:
        raise ValueError("reference set is empty")
    target = state.target
    trace = RunTrace()
    rec = _Recorder(target, trace)
    logq = np.atleast_1d(target.log_q(Y))
    S, J = state.scores(Y)
    K = state.gram(Y, S, J)
    diag = np.diag(K).copy()
    counts = np.zeros(len(Y))
    indices = np.empty(n, dtype=int)
    for t in range(n):
        if t == 0:
            idx = int(np.argmax(logq))
        else:
            vals = counts @ K + (0.5 * diag if kind == "greedy" else 0.0)
            idx = int(np.argmin(vals))
        indices[t] = idx
        counts[idx] += 1
        rec.record(t + 1, math.sqrt(max(counts @ K @ counts, 0.0)) / (t + 1))
    trace.points = Y[indices]
    return indices, counts / n, trace


__all__ = [
    "RunConfig", "RunTrace", "TraceRow", "TRACE_COLUMNS", "SteinObjective",
    "TruncationError", "truncation_radius", "first_point", "greedy_step",
    "herding_step", "run_sequence", "bcd_sweep", "run_budgeted",
    "fixed_set_compress", "FiniteSetSearch", "rng_for",
]
