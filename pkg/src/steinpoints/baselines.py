"""Comparison methods: sequential minimum energy design (MED) and Stein
variational gradient descent (SVGD)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .algorithms import RunTrace, _Recorder, first_point, rng_for
from .kernels import KernelParams, kernel_terms
from .optimize import OptimizerConfig, Searcher, SearchSpace, make_grid, make_searcher
from .stein import SequenceBuilder, SteinKernel
from .targets import TargetDensity

LOG_MAX_FLOAT = math.log(np.finfo(float).max)


class MedInstabilityError(FloatingPointError):
    """An MED energy term is not representable in double precision."""


class SvgdError(FloatingPointError):
    pass


# -- minimum energy design ----------------------------------------------------

@dataclass
class MedConfig:
    """``delta`` defaults to the 4 * d rule of thumb when left unset.

    ``kernel`` is used only to report a KSD trace; those score evaluations
    are made on a cloned target and are not charged to the run.
    """

    space: SearchSpace
    n_points: int = 100
    delta: Optional[float] = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    kernel: KernelParams = field(default_factory=KernelParams)
    seed: int = 0

    def __post_init__(self):
        if self.delta is not None and not self.delta >= 1:
            raise ValueError(f"MED delta must be >= 1, got {self.delta}")
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")

    def resolved_delta(self, dim: int) -> float:
        return float(4 * dim if self.delta is None else self.delta)


def _check_logp(lp):
    lp = np.atleast_1d(np.asarray(lp, dtype=float))
    if not np.all(np.isfinite(lp)):
        raise MedInstabilityError("MED needs finite log-density values at every point")
    return lp


def _check_terms(logt):
    big = np.isfinite(logt) & (logt > LOG_MAX_FLOAT)
    if np.any(big):
        raise MedInstabilityError(
            f"MED energy term exp({logt[big].max():.1f}) overflows double precision")


def med_energy(points, target: TargetDensity, delta: float) -> float:
    """sum_{i != j} [p(x_i)^(-1/2d) p(x_j)^(-1/2d) / |x_i - x_j|]^delta.

    Coincident points give +inf.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    d = X.shape[1]
    lp = _check_logp(target.log_q(X))
    r = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    off = ~np.eye(len(X), dtype=bool)
    with np.errstate(divide="ignore"):
        logt = delta * (-(lp[:, None] + lp[None, :]) / (2 * d) - np.log(r))
    logt = logt[off]
    if np.any(np.isinf(logt) & (logt > 0)):
        return math.inf
    _check_terms(logt)
    total = logsumexp(logt)
    if total > LOG_MAX_FLOAT:
        raise MedInstabilityError(f"MED energy exp({total:.1f}) overflows double precision")
    return float(np.exp(total))


class MedObjective:
    """Log of p(x)^(-delta/2d) * sum_i p(x_i)^(-delta/2d) / |x_i - x|^delta."""

    def __init__(self, target, points, logp, delta):
        self.target = target
        self.points = points
        self.logp = logp
        self.delta = delta
        self.scale = delta / (2 * target.dim)

    def __call__(self, X):
        X = np.atleast_2d(X)
        out = np.full(X.shape[0], np.inf)
        ok = self.target.in_domain(X)
        if not np.any(ok):
            return out
        Xo = X[ok]
        lq = np.asarray(self.target.log_q(Xo), dtype=float)
        r = np.linalg.norm(Xo[:, None, :] - self.points[None, :, :], axis=-1)
        with np.errstate(divide="ignore"):
            logt = -self.scale * (lq[:, None] + self.logp[None, :]) - self.delta * np.log(r)
        logt = np.where(np.isnan(logt), np.inf, logt)
        _check_terms(logt)
        vals = logsumexp(logt, axis=1)
        vals = np.where(np.isfinite(lq), vals, np.inf)
        out[ok] = vals
        return out


def med_greedy(target: TargetDensity, config: MedConfig, n: Optional[int] = None,
               searcher: Optional[Searcher] = None):
    """Greedy MED sequence; x_1 is the mode. Returns (points, RunTrace).

    The objective is minimised in log space. Only log q is evaluated, one
    call per candidate; stored points reuse their cached values.
    """
    n = config.n_points if n is None else n
    delta = config.resolved_delta(target.dim)
    searcher = make_searcher(config.optimizer, config.space) if searcher is None else searcher
    trace = RunTrace()
    rec = _Recorder(target, trace)
    monitor = SequenceBuilder(SteinKernel(config.kernel, target.clone()))

    # log q at a selected point was already paid for during the search, so the
    # cached value is recomputed on an uncounted clone
    shadow = target.clone()
    x = first_point(target, searcher, rng_for(config.seed, 0))
    points = x[None, :]
    logp = _check_logp(shadow.log_q(points))
    monitor.append(x)
    rec.record(1, monitor.ksd())
    for t in range(2, n + 1):
        objective = MedObjective(target, points, logp, delta)
        x = searcher.minimize(objective, t, points, rng_for(config.seed, 1, t))
        points = np.vstack([points, x])
        logp = np.append(logp, _check_logp(shadow.log_q(x)))
        monitor.append(x)
        rec.record(t, monitor.ksd())
    trace.points = points
    return points, trace


# -- Stein variational gradient descent ---------------------------------------

@dataclass
class SvgdConfig:
    space: SearchSpace
    n_particles: int = 100
    kernel: KernelParams = field(default_factory=KernelParams)
    master_step: float = 0.1
    momentum: float = 0.9
    n_iterations: int = 500
    fudge: float = 1e-8

    def __post_init__(self):
        if not self.master_step > 0:
            raise ValueError("master_step must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.n_particles < 1 or self.n_iterations < 0:
            raise ValueError("need n_particles >= 1 and n_iterations >= 0")


def grid_init(space: SearchSpace, n: int) -> np.ndarray:
    """First n nodes of the smallest m^d lattice over the box with m^d >= n."""
    if n == 1:
        return ((space.lower + space.upper) / 2)[None, :]
    m = 2
    while m**space.dim < n:
        m += 1
    return make_grid(space, m)[:n]


def svgd_direction(kernel: KernelParams, X, S, J=None):
    """phi(x_i) = mean_l [k(x_l, x_i) s(x_l) + grad_{x_l} k(x_l, x_i)]."""
    jl = None if J is None else J[:, None]
    ji = None if J is None else J[None, :]
    k, gx, _, _ = kernel_terms(kernel, X[:, None], X[None, :], S[:, None], S[None, :], jl, ji)
    terms = k[:, :, None] * S[:, None, :] + gx
    # Exactly rounded sums do not depend on particle order, so mirrored
    # particles get exactly mirrored updates. AdaGrad would otherwise blow
    # roundoff in a near-zero direction up to a full-size step.
    n, m, d = terms.shape
    flat = terms.reshape(n, m * d).T
    return np.array([math.fsum(col) for col in flat]).reshape(m, d) / n


def svgd_run(target: TargetDensity, config: SvgdConfig, seed: int = 0,
             init: Optional[np.ndarray] = None):
    """Run SVGD from a lattice (or ``init``) with the AdaGrad-momentum step.

    Row m of the trace is the KSD of the particles after m updates. Each row
    costs one score evaluation per particle. ``seed`` is accepted for a
    uniform method signature; the updates are deterministic.
    """
    X = grid_init(config.space, config.n_particles) if init is None else \
        np.array(init, dtype=float).reshape(-1, target.dim)
    state = SteinKernel(config.kernel, target)
    trace = RunTrace()
    rec = _Recorder(target, trace)
    hist = None
    for it in range(config.n_iterations + 1):
        S, J = state.scores(X)
        bad = ~np.all(np.isfinite(S), axis=1)
        if np.any(bad):
            raise SvgdError(f"non-finite score before SVGD update at iteration {it + 1}, "
                            f"particle {int(np.argmax(bad))}")
        rec.record(it, np.sqrt(max(state.gram(X, S, J).sum(), 0.0)) / len(X))
        if it == config.n_iterations:
            break
        with np.errstate(invalid="ignore", over="ignore"):
            phi = svgd_direction(config.kernel, X, S, J)
            if hist is None:
                hist = phi**2
            else:
                hist = config.momentum * hist + (1 - config.momentum) * phi**2
            X = X + config.master_step * phi / (config.fudge + np.sqrt(hist))
        bad = ~np.all(np.isfinite(X), axis=1)
        if np.any(bad):
            raise SvgdError(f"non-finite SVGD update at iteration {it + 1}, "
                            f"particle {int(np.argmax(bad))}")
    trace.points = X
    return X, trace
