"""Derivative-free global searches over an axis-aligned box.

Objectives are *batched*: ``objective(X)`` takes an ``(m, d)`` array and
returns ``m`` values, with ``+inf`` marking infeasible candidates. Three
searches are provided, each returning a single point inside the box:

* ``mc_search``: exact argmin over ``n_test`` proposal draws.
* ``nm_search``: best of ``n_init`` bound-clamped Nelder-Mead runs started
  from proposal draws.
* ``gs_search``: exhaustive argmin over a regular grid with
  ``n0 + round(sqrt(t))`` nodes per axis.

Proposal draws come from a truncated N(mu0, Sigma0) for the first
``n_delay`` iterations and thereafter from a truncated equal-weight mixture
of N(x_j, lam * I) centred on all but the most recent existing point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

Objective = Callable[[np.ndarray], np.ndarray]

MAX_REJECTION_ATTEMPTS = 10_000
MAX_GRID_SIZE = 10_000_000
GRID_CHUNK = 8192


class SearchError(RuntimeError):
    """A search could not produce a feasible point."""


@dataclass
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d arrays of equal length")
        if not np.all(np.isfinite(self.lower)) or not np.all(np.isfinite(self.upper)):
            raise ValueError("box bounds must be finite")
        if not np.all(self.lower < self.upper):
            raise ValueError(f"box needs lower < upper componentwise, got {self.lower}, {self.upper}")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.width))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=-1)

    def clip(self, X):
        return np.clip(X, self.lower, self.upper)


@dataclass
class ProposalConfig:
    """Proposal settings shared by the Monte Carlo and Nelder-Mead searches.

    ``mu0`` defaults to the box centre and ``sigma0`` to a diagonal covariance
    with standard deviation half the box width per axis.
    """

    n_init: int = 3
    n_test: int = 20
    n_delay: int = 20
    mu0: Optional[np.ndarray] = None
    sigma0: Optional[np.ndarray] = None
    lam: float = 1.0

    def __post_init__(self):
        if self.n_init < 1 or self.n_test < 1 or self.n_delay < 0:
            raise ValueError("n_init and n_test must be >= 1, n_delay >= 0")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.sigma0 is not None:
            s = np.atleast_2d(np.asarray(self.sigma0, dtype=float))
            if s.shape[0] != s.shape[1]:
                s = np.diag(s.ravel())
            if not np.allclose(s, s.T):
                raise ValueError("sigma0 must be symmetric")
            try:
                np.linalg.cholesky(s)
            except np.linalg.LinAlgError as err:
                raise ValueError("sigma0 must be positive definite") from err
            self.sigma0 = s
        if self.mu0 is not None:
            self.mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))

    def resolved(self, space: SearchSpace) -> "ProposalConfig":
        mu0 = (space.lower + space.upper) / 2 if self.mu0 is None else self.mu0
        sigma0 = np.diag((space.width / 2) ** 2) if self.sigma0 is None else self.sigma0
        if mu0.shape != (space.dim,) or sigma0.shape != (space.dim, space.dim):
            raise ValueError("mu0/sigma0 do not match the box dimension")
        return ProposalConfig(self.n_init, self.n_test, self.n_delay, mu0, sigma0, self.lam)


def propose(config: ProposalConfig, t: int, current_points, space: SearchSpace,
            rng: np.random.Generator, size: Optional[int] = None):
    """Draw from the truncated initial Gaussian (t <= n_delay) or the truncated
    adaptive mixture (t > n_delay). Returns ``(d,)`` if ``size`` is None."""
    cfg = config.resolved(space)
    m = 1 if size is None else int(size)
    d = space.dim
    if t > cfg.n_delay:
        centres = np.atleast_2d(np.asarray(current_points, dtype=float))
        if centres.shape[0] < 2:
            raise ValueError("adaptive proposal needs at least two existing points")
        centres = centres[:-1]

        def draw(k):
            idx = rng.integers(centres.shape[0], size=k)
            return centres[idx] + math.sqrt(cfg.lam) * rng.standard_normal((k, d))
    else:
        chol = np.linalg.cholesky(cfg.sigma0)

        def draw(k):
            return cfg.mu0 + rng.standard_normal((k, d)) @ chol.T

    out = np.empty((m, d))
    filled = 0
    attempts = 0
    budget = MAX_REJECTION_ATTEMPTS * m
    while filled < m:
        need = m - filled
        X = draw(need)
        attempts += need
        ok = X[space.contains(X)]
        out[filled:filled + len(ok)] = ok
        filled += len(ok)
        if filled < m and attempts >= budget:
            raise SearchError(
                f"truncated proposal accepted {filled}/{m} draws after {attempts} attempts; "
                "the proposal and the box barely overlap")
    return out[0] if size is None else out


def _argmin_first(values) -> int:
    values = np.asarray(values, dtype=float)
    if not np.any(np.isfinite(values)):
        raise SearchError("objective is non-finite at every candidate")
    return int(np.argmin(np.where(np.isnan(values), np.inf, values)))


def mc_search(objective: Objective, t: int, config: ProposalConfig, current_points,
              space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    X = propose(config, t, current_points, space, rng, size=config.n_test)
    return X[_argmin_first(objective(X))].copy()


def _initial_simplex(x0, space: SearchSpace):
    d = space.dim
    h = 0.1 * space.width
    sim = np.tile(x0, (d + 1, 1))
    for j in range(d):
        step = h[j] if x0[j] + h[j] <= space.upper[j] else -h[j]
        sim[j + 1, j] += step
    return sim


def nelder_mead(objective: Objective, x0, space: SearchSpace, maxiter: int = 200):
    """One bound-clamped Nelder-Mead run; returns (x, f(x)).

    Vertices proposed outside the box are projected back onto it. Stops when
    the simplex is within 1e-6 of the box diagonal or after ``maxiter``
    iterations.
    """
    def f(x):
        v = float(objective(x[None, :])[0])
        return v if not np.isnan(v) else np.inf

    bounds = list(zip(space.lower, space.upper))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(f, x0, method="Nelder-Mead", bounds=bounds,
                       options={"maxiter": maxiter, "xatol": 1e-6 * space.diagonal,
                                "fatol": np.inf,
                                "initial_simplex": _initial_simplex(x0, space),
                                "adaptive": False})
    return space.clip(res.x), float(res.fun)


def nm_search(objective: Objective, t: int, config: ProposalConfig, current_points,
              space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    starts = propose(config, t, current_points, space, rng, size=config.n_init)
    results = [nelder_mead(objective, x0, space) for x0 in starts]
    best = _argmin_first([fx for _, fx in results])
    return results[best][0]


def grid_size(t: int, n0: int) -> int:
    # Round(.) in the half-up sense
    return int(n0 + math.floor(math.sqrt(t) + 0.5))


def make_grid(space: SearchSpace, n_grid: int) -> np.ndarray:
    """All nodes of the regular grid, in lexicographic index order."""
    if n_grid < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    if n_grid**space.dim > MAX_GRID_SIZE:
        raise SearchError(
            f"grid of {n_grid}^{space.dim} nodes exceeds the {MAX_GRID_SIZE} node limit")
    axes = [np.linspace(lo, hi, n_grid) for lo, hi in zip(space.lower, space.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _scan(objective: Objective, X) -> np.ndarray:
    return np.concatenate([np.asarray(objective(X[i:i + GRID_CHUNK]), dtype=float)
                           for i in range(0, len(X), GRID_CHUNK)])


def gs_search(objective: Objective, t: int, space: SearchSpace, n0: int) -> np.ndarray:
    if n0 < 2:
        raise ValueError("n0 must be at least 2")
    X = make_grid(space, grid_size(t, n0))
    return X[_argmin_first(_scan(objective, X))].copy()


# -- searcher objects used by the sequence builders ---------------------------

class Searcher:
    """Common interface: ``minimize(objective, t, current_points, rng)``."""

    space: SearchSpace

    def minimize(self, objective: Objective, t: int, current_points,
                 rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass
class MonteCarloSearch(Searcher):
    space: SearchSpace
    config: ProposalConfig = field(default_factory=ProposalConfig)

    def minimize(self, objective, t, current_points, rng):
        return mc_search(objective, t, self.config, current_points, self.space, rng)


@dataclass
class NelderMeadSearch(Searcher):
    space: SearchSpace
    config: ProposalConfig = field(default_factory=ProposalConfig)

    def minimize(self, objective, t, current_points, rng):
        return nm_search(objective, t, self.config, current_points, self.space, rng)


@dataclass
class GridSearch(Searcher):
    """Grid search; with ``fixed=True`` the grid keeps ``n0`` nodes per axis."""

    space: SearchSpace
    n0: int = 100
    fixed: bool = False

    def minimize(self, objective, t, current_points, rng):
        if self.fixed:
            X = make_grid(self.space, self.n0)
            return X[_argmin_first(_scan(objective, X))].copy()
        return gs_search(objective, t, self.space, self.n0)


class FiniteSetSearch(Searcher):
    """Exhaustive argmin over an explicit candidate set (first minimiser wins)."""

    def __init__(self, candidates):
        X = np.asarray(candidates, dtype=float)
        self.candidates = X.reshape(len(X), -1)
        if len(self.candidates) == 0:
            raise ValueError("candidate set is empty")
        self.space = SearchSpace(self.candidates.min(0) - 1.0, self.candidates.max(0) + 1.0)

    def minimize(self, objective, t, current_points, rng):
        X = self.candidates
        return X[_argmin_first(_scan(objective, X))].copy()


@dataclass
class OptimizerConfig:
    """Which search to embed, with its settings."""

    kind: str = "mc"
    proposal: ProposalConfig = field(default_factory=ProposalConfig)
    n0: int = 100
    fixed_grid: bool = False

    def __post_init__(self):
        if self.kind not in ("mc", "nm", "gs"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}; use mc, nm or gs")


def make_searcher(config: OptimizerConfig, space: SearchSpace) -> Searcher:
    if config.kind == "mc":
        return MonteCarloSearch(space, config.proposal)
    if config.kind == "nm":
        return NelderMeadSearch(space, config.proposal)
    return GridSearch(space, config.n0, config.fixed_grid)
