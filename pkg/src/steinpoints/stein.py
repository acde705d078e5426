"""Langevin Stein kernel k0 and kernel Stein discrepancy (KSD).

For a base kernel k and target score s = grad log p,

    k0(x, x') = div_x div_x' k + grad_x k . s(x') + grad_x' k . s(x)
                + k * s(x) . s(x')

and the KSD of a point set is sqrt(mean_ij k0(x_i, x_j)). Nothing here needs
the normalising constant of p.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .kernels import KernelParams, kernel_terms
from .targets import TargetDensity

__all__ = [
    "SteinKernel",
    "SequenceBuilder",
    "k0_eval",
    "ksd",
    "ksd_weighted",
    "stein_identity_check",
]


class SteinKernel:
    """A base kernel composed with a target's Langevin Stein operator."""

    def __init__(self, kernel: KernelParams, target: TargetDensity):
        self.kernel = kernel
        self.target = target

    @property
    def needs_jacobian(self) -> bool:
        return self.kernel.needs_scores

    def scores(self, X):
        """Scores (and score Jacobians for IMQScore) at a batch; charged to the target."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S = self.target.grad_log_q(X)
        J = self.target.score_jacobian(X) if self.needs_jacobian else None
        return S, J

    def _assemble(self, k, gx, gxp, div, sx, sxp):
        # the two coupling terms swap under x <-> x'; summing them first keeps
        # k0 exactly symmetric in floating point
        coupling = np.sum(gx * sxp, axis=-1) + np.sum(gxp * sx, axis=-1)
        return div + coupling + k * np.sum(sx * sxp, axis=-1)

    def from_scores(self, X, SX, JX, Y, SY, JY):
        """k0 between broadcastable point arrays with precomputed scores."""
        k, gx, gxp, div = kernel_terms(self.kernel, X, Y, SX, SY, JX, JY)
        return self._assemble(k, gx, gxp, div, SX, SY)

    def cross(self, X, SX, JX, Y, SY, JY):
        """Matrix k0(X[a], Y[b]) of shape (len(X), len(Y))."""
        jx = None if JX is None else JX[:, None]
        jy = None if JY is None else JY[None, :]
        return self.from_scores(X[:, None], SX[:, None], jx, Y[None, :], SY[None, :], jy)

    def diag(self, X, SX, JX):
        """k0(x, x) for each row of X."""
        return self.from_scores(X, SX, JX, X, SX, JX)

    def gram(self, X, S=None, J=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if S is None:
            S, J = self.scores(X)
        return self.cross(X, S, J, X, S, J)


def k0_eval(state: SteinKernel, x, xp) -> float:
    """k0(x, x') with scores evaluated live."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    Y = np.atleast_2d(np.asarray(xp, dtype=float))
    if X.shape[-1] != state.target.dim or Y.shape[-1] != state.target.dim:
        raise ValueError("points must match the target dimension")
    S, J = state.scores(np.vstack([X, Y]))
    JX = None if J is None else J[:1]
    JY = None if J is None else J[1:]
    return float(state.from_scores(X, S[:1], JX, Y, S[1:], JY)[0])


def _sqrt_clamped(v):
    return np.sqrt(max(v, 0.0))


def ksd(points, state: SteinKernel) -> float:
    """Full double-sum KSD of an unweighted point set."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("KSD of an empty point set is undefined")
    n = X.shape[0]
    return _sqrt_clamped(state.gram(X).sum() / n**2)


def ksd_weighted(points, weights, state: SteinKernel) -> float:
    """sqrt(sum_ij w_i w_j k0(y_i, y_j)) for simplex weights."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != X.shape[0]:
        raise ValueError("need one weight per point")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return _sqrt_clamped(w @ state.gram(X) @ w)


def stein_identity_check(state: SteinKernel, x, n_mc: int = 100_000, seed: int = 0):
    """Monte Carlo estimate of E_{Z~P} k0(Z, x) and its standard error.

    The expectation is zero for a Stein kernel, so a value many standard
    errors away from zero flags a broken k0.
    """
    target = state.target
    if not target.has_sampler:
        raise NotImplementedError(f"{type(target).__name__} has no exact sampler")
    rng = np.random.default_rng(seed)
    Z = target.sample(int(n_mc), rng)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    SZ, JZ = state.scores(Z)
    SX, JX = state.scores(X)
    vals = state.from_scores(Z, SZ, JZ, X, SX, JX)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals)))


class SequenceBuilder:
    """A growing point set with running k0 row sums.

    ``row_sums[i] = sum_j k0(x_j, x_i)`` over the current points and
    ``total_sum`` is the full double sum, so appending or replacing a point
    costs O(n) k0 evaluations and the KSD is ``sqrt(total_sum) / n``.
    Scores of stored points are cached by index and never re-evaluated.
    """

    def __init__(self, state: SteinKernel):
        self.state = state
        d = state.target.dim
        self.points = np.empty((0, d))
        self.scores = np.empty((0, d))
        self.jacobians = np.empty((0, d, d)) if state.needs_jacobian else None
        self.row_sums = np.empty(0)
        self.diag = np.empty(0)
        self.total_sum = 0.0
        self.n_clamped = 0

    def __len__(self):
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    def _point_scores(self, x, score, jac):
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if not np.all(np.isfinite(x)):
            raise ValueError("points must be finite")
        if score is None:
            S, J = self.state.scores(x)
        else:
            S = np.asarray(score, dtype=float).reshape(1, -1)
            J = None if jac is None else np.asarray(jac, dtype=float).reshape(1, x.shape[1], -1)
            if self.state.needs_jacobian and J is None:
                J = self.state.target.score_jacobian(x)
        return x, S, J

    def _jac(self, idx=None):
        if self.jacobians is None:
            return None
        return self.jacobians if idx is None else self.jacobians[idx]

    def k0_row(self, x, S, J, exclude: Optional[int] = None):
        """k0(x_j, x) against every stored point (entry ``exclude`` zeroed)."""
        if self.n == 0:
            return np.empty((x.shape[0], 0))
        row = self.state.cross(x, S, J, self.points, self.scores, self._jac())
        if exclude is not None:
            row[:, exclude] = 0.0
        return row

    def candidate_terms(self, X, SX, JX, exclude: Optional[int] = None):
        """(k0(x, x), sum_i k0(x_i, x)) for a candidate batch, skipping ``exclude``."""
        diag = self.state.diag(X, SX, JX)
        cross = self.k0_row(X, SX, JX, exclude).sum(axis=1)
        return diag, cross

    def append(self, x, score=None, jac=None) -> "SequenceBuilder":
        x, S, J = self._point_scores(x, score, jac)
        r = self.k0_row(x, S, J)[0]
        kxx = self.state.diag(x, S, J)[0]
        self.row_sums = np.append(self.row_sums + r, r.sum() + kxx)
        self.total_sum += 2.0 * r.sum() + kxx
        self.points = np.vstack([self.points, x])
        self.scores = np.vstack([self.scores, S])
        if self.jacobians is not None:
            self.jacobians = np.concatenate([self.jacobians, J])
        self.diag = np.append(self.diag, kxx)
        return self

    def replace(self, index: int, x, score=None, jac=None) -> "SequenceBuilder":
        if not -self.n <= index < self.n:
            raise IndexError(f"index {index} out of range for {self.n} points")
        index %= self.n
        x, S, J = self._point_scores(x, score, jac)
        old = self.k0_row(self.points[index:index + 1], self.scores[index:index + 1],
                          None if J is None else self.jacobians[index:index + 1],
                          exclude=index)[0]
        new = self.k0_row(x, S, J, exclude=index)[0]
        kxx = self.state.diag(x, S, J)[0]
        self.total_sum += 2.0 * (new.sum() - old.sum()) + kxx - self.diag[index]
        self.row_sums = self.row_sums - old + new
        self.row_sums[index] = new.sum() + kxx
        self.points[index] = x[0]
        self.scores[index] = S[0]
        if self.jacobians is not None:
            self.jacobians[index] = J[0]
        self.diag[index] = kxx
        return self

    def ksd_squared(self) -> float:
        if self.n == 0:
            raise ValueError("KSD of an empty point set is undefined")
        return self.total_sum / self.n**2

    def ksd(self) -> float:
        v = self.ksd_squared()
        if v < 0:
            self.n_clamped += 1
            return 0.0
        return float(np.sqrt(v))

    def full_total(self) -> float:
        """Double sum recomputed from scratch using the cached scores."""
        return float(self.state.gram(self.points, self.scores, self._jac()).sum())

    def snapshot(self):
        return (self.points.copy(), self.scores.copy(),
                None if self.jacobians is None else self.jacobians.copy(),
                self.row_sums.copy(), self.diag.copy(), self.total_sum)

    def restore(self, snap) -> None:
        (self.points, self.scores, self.jacobians, self.row_sums, self.diag,
         self.total_sum) = snap
