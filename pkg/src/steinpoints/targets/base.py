"""Un-normalised target densities with evaluation accounting."""

from __future__ import annotations

import copy
import threading
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


class DomainError(ValueError):
    """Raised when a density is evaluated outside its support."""


@dataclass(frozen=True)
class EvalCounts:
    n_logp: int = 0
    n_grad: int = 0
    n_hess: int = 0

    @property
    def n_eval(self) -> int:
        # cost unit: evaluations of log p plus evaluations of grad log p
        return self.n_logp + self.n_grad

    def __sub__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(self.n_logp - other.n_logp, self.n_grad - other.n_grad,
                          self.n_hess - other.n_hess)


class EvalCounter:
    """Monotone, thread-safe tallies of density evaluations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._logp = 0
        self._grad = 0
        self._hess = 0

    def add(self, logp: int = 0, grad: int = 0, hess: int = 0) -> None:
        with self._lock:
            self._logp += logp
            self._grad += grad
            self._hess += hess

    def snapshot(self) -> EvalCounts:
        with self._lock:
            return EvalCounts(self._logp, self._grad, self._hess)


class TargetDensity:
    """Base class for p(x) = q(x) / C known only through q.

    Subclasses implement the batched, uncounted ``_log_q``, ``_grad`` and
    (optionally) ``_hess`` on arrays of shape ``(m, dim)``. The public methods
    accept a single point ``(dim,)`` or a batch ``(m, dim)``, charge one
    evaluation per point to the counter, and return matching shapes.
    """

    dim: int
    domain_box: Optional[Tuple[np.ndarray, np.ndarray]] = None
    has_hessian: bool = False
    fd_step: float = 1e-5

    def __init__(self):
        self.counter = EvalCounter()

    # -- subclass hooks ------------------------------------------------------
    def _log_q(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _grad(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _hess(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def in_domain(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.ones(X.shape[0], dtype=bool)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no exact sampler")

    @property
    def has_sampler(self) -> bool:
        return type(self).sample is not TargetDensity.sample

    # -- counted public API --------------------------------------------------
    def _as_batch(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        X = x.reshape(1, -1) if single else x
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {X.shape[-1]}")
        return X, single

    def log_q(self, x):
        X, single = self._as_batch(x)
        self.counter.add(logp=X.shape[0])
        out = self._log_q(X)
        return out[0] if single else out

    def grad_log_q(self, x):
        X, single = self._as_batch(x)
        self.counter.add(grad=X.shape[0])
        out = self._grad(X)
        return out[0] if single else out

    def hess_log_q(self, x):
        if not self.has_hessian:
            raise NotImplementedError(f"{type(self).__name__} has no analytic Hessian")
        X, single = self._as_batch(x)
        self.counter.add(hess=X.shape[0])
        out = self._hess(X)
        return out[0] if single else out

    def score_jacobian(self, x):
        """Jacobian of grad log q; analytic if available, else central differences.

        Steps are relative to each coordinate's magnitude (unit scale at
        zero). The finite-difference route costs ``2 * dim`` gradient evaluations per
        point, all charged to the counter.
        """
        if self.has_hessian:
            return self.hess_log_q(x)
        X, single = self._as_batch(x)
        m, d = X.shape
        scale = np.where(np.abs(X) > 1e-8, np.abs(X), 1.0)
        J = np.empty((m, d, d))
        for j in range(d):
            h = self.fd_step * scale[:, j]
            Xp, Xm = X.copy(), X.copy()
            Xp[:, j] += h
            Xm[:, j] -= h
            J[:, :, j] = (self.grad_log_q(Xp) - self.grad_log_q(Xm)) / (2 * h[:, None])
        J = 0.5 * (J + np.swapaxes(J, 1, 2))
        return J[0] if single else J

    def counts(self) -> EvalCounts:
        return self.counter.snapshot()

    def clone(self) -> "TargetDensity":
        """Shallow copy sharing the model but with a fresh counter."""
        other = copy.copy(self)
        other.counter = EvalCounter()
        return other
