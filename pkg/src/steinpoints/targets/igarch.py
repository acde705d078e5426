"""IGARCH(1,1) posterior under an improper uniform prior.

sigma_t^2 = theta1 + theta2 * y_{t-1}^2 + (1 - theta2) * sigma_{t-1}^2, with
sigma_1^2 fixed (sample variance of the series unless given). The variance
path and its parameter sensitivities all obey first-order linear recursions
with the same pole (1 - theta2), so each is one ``lfilter`` call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .base import DomainError, TargetDensity


@dataclass
class IGARCHSpec:
    returns: np.ndarray
    sigma1_sq_init: Optional[float] = None

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float).ravel()
        if len(self.returns) < 2:
            raise ValueError("need at least two returns")
        if not np.all(np.isfinite(self.returns)):
            raise ValueError("returns series contains non-finite values")
        if self.sigma1_sq_init is None:
            self.sigma1_sq_init = float(np.var(self.returns))
        if not self.sigma1_sq_init > 0:
            raise ValueError("sigma1_sq_init must be positive")


def _first_order(inputs, pole, init):
    # out_t = inputs_t + pole * out_{t-1}, out_{-1} = init
    return lfilter([1.0], [1.0, -pole], inputs, zi=[pole * init])[0]


def igarch_variance_path(spec: IGARCHSpec, theta):
    """sigma_t^2 and its derivatives in theta1 and theta2, each of length T.

    Accepts the closed boundary 0 <= theta2 <= 1 so limiting cases can be
    inspected; likelihood evaluation enforces the open domain.
    """
    th1, th2 = np.asarray(theta, dtype=float)
    y2 = spec.returns**2
    c = 1.0 - th2
    s0 = spec.sigma1_sq_init
    T = len(y2)
    sig2 = np.empty(T)
    sig2[0] = s0
    sig2[1:] = _first_order(th1 + th2 * y2[:-1], c, s0)
    d1 = np.zeros(T)
    d1[1:] = _first_order(np.ones(T - 1), c, 0.0)
    d2 = np.zeros(T)
    d2[1:] = _first_order(y2[:-1] - sig2[:-1], c, 0.0)
    return sig2, d1, d2


def _check_domain(theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2,) or not np.all(np.isfinite(theta)):
        raise DomainError(f"theta must be a finite 2-vector, got {theta!r}")
    if not (theta[0] > 0 and 0 < theta[1] < 1):
        raise DomainError(f"theta={theta} outside theta1 > 0, 0 < theta2 < 1")
    return theta


def igarch_log_q(spec: IGARCHSpec, theta) -> float:
    theta = _check_domain(theta)
    sig2 = igarch_variance_path(spec, theta)[0]
    y2 = spec.returns**2
    return float(-0.5 * np.sum(np.log(2 * np.pi * sig2) + y2 / sig2))


def igarch_grad(spec: IGARCHSpec, theta) -> np.ndarray:
    theta = _check_domain(theta)
    sig2, d1, d2 = igarch_variance_path(spec, theta)
    dl = 0.5 * (spec.returns**2 / sig2 - 1.0) / sig2
    return np.array([dl @ d1, dl @ d2])


class IGARCHPosterior(TargetDensity):
    dim = 2

    def __init__(self, spec: IGARCHSpec):
        super().__init__()
        self.spec = spec
        self.domain_box = (np.array([0.0, 0.0]), np.array([np.inf, 1.0]))

    def in_domain(self, X):
        X = np.atleast_2d(X)
        return (X[:, 0] > 0) & (X[:, 1] > 0) & (X[:, 1] < 1)

    def _log_q(self, X):
        return np.array([igarch_log_q(self.spec, x) for x in X])

    def _grad(self, X):
        return np.array([igarch_grad(self.spec, x) for x in X])


def simulate_igarch(theta, n: int, rng: np.random.Generator, sigma1_sq: float = 1.0,
                    burn_in: int = 500) -> np.ndarray:
    """Simulate returns from the IGARCH recursion, discarding a burn-in."""
    th1, th2 = theta
    total = n + burn_in
    y = np.empty(total)
    s2 = sigma1_sq
    eps = rng.standard_normal(total)
    for t in range(total):
        y[t] = np.sqrt(s2) * eps[t]
        s2 = th1 + th2 * y[t] ** 2 + (1 - th2) * s2
    return y[burn_in:]
