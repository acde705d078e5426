"""Posterior over log-hyperparameters of a squared-exponential GP regression.

The model is y = g(x) + noise, noise ~ N(0, sigma^2), g ~ GP(0, c) with
c(x, x') = theta1 * exp(-theta2 (x - x')^2). The target density is over
phi = (log theta1, log theta2) with a standard bivariate Cauchy prior,
proportional to (1 + |phi|^2) ** (-3/2).

``gp_log_q`` keeps the Gaussian normalising constants, so printed values are a
proper log marginal likelihood plus the unnormalised log prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .base import TargetDensity


class FactorizationError(ValueError):
    """The regularised covariance matrix failed to factorise."""


@dataclass
class GPPosteriorSpec:
    inputs: np.ndarray
    outputs: np.ndarray
    noise_sd: float = 0.1

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float).ravel()
        self.outputs = np.asarray(self.outputs, dtype=float).ravel()
        if self.inputs.shape != self.outputs.shape:
            raise ValueError("inputs and outputs must have the same length")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        self._sqdist = (self.inputs[:, None] - self.inputs[None, :]) ** 2


def _factorise(spec: GPPosteriorSpec, phi):
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (2,) or not np.all(np.isfinite(phi)):
        raise ValueError(f"phi must be a finite 2-vector, got {phi!r}")
    theta1, theta2 = np.exp(phi)
    K = theta1 * np.exp(-theta2 * spec._sqdist)
    Kt = K + spec.noise_sd**2 * np.eye(len(spec.outputs))
    try:
        cf = cho_factor(Kt, lower=True)
    except LinAlgError as err:
        raise FactorizationError(f"covariance not positive definite at phi={phi}") from err
    return K, cf, theta2


def _log_prior(phi):
    return -1.5 * np.log1p(phi @ phi)


def gp_log_q(spec: GPPosteriorSpec, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    _, cf, _ = _factorise(spec, phi)
    y = spec.outputs
    a = cho_solve(cf, y)
    logdet = 2.0 * np.log(np.diag(cf[0])).sum()
    loglik = -0.5 * y @ a - 0.5 * logdet - 0.5 * len(y) * np.log(2 * np.pi)
    return loglik + _log_prior(phi)


def gp_grad(spec: GPPosteriorSpec, phi) -> np.ndarray:
    """Trace-identity gradient: 0.5 * tr((a a^T - Kt^-1) dK/dphi_j) + prior term."""
    phi = np.asarray(phi, dtype=float)
    K, cf, theta2 = _factorise(spec, phi)
    n = len(spec.outputs)
    a = cho_solve(cf, spec.outputs)
    inner = np.outer(a, a) - cho_solve(cf, np.eye(n))
    dK1 = K
    dK2 = -theta2 * spec._sqdist * K
    grad = 0.5 * np.array([np.sum(inner * dK1), np.sum(inner * dK2)])
    return grad - 3.0 * phi / (1.0 + phi @ phi)


class GPHyperPosterior(TargetDensity):
    dim = 2

    def __init__(self, spec: GPPosteriorSpec):
        super().__init__()
        self.spec = spec

    def _log_q(self, X):
        return np.array([gp_log_q(self.spec, x) for x in X])

    def _grad(self, X):
        return np.array([gp_grad(self.spec, x) for x in X])
