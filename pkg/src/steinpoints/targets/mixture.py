"""Gaussian mixture targets with closed-form score and Hessian."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .base import TargetDensity


@dataclass
class GaussianMixtureSpec:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)
        d = self.means.shape[1]
        self.covariances = covs.reshape(len(self.weights), d, d)
        if self.means.shape[0] != len(self.weights):
            raise ValueError("need one mean per mixture weight")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if not np.allclose(self.covariances, np.swapaxes(self.covariances, 1, 2)):
            raise ValueError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(self.covariances)
        except np.linalg.LinAlgError as err:
            raise ValueError("covariances must be positive definite") from err
        self._chol = chol
        self._prec = np.linalg.inv(self.covariances)
        self._logdet = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(-1)
        with np.errstate(divide="ignore"):
            self._logw = np.log(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @classmethod
    def bimodal(cls) -> "GaussianMixtureSpec":
        """Equal-weight bimodal mixture with means (+-1.5, 0) and identity covariances."""
        return cls([0.5, 0.5], [[-1.5, 0.0], [1.5, 0.0]], [np.eye(2), np.eye(2)])

    @classmethod
    def standard_normal(cls, dim: int = 1) -> "GaussianMixtureSpec":
        return cls([1.0], np.zeros((1, dim)), np.eye(dim)[None])


def _component_terms(spec: GaussianMixtureSpec, X):
    """Per-component log densities (m, C) and precision-scaled offsets (m, C, d)."""
    diff = spec.means[None, :, :] - X[:, None, :]
    g = np.einsum("cij,mcj->mci", spec._prec, diff)
    maha = np.einsum("mci,mci->mc", diff, g)
    logc = spec._logw - 0.5 * (maha + spec._logdet + spec.dim * np.log(2 * np.pi))
    return logc, g


def gm_log_q(spec: GaussianMixtureSpec, x):
    X = np.atleast_2d(x)
    out = logsumexp(_component_terms(spec, X)[0], axis=1)
    return out[0] if np.ndim(x) <= 1 else out


def _responsibilities(logc):
    return np.exp(logc - logsumexp(logc, axis=1, keepdims=True))


def gm_grad(spec: GaussianMixtureSpec, x):
    X = np.atleast_2d(x)
    logc, g = _component_terms(spec, X)
    out = np.einsum("mc,mci->mi", _responsibilities(logc), g)
    return out[0] if np.ndim(x) <= 1 else out


def gm_hess(spec: GaussianMixtureSpec, x):
    X = np.atleast_2d(x)
    logc, g = _component_terms(spec, X)
    r = _responsibilities(logc)
    mean_g = np.einsum("mc,mci->mi", r, g)
    second = np.einsum("mc,mci,mcj->mij", r, g, g) - np.einsum("mc,cij->mij", r, spec._prec)
    out = second - np.einsum("mi,mj->mij", mean_g, mean_g)
    return out[0] if np.ndim(x) <= 1 else out


def gm_sample(spec: GaussianMixtureSpec, n: int, rng: np.random.Generator):
    """Exact draws; returns (points, component labels)."""
    labels = rng.choice(len(spec.weights), size=n, p=spec.weights)
    z = rng.standard_normal((n, spec.dim))
    pts = spec.means[labels] + np.einsum("nij,nj->ni", spec._chol[labels], z)
    return pts, labels


class GaussianMixture(TargetDensity):
    has_hessian = True

    def __init__(self, spec: GaussianMixtureSpec = None):
        super().__init__()
        self.spec = GaussianMixtureSpec.bimodal() if spec is None else spec
        self.dim = self.spec.dim

    @classmethod
    def from_params(cls, weights: Sequence[float], means, covariances):
        return cls(GaussianMixtureSpec(weights, means, covariances))

    def _log_q(self, X):
        return gm_log_q(self.spec, X)

    def _grad(self, X):
        return gm_grad(self.spec, X)

    def _hess(self, X):
        return gm_hess(self.spec, X)

    def sample(self, n, rng):
        return gm_sample(self.spec, n, rng)[0]


def standard_normal(dim: int = 1) -> GaussianMixture:
    return GaussianMixture(GaussianMixtureSpec.standard_normal(dim))
