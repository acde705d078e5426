"""Base kernels k(x, x') and the derivatives needed by the Langevin Stein kernel.

Three families are provided::

    IMQ         k(x, x') = (alpha + |x - x'|^2) ** beta
    InverseLog  k(x, x') = (alpha + log(1 + |x - x'|^2)) ** beta
    IMQScore    k(x, x') = (alpha + |s(x) - s(x')|^2) ** beta,  s = grad log p

All three are functions of a single squared distance ``u`` through a scalar
profile ``phi(u)``; the derivatives below are assembled from ``phi``, ``phi'``
and ``phi''`` by the chain rule. For IMQScore the squared distance is taken in
score space, so derivatives with respect to ``x`` need the score Jacobian
(the Hessian of log p), passed in explicitly to keep this module
target-agnostic. For IMQScore, ``alpha`` also plays the role of the ``c^2``
offset in the convergence-control result for score kernels.

Every function broadcasts over leading axes: points have shape ``(..., d)``,
scores ``(..., d)`` and Jacobians ``(..., d, d)`` with ``jac[..., a, j] =
d s_a / d x_j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "KernelFamily",
    "KernelParams",
    "kernel_eval",
    "kernel_grad_x",
    "kernel_grad_xp",
    "kernel_cross_div",
    "kernel_terms",
]


class KernelFamily(str, enum.Enum):
    IMQ = "imq"
    INVERSE_LOG = "inverse_log"
    IMQ_SCORE = "imq_score"


_DEFAULT_BETA = {
    KernelFamily.IMQ: -0.5,
    KernelFamily.INVERSE_LOG: -1.0,
    KernelFamily.IMQ_SCORE: -0.5,
}


@dataclass(frozen=True)
class KernelParams:
    """Kernel family plus its offset ``alpha`` and exponent ``beta``.

    ``alpha`` is in units of squared input distance (squared score distance
    for IMQScore). ``beta`` defaults to -0.5 for the IMQ families and -1 for
    InverseLog.
    """

    family: KernelFamily = KernelFamily.IMQ
    alpha: float = 1.0
    beta: Optional[float] = None

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        beta = _DEFAULT_BETA[family] if self.beta is None else float(self.beta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if family is KernelFamily.INVERSE_LOG:
            if not beta < 0:
                raise ValueError(f"inverse-log kernel needs beta < 0, got {beta}")
        elif not -1 < beta < 0:
            raise ValueError(f"{family.value} kernel needs beta in (-1, 0), got {beta}")

    @property
    def needs_scores(self) -> bool:
        return self.family is KernelFamily.IMQ_SCORE

    def as_dict(self) -> dict:
        return {"family": self.family.value, "alpha": self.alpha, "beta": self.beta}


def _profile(params: KernelParams, u):
    """phi(u), phi'(u), phi''(u) for the family's scalar profile."""
    a, b = params.alpha, params.beta
    if params.family is KernelFamily.INVERSE_LOG:
        g = a + np.log1p(u)
        w = 1.0 / (1.0 + u)
        phi = g**b
        d1 = b * g ** (b - 1) * w
        d2 = b * (b - 1) * g ** (b - 2) * w * w - b * g ** (b - 1) * w * w
        return phi, d1, d2
    base = a + u
    return base**b, b * base ** (b - 1), b * (b - 1) * base ** (b - 2)


def kernel_terms(params, x, xp, sx=None, sxp=None, jac_x=None, jac_xp=None,
                 need_derivs=True):
    """Unchecked fast path: ``(k, grad_x k, grad_xp k, div_x div_xp k)``.

    With ``need_derivs=False`` only ``k`` is computed and the other entries are
    ``None``. Callers are responsible for shapes and finiteness.
    """
    if params.family is KernelFamily.IMQ_SCORE:
        diff = sx - sxp
    else:
        diff = x - xp
    u = np.sum(diff * diff, axis=-1)
    phi, d1, d2 = _profile(params, u)
    if not need_derivs:
        return phi, None, None, None
    d = diff.shape[-1]
    if params.family is KernelFamily.IMQ_SCORE:
        # chain rule through the score: d(diff)/dx = J_x, d(diff)/dx' = -J_x'
        jx_diff = np.einsum("...aj,...a->...j", jac_x, diff)
        jxp_diff = np.einsum("...aj,...a->...j", jac_xp, diff)
        gx = 2.0 * d1[..., None] * jx_diff
        gxp = -2.0 * d1[..., None] * jxp_diff
        trace = np.einsum("...aj,...aj->...", jac_x, jac_xp)
        div = -4.0 * d2 * np.sum(jx_diff * jxp_diff, axis=-1) - 2.0 * d1 * trace
    else:
        gx = 2.0 * d1[..., None] * diff
        gxp = -gx
        div = -2.0 * d * d1 - 4.0 * d2 * u
    return phi, gx, gxp, div


def _check(params, x, xp, sx, sxp, jac_x=None, jac_xp=None, need_jac=()):
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if xp.ndim == 0:
        xp = xp[None]
    if x.shape[-1] != xp.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {xp.shape[-1]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xp))):
        raise ValueError("kernel inputs must be finite")
    d = x.shape[-1]
    if params.needs_scores:
        if sx is None or sxp is None:
            raise ValueError("IMQ score kernel requires scores at both arguments")
        sx = np.asarray(sx, dtype=float).reshape(np.shape(sx) or (1,))
        sxp = np.asarray(sxp, dtype=float).reshape(np.shape(sxp) or (1,))
        if sx.shape[-1] != d or sxp.shape[-1] != d:
            raise ValueError("score dimension does not match point dimension")
        if not (np.all(np.isfinite(sx)) and np.all(np.isfinite(sxp))):
            raise ValueError("scores must be finite")
        jacs = {"x": jac_x, "xp": jac_xp}
        for name in need_jac:
            if jacs[name] is None:
                raise ValueError(f"IMQ score kernel derivatives require jac_{name}")
            jac = np.asarray(jacs[name], dtype=float)
            if jac.ndim < 2:
                jac = jac.reshape(jac.shape + (1,) * (2 - jac.ndim))
            if jac.shape[-2:] != (d, d):
                raise ValueError(f"jac_{name} must have trailing shape ({d}, {d})")
            jacs[name] = jac
        jac_x, jac_xp = jacs["x"], jacs["xp"]
    elif sx is not None or sxp is not None:
        raise ValueError(f"{params.family.value} kernel does not take scores")
    return x, xp, sx, sxp, jac_x, jac_xp


def _dummy_jac(x):
    return np.zeros(x.shape + (x.shape[-1],))


def kernel_eval(params: KernelParams, x, xp, sx=None, sxp=None):
    """k(x, x'). Scores are required for, and only for, IMQScore."""
    x, xp, sx, sxp, _, _ = _check(params, x, xp, sx, sxp)
    return kernel_terms(params, x, xp, sx, sxp, need_derivs=False)[0]


def kernel_grad_x(params: KernelParams, x, xp, sx=None, sxp=None, jac_x=None):
    """Gradient of k(x, x') in its first argument."""
    x, xp, sx, sxp, jac_x, _ = _check(params, x, xp, sx, sxp, jac_x, need_jac=("x",))
    jac_xp = _dummy_jac(xp) if params.needs_scores else None
    return kernel_terms(params, x, xp, sx, sxp, jac_x, jac_xp)[1]


def kernel_grad_xp(params: KernelParams, x, xp, sx=None, sxp=None, jac_xp=None):
    """Gradient of k(x, x') in its second argument."""
    x, xp, sx, sxp, _, jac_xp = _check(params, x, xp, sx, sxp, None, jac_xp,
                                       need_jac=("xp",))
    jac_x = _dummy_jac(x) if params.needs_scores else None
    return kernel_terms(params, x, xp, sx, sxp, jac_x, jac_xp)[2]


def kernel_cross_div(params: KernelParams, x, xp, sx=None, sxp=None,
                     jac_x=None, jac_xp=None):
    """Trace of the mixed Hessian, sum_j d^2 k / dx_j dx'_j."""
    x, xp, sx, sxp, jac_x, jac_xp = _check(params, x, xp, sx, sxp, jac_x, jac_xp,
                                           need_jac=("x", "xp"))
    return kernel_terms(params, x, xp, sx, sxp, jac_x, jac_xp)[3]
