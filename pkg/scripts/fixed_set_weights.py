"""Compress a fixed sample to simplex weights with greedy/herding selection.

Draws a sample from the target, selects n times from it by exhaustive search
and compares the KSD of the induced weights with uniform weights and with
the projected-gradient optimum over the simplex.

    python scripts/fixed_set_weights.py --m 200 --n 1000
"""

import argparse

import numpy as np

from steinpoints.algorithms import fixed_set_compress
from steinpoints.kernels import KernelParams
from steinpoints.stein import SteinKernel, ksd_weighted
from steinpoints.targets import GaussianMixture


def project_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def simplex_optimum(K, iters=5000):
    w = np.full(len(K), 1.0 / len(K))
    step = 0.5 / np.linalg.eigvalsh(K).max()
    for _ in range(iters):
        w = project_simplex(w - 2 * step * K @ w)
    return w / w.sum()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=200, help="size of the fixed sample")
    ap.add_argument("--n", type=int, default=1000, help="number of selections")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    target = GaussianMixture()
    Y = target.sample(args.m, np.random.default_rng(args.seed))
    state = SteinKernel(KernelParams("imq", 1.0, -0.5), target)
    uniform = np.full(args.m, 1.0 / args.m)
    opt = simplex_optimum(state.gram(Y))
    print(f"uniform weights     KSD {ksd_weighted(Y, uniform, state):.5f}")
    for kind in ("greedy", "herding"):
        _, w, _ = fixed_set_compress(Y, state, kind, n=args.n)
        print(f"{kind:8s} weights    KSD {ksd_weighted(Y, w, state):.5f} "
              f"({np.count_nonzero(w)} of {args.m} points used)")
    print(f"simplex optimum     KSD {ksd_weighted(Y, opt, state):.5f}")


if __name__ == "__main__":
    main()
