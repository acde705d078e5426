"""Ground-truth comparison: exact 1-Wasserstein distance, reference
samplers and parameter sweeps."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog, minimize
from scipy.spatial.distance import cdist

from .kernels import KernelFamily, KernelParams
from .optimize import SearchSpace, make_grid
from .targets import GaussianMixtureSpec, TargetDensity, gm_sample

MAX_COST_ENTRIES = 10_000_000
# above this many replicated atoms the assignment matrix gets too large and
# the transportation LP is solved directly
MAX_ASSIGNMENT_SIZE = 4000

SWEEP_COLUMNS = ("alpha", "beta", "seed", "n_eval", "ksd", "wasserstein", "status")


class TransportSizeError(ValueError):
    """The exact transport problem exceeds the n * N size guard."""


class SamplerError(RuntimeError):
    pass


@dataclass
class ReferenceSample:
    points: np.ndarray
    provenance: str = "iid"
    seed: int = 0
    acceptance_rate: Optional[float] = None
    proposal_sd: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.points, dtype=float)
        self.points = X[:, None] if X.ndim == 1 else X
        if self.points.shape[0] < 1:
            raise ValueError("reference sample needs at least one point")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("reference sample contains non-finite points")
        if self.provenance not in ("iid", "rwm-mcmc"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        d = self.points.shape[1]
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g",
                   header=f"provenance={self.provenance} seed={self.seed}\n"
                          + ",".join(f"x{j}" for j in range(d)))

    @classmethod
    def from_csv(cls, path) -> "ReferenceSample":
        with open(path) as fh:
            meta = fh.readline().lstrip("#").split()
        info = dict(kv.split("=", 1) for kv in meta if "=" in kv)
        X = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(X, info.get("provenance", "iid"), int(info.get("seed", 0)))


# -- exact 1-Wasserstein -------------------------------------------------------

def _as_points(a, name):
    X = np.asarray(a, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty (n, d) array")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def wasserstein1(sample_a, sample_b, return_plan: bool = False):
    """Exact W1 between the uniform empirical measures on two point sets.

    With uniform masses the transportation polytope has integral vertices
    after scaling by lcm(n, N), so the problem is an assignment between
    lcm(n, N) replicated atoms. Large lcm falls back to the transportation
    LP solved with the HiGHS simplex. The optional plan has row sums 1/n and
    column sums 1/N.
    """
    A = _as_points(sample_a, "sample_a")
    B = _as_points(sample_b, "sample_b")
    if A.shape[1] != B.shape[1]:
        raise ValueError("samples must have the same dimension")
    n, N = len(A), len(B)
    if n * N > MAX_COST_ENTRIES:
        raise TransportSizeError(
            f"n*N = {n * N} cost entries exceeds the {MAX_COST_ENTRIES} limit")
    C = cdist(A, B)
    L = n * N // math.gcd(n, N)
    if L <= MAX_ASSIGNMENT_SIZE:
        ra, rb = L // n, L // N
        rows, cols = linear_sum_assignment(np.repeat(np.repeat(C, ra, axis=0), rb, axis=1))
        ia, ib = rows // ra, cols // rb
        cost = float(C[ia, ib].sum() / L)
        if not return_plan:
            return cost
        plan = np.zeros((n, N))
        np.add.at(plan, (ia, ib), 1.0 / L)
        return cost, plan
    A_eq = sp.vstack([sp.kron(sp.eye(n), np.ones((1, N))),
                      sp.kron(np.ones((1, n)), sp.eye(N))]).tocsr()
    b_eq = np.concatenate([np.full(n, float(N)), np.full(N, float(n))])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = res.x.reshape(n, N) / (n * N)
    cost = float(np.sum(plan * C))
    return (cost, plan) if return_plan else cost


# -- reference samplers --------------------------------------------------------

def iid_gm_sample(spec: GaussianMixtureSpec, n_samples: int, seed: int = 0) -> ReferenceSample:
    X, _ = gm_sample(spec, int(n_samples), np.random.default_rng(seed))
    return ReferenceSample(X, "iid", seed)


def find_mode(target: TargetDensity, space: SearchSpace, n_grid: int = 41) -> np.ndarray:
    """Grid scan of log q over the box followed by a Nelder-Mead polish."""
    X = make_grid(space, n_grid)
    ok = target.in_domain(X)
    X = X[ok]
    lq = np.full(len(X), -np.inf)
    for i in range(0, len(X), 4096):
        lq[i:i + 4096] = target.log_q(X[i:i + 4096])
    if not np.any(np.isfinite(lq)):
        raise SamplerError("log q is not finite anywhere on the search grid")
    x0 = X[int(np.argmax(lq))]

    def f(x):
        if not (space.contains(x)[0] and target.in_domain(x[None])[0]):
            return np.inf
        v = float(target.log_q(x))
        return -v if np.isfinite(v) else np.inf

    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10 * space.diagonal, "fatol": 1e-10, "maxiter": 2000})
    return res.x if res.fun <= f(x0) else x0


def rwm_sample(target: TargetDensity, n_samples: int, proposal_sd, seed: int = 0,
               burn_in: int = 5000, thin: int = 100, start=None, window: int = 50,
               space: Optional[SearchSpace] = None, on_keep=None) -> ReferenceSample:
    """Random-walk Metropolis with Gaussian proposals.

    During burn-in the proposal scale is multiplied by 1.1 (0.9) after each
    ``window`` steps whose acceptance rate is above (below) 0.234, then held
    fixed. ``proposal_sd`` may be a scalar or one value per axis. The chain
    starts at ``start``, or at the mode found over ``space``. ``on_keep(i, x)``
    is called as each thinned draw is stored.
    """
    d = target.dim
    if n_samples < 1 or thin < 1 or burn_in < 0 or window < 1:
        raise ValueError("need n_samples >= 1, thin >= 1, burn_in >= 0, window >= 1")
    sd = np.broadcast_to(np.asarray(proposal_sd, dtype=float), (d,)).copy()
    if not np.all(sd > 0):
        raise ValueError("proposal_sd must be positive")
    if start is None:
        if space is None:
            raise ValueError("give either a start point or a search space")
        start = find_mode(target, space)
    x = np.asarray(start, dtype=float).reshape(d)
    lq = float(target.log_q(x)) if target.in_domain(x[None])[0] else -np.inf
    if not np.isfinite(lq):
        raise SamplerError(f"log q is not finite at the chain start {x}")

    rng = np.random.default_rng(seed)
    out = np.empty((n_samples, d))
    win_acc = 0
    acc_after = 0
    total = burn_in + n_samples * thin
    for step in range(total):
        y = x + sd * rng.standard_normal(d)
        u = math.log(rng.random())
        accept = False
        if target.in_domain(y[None])[0]:
            ly = float(target.log_q(y))
            if np.isfinite(ly) and u < ly - lq:
                x, lq, accept = y, ly, True
        if step < burn_in:
            win_acc += accept
            if (step + 1) % window == 0:
                if win_acc == 0:
                    raise SamplerError(
                        f"no proposals accepted in adaptation window ending at step {step + 1}; "
                        f"proposal_sd={sd} looks mis-scaled")
                sd *= 1.1 if win_acc / window > 0.234 else 0.9
                win_acc = 0
        else:
            acc_after += accept
            k = step - burn_in
            if (k + 1) % thin == 0:
                out[k // thin] = x
                if on_keep is not None:
                    on_keep(k // thin, x)
    rate = acc_after / (n_samples * thin)
    return ReferenceSample(out, "rwm-mcmc", seed, acceptance_rate=rate, proposal_sd=sd)


def reference_cache_path(cache_dir, target_name: str, seed: int, n: int) -> Path:
    return Path(cache_dir) / f"reference_{target_name}_seed{seed}_N{n}.csv"


def cached_reference(cache_dir, target_name: str, seed: int, n: int,
                     factory: Callable[[], ReferenceSample]) -> ReferenceSample:
    """Load the reference keyed by (target, seed, N), drawing and saving it if absent."""
    path = reference_cache_path(cache_dir, target_name, seed, n)
    if path.exists():
        ref = ReferenceSample.from_csv(path)
        if len(ref) == n:
            return ref
    ref = factory()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    ref.to_csv(tmp)
    os.replace(tmp, path)
    return ref


# -- parameter sweeps ------------------------------------------------------------

@dataclass
class SweepConfig:
    alpha_multipliers: Sequence[float] = (0.1, 0.5, 1.0, 2.0, 4.0, 8.0)
    betas: Sequence[float] = (-0.1, -0.3, -0.5, -0.7, -0.9)
    eta: float = 1.0
    family: KernelFamily = KernelFamily.IMQ

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if len(self.alpha_multipliers) == 0 or len(self.betas) == 0:
            raise ValueError("sweep grid is empty")
        self.family = KernelFamily(self.family)

    def cells(self):
        return [(m * self.eta, b) for m in self.alpha_multipliers for b in self.betas]


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    @property
    def best(self) -> Optional[dict]:
        ok = [r for r in self.rows if r["status"] == "ok" and np.isfinite(r["wasserstein"])]
        if not ok:
            return None
        return min(ok, key=lambda r: r["wasserstein"])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([repr(float(r["alpha"])), repr(float(r["beta"])), r["seed"],
                            r["n_eval"], repr(float(r["ksd"])), repr(float(r["wasserstein"])),
                            r["status"]])


def run_sweep(method: Callable, target: TargetDensity, sweep: SweepConfig,
              reference: ReferenceSample, n_points: int, seeds: Sequence[int],
              jobs: int = 1) -> SweepResult:
    """Run ``method(target, kernel, n_points, seed) -> (points, trace)`` on each
    (alpha, beta, seed) cell.

    Each cell gets its own target clone. A failing cell is recorded with its
    error as status and the sweep carries on. Rows come out in grid order
    whatever the number of worker threads.
    """
    keys = [(a, b, s) for a, b in sweep.cells() for s in seeds]

    def cell(key):
        a, b, s = key
        row = {"alpha": a, "beta": b, "seed": s, "n_eval": 0,
               "ksd": math.nan, "wasserstein": math.nan, "status": "ok"}
        try:
            kernel = KernelParams(sweep.family, a, b)
            points, trace = method(target.clone(), kernel, n_points, s)
            row["n_eval"] = trace.n_eval
            row["ksd"] = trace.final_ksd
            row["wasserstein"] = wasserstein1(points, reference.points)
            if trace.partial:
                row["status"] = "partial"
        except Exception as err:  # noqa: BLE001 - failures are data here
            row["status"] = f"error: {type(err).__name__}: {err}".replace("\n", " ")
        return key, row

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            done = dict(pool.map(cell, keys))
    else:
        done = dict(cell(k) for k in keys)
    return SweepResult([done[k] for k in keys])


__all__ = [
    "ReferenceSample", "SweepConfig", "SweepResult", "SWEEP_COLUMNS", "TransportSizeError",
    "SamplerError", "wasserstein1", "iid_gm_sample", "rwm_sample", "find_mode",
    "reference_cache_path", "cached_reference", "run_sweep",
]
