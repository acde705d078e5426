"""Turn an ExperimentConfig into targets, searchers and runs."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .algorithms import RunConfig, RunTrace, _Recorder, rng_for, run_budgeted, run_sequence
from .baselines import MedConfig, SvgdConfig, med_greedy, svgd_run
from .config import ConfigError, ExperimentConfig
from .evaluation import (ReferenceSample, cached_reference, iid_gm_sample, rwm_sample,
                         wasserstein1)
from .kernels import KernelParams
from .optimize import OptimizerConfig, ProposalConfig, SearchSpace
from .stein import SequenceBuilder, SteinKernel, ksd
from .targets import (GaussianMixture, GaussianMixtureSpec, GPHyperPosterior, GPPosteriorSpec,
                      IGARCHPosterior, IGARCHSpec, TargetDensity, load_series_csv,
                      synth_fallback)

# seed stream for the baseline samplers, kept apart from the Stein streams
_MC = 3


def build_target(cfg: ExperimentConfig) -> TargetDensity:
    t = cfg.target
    if t.kind == "gaussian_mixture":
        if t.means is None:
            return GaussianMixture(GaussianMixtureSpec.bimodal())
        try:
            return GaussianMixture(GaussianMixtureSpec(t.weights, t.means, t.covariances))
        except ValueError as err:
            raise ConfigError("target.covariances", str(err)) from None
    if t.kind == "gp":
        data = (load_series_csv(cfg.data_path(), "xy") if t.data is not None
                else synth_fallback("lidar", t.synth_seed))
        return GPHyperPosterior(GPPosteriorSpec(data.x, data.y, t.noise_sd))
    data = (load_series_csv(cfg.data_path(), "y") if t.data is not None
            else synth_fallback("igarch", t.synth_seed))
    return IGARCHPosterior(IGARCHSpec(data.y, t.sigma1_sq_init))


def build_space(cfg: ExperimentConfig) -> SearchSpace:
    return SearchSpace(cfg.box["lower"], cfg.box["upper"])


def build_optimizer(cfg: ExperimentConfig) -> OptimizerConfig:
    o = cfg.optimizer
    p = o["proposal"]
    try:
        prop = ProposalConfig(int(p["n_init"]), int(p["n_test"]), int(p["n_delay"]),
                              p.get("mu0"), p.get("sigma0"), float(p["lam"]))
        return OptimizerConfig(o["kind"], prop, int(o["n0"]), bool(o["fixed_grid"]))
    except ValueError as err:
        raise ConfigError("optimizer.proposal", str(err)) from None


def build_kernel(cfg: ExperimentConfig) -> KernelParams:
    k = cfg.kernel
    return KernelParams(k["family"], k["alpha"], k["beta"])


def mc_baseline(target: TargetDensity, cfg: ExperimentConfig, kernel: KernelParams,
                n_points: int, seed: int):
    """Exact draws (mixture) or a random-walk Metropolis chain started at mu0.

    An exact draw is charged as one log-density evaluation. Trace row m holds
    the KSD of the first m points, computed on an uncounted clone.
    """
    sampler = cfg.mc["sampler"]
    if sampler == "auto":
        sampler = "iid" if target.has_sampler else "rwm"
    trace = RunTrace()
    rec = _Recorder(target, trace)
    monitor = SequenceBuilder(SteinKernel(kernel, target.clone()))

    def keep(i, x):
        monitor.append(x)
        rec.record(i + 1, monitor.ksd())

    if sampler == "iid":
        X = target.sample(n_points, rng_for(seed, _MC))
        for i, x in enumerate(X):
            target.counter.add(logp=1)
            keep(i, x)
    else:
        tdef_sd = cfg.reference["proposal_sd"]
        start = cfg.optimizer["proposal"]["mu0"]
        X = rwm_sample(target, n_points, tdef_sd, seed=int(rng_for(seed, _MC).integers(2**63)),
                       burn_in=int(cfg.mc["burn_in"]), thin=int(cfg.mc["thin"]),
                       start=start, on_keep=keep).points
    trace.points = np.asarray(X, dtype=float)
    return trace.points, trace


def run_method(cfg: ExperimentConfig, target: TargetDensity, seed: int,
               kernel: Optional[KernelParams] = None, n_points: Optional[int] = None):
    """Run ``cfg.method`` once (``cfg`` must be resolved). Returns (points, trace)."""
    kernel = build_kernel(cfg) if kernel is None else kernel
    n = cfg.n_points if n_points is None else n_points
    space = build_space(cfg)
    m = cfg.method
    if m.startswith("stein-"):
        kind = "greedy" if "greedy" in m else "herding"
        rc = RunConfig(space, n, kernel, build_optimizer(cfg), cfg.c2, 0.0, seed)
        if m.endswith("-n"):
            return run_budgeted(kind, rc, target, cfg.eval_budget)
        return run_sequence(kind, rc, target)
    if m == "med":
        mc = MedConfig(space, n, cfg.med["delta"], build_optimizer(cfg), kernel, seed)
        return med_greedy(target, mc)
    if m == "svgd":
        s = cfg.svgd
        sc = SvgdConfig(space, n, kernel, float(s["master_step"]), float(s["momentum"]),
                        int(s["n_iterations"]))
        return svgd_run(target, sc, seed)
    return mc_baseline(target, cfg, kernel, n, seed)


def make_reference(cfg: ExperimentConfig, target: TargetDensity) -> ReferenceSample:
    """Reference sample for W1: exact draws for the mixture, a thinned RWM
    chain from the mode otherwise. Cached on disk when ``cache_dir`` is set."""
    r = cfg.reference
    if r.get("path"):
        p = Path(r["path"])
        if not p.is_absolute() and cfg.base_dir is not None and not p.exists():
            p = Path(cfg.base_dir) / p
        if not p.exists():
            raise ConfigError("reference.path", f"file not found: {p}")
        return ReferenceSample.from_csv(p)
    n, seed = int(r["n"]), int(r["seed"])
    shadow = target.clone()

    def factory():
        if isinstance(shadow, GaussianMixture):
            return iid_gm_sample(shadow.spec, n, seed)
        return rwm_sample(shadow, n, r["proposal_sd"], seed=seed, burn_in=int(r["burn_in"]),
                          thin=int(r["thin"]), space=build_space(cfg))

    if r.get("cache_dir"):
        return cached_reference(r["cache_dir"], cfg.target.name, seed, n, factory)
    return factory()


def evaluate_points(points, target: TargetDensity, kernels, reference: Optional[ReferenceSample]):
    """KSD under each kernel plus W1 against the reference (if given)."""
    out = {"n_points": int(len(points))}
    for k in kernels:
        out[f"ksd_{k.family.value}_a{k.alpha:g}_b{k.beta:g}"] = ksd(points, SteinKernel(k, target))
    if reference is not None:
        out["wasserstein"] = wasserstein1(points, reference.points)
    return out
