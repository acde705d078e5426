"""Stein Points: deterministic point sets that minimise kernel Stein discrepancy."""

__version__ = "0.1.0"

from .kernels import KernelFamily, KernelParams  # noqa: E402
from .stein import SequenceBuilder, SteinKernel, ksd, ksd_weighted  # noqa: E402
from .optimize import (OptimizerConfig, ProposalConfig, SearchSpace,  # noqa: E402
                       make_searcher)
from .algorithms import (RunConfig, RunTrace, bcd_sweep, fixed_set_compress,  # noqa: E402
                         greedy_step, herding_step, run_budgeted, run_sequence)
from .baselines import MedConfig, SvgdConfig, med_greedy, svgd_run  # noqa: E402
from .evaluation import (ReferenceSample, SweepConfig, iid_gm_sample, run_sweep,  # noqa: E402
                         rwm_sample, wasserstein1)

__all__ = [
    "KernelFamily", "KernelParams", "SequenceBuilder", "SteinKernel", "ksd", "ksd_weighted",
    "OptimizerConfig", "ProposalConfig", "SearchSpace", "make_searcher", "RunConfig",
    "RunTrace", "bcd_sweep", "fixed_set_compress", "greedy_step", "herding_step",
    "run_budgeted", "run_sequence", "MedConfig", "SvgdConfig", "med_greedy", "svgd_run",
    "ReferenceSample", "SweepConfig", "iid_gm_sample", "run_sweep", "rwm_sample",
    "wasserstein1",
]
