from .base import DomainError, EvalCounter, EvalCounts, TargetDensity
from .data import Dataset, DataFormatError, load_series_csv, synth_fallback
from .gp import FactorizationError, GPHyperPosterior, GPPosteriorSpec, gp_grad, gp_log_q
from .igarch import (IGARCHPosterior, IGARCHSpec, igarch_grad, igarch_log_q,
                     igarch_variance_path, simulate_igarch)
from .mixture import (GaussianMixture, GaussianMixtureSpec, gm_grad, gm_hess, gm_log_q,
                      gm_sample, standard_normal)

__all__ = [
    "DomainError", "EvalCounter", "EvalCounts", "TargetDensity", "Dataset", "DataFormatError",
    "load_series_csv", "synth_fallback", "FactorizationError", "GPHyperPosterior",
    "GPPosteriorSpec", "gp_grad", "gp_log_q", "IGARCHPosterior", "IGARCHSpec", "igarch_grad",
    "igarch_log_q", "igarch_variance_path", "simulate_igarch", "GaussianMixture",
    "GaussianMixtureSpec", "gm_grad", "gm_hess", "gm_log_q", "gm_sample", "standard_normal",
]
