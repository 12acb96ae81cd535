"""Approximate message passing for compressed sensing.

Solvers for basis pursuit, the Lasso and Bayesian reconstruction, the
edge-level message passing they approximate, and independent reference
oracles.
"""
__version__ = "0.1.0"

from .model import (Amplitude, Ensemble, ExperimentConfig, ProblemInstance, Solver,
                    TrialRecord, generate_instance, undersampling_ratio)
from .denoisers import (BernoulliGaussian, PointMassMixture, PosteriorMean, SoftThreshold,
                        f_beta_moments, posterior_moments, soft_threshold,
                        soft_threshold_deriv)
from .amp import (AmpState, SolverOptions, Variant, amp_bayes_step, amp_bp_step,
                  amp_lasso_step, run_solver)
from .sum_product import (EdgeMessages, kolmogorov_distance, mp_estimate,
                          mp_finite_beta_step, mp_init, mp_step)
from .estimators import (AMPBasisPursuit, AMPBayes, AMPLasso, CoordinateDescentLasso,
                         FISTALasso)

__all__ = [
    "Amplitude", "Ensemble", "ExperimentConfig", "ProblemInstance", "Solver", "TrialRecord",
    "generate_instance", "undersampling_ratio",
    "BernoulliGaussian", "PointMassMixture", "PosteriorMean", "SoftThreshold",
    "f_beta_moments", "posterior_moments", "soft_threshold", "soft_threshold_deriv",
    "AmpState", "SolverOptions", "Variant", "amp_bayes_step", "amp_bp_step",
    "amp_lasso_step", "run_solver",
    "EdgeMessages", "kolmogorov_distance", "mp_estimate", "mp_finite_beta_step", "mp_init",
    "mp_step",
    "AMPBasisPursuit", "AMPBayes", "AMPLasso", "CoordinateDescentLasso", "FISTALasso",
]
