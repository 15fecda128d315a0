"""Sparse Bayesian learning with simultaneous sparse and dense noise."""

from .baselines import AugmentedPosterior, augment, fit_rbrvm, fit_rvm
from .blocks import (combine_precisions, fit_sdrvm_blocks, fit_sdrvm_overlap,
                     fit_sdrvm_sparse_dense, sparse_dense_noise_layout)
from .core import (BlockLayout, DimensionMismatch, FitOptions, FitReport,
                   HyperPriors, InvalidBlockLayout, LinearSystem,
                   NonPositivePrecision, NotPositiveDefinite, Posterior,
                   PrecisionState, SdrvmError, spd_solve, validate)
from .solver import (evidence, fit_sdrvm, initial_state, log_evidence,
                     nonsymmetric_cost, posterior, update_beta, update_gamma)

__version__ = "0.1.0"
