"""Outlier-robust Bayesian optimization with confidence-bound guarantees.

Public surface: kernels and GP/robust-GP posteriors, plateau-IMQ weight
machinery, confidence schedules, adversarial corruption channels, benchmark
objectives, the optimization loops, and the benchmark harness.
"""

from .adversary import CorruptionBudget, EagerBudget, GreedyClairvoyant, NoCorruption, budget_from_horizon, corrupt
from .algorithms import (
    BoState,
    DomainSpec,
    acquisition_value,
    fit_hyperparameters_loo,
    maximize_acquisition,
    run_loop,
    standardize_targets,
    step_a2,
    step_fc,
    step_gp_ucb,
)
from .bench import ConfigError, ExperimentConfig, aggregate, load_config, run_experiment
from .gp import GpPosterior, gp_fit, gp_predict
from .kernels import FactorizationError, KernelSpec, cross_matrix, gram_matrix, info_gain, kernel_eval
from .objectives import Objective, forrester, make_objective, observe
from .rcgp import RcgpPosterior, deviation_schur, rcgp_fit, rcgp_predict
from .schedules import (
    CompactConvex,
    FiniteDomain,
    Rkhs,
    ScheduleState,
    anchor_width,
    beta_prime,
    estimate_tc,
    noise_bound,
    robust_beta,
    wrench_width_adaptive,
    wrench_width_fixed,
)
from .weights import PimqParams, build_corrections, c1_bound, cw_from_c1, pimq_mw, pimq_params_for_noise, pimq_weight

__version__ = "0.1.0"
