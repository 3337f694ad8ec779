"""Toolkit for desk-scale verification of spectrally negative branching
Levy processes with absorption at 0: analytic characteristics, scale
functions, event-driven branching Monte Carlo, Esscher tilting, fixed-point
solvers, and tail-rate fits against the predicted exponents.
"""
from .errors import InputError, NumericalError
from .levy_core import (Characteristics, CompoundPoisson, ExponentialMagnitude,
                        FixedMagnitude, LevyModel, MixtureOfExponentials,
                        Regime, TruncatedStableLike, brownian_model,
                        characteristics, compound_poisson_model, model_hash,
                        phi, psi, psi_derivatives, truncated_stable_model)
from .scale_fn import (RhoValue, ScaleGrid, brownian_w, rho, scale_value,
                       tilted_scale_check, w_q_grid, w_zero_grid)
from .branching_sim import (BranchingConfig, PopulationOutcome, ReplicateBatch,
                            TailEstimate, exit_law_checks,
                            expected_count_check, extinction_tail,
                            free_max_tail, level_hitting_probability, max_tail,
                            run_replicates, sample_segment,
                            simulate_population, wilson_interval)
from .picard import (KilledKernel, SolutionSurface, lemma3_identity_check,
                     solve_max, solve_survival)
from .tilt import (ConditionedPathSampler, KappaEstimate, TiltedModel,
                   esscher_check, estimate_kappa, kendall_check, make_tilted,
                   make_conditioned_sampler, sample_conditioned)
from .asymptotics import (RateFit, fit_rate, verify_corollary,
                          verify_exit_rate, verify_theorem1, verify_theorem2)

__version__ = "0.1.0"
