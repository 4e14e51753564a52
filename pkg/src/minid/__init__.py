"""Infinitely divisible exponent-measure priors for multivariate survival data.

Random exponent measures ``mu`` with Levy characteristics ``(alpha, nu)``
generate exchangeable min-id sequences.  The package simulates them, computes
prior moments from the Levy-Khintchine exponent, and samples the posterior
predictive through hitting scenarios.
"""

__version__ = "0.1.0"

from .levy import ConditionError, LevyCharacteristics, make_crm, root_crm, subordinate, validate
from .moments import LaplaceQuery, hazard_moments, laplace_transform, mean_functional_moment
from .observations import ObservationSet, ingest_grouped
from .posterior import PosteriorModel, enumerate_scenarios, gibbs_chain, tie_partition, tilt
from .predictive import PredictiveConfig, mcmc_predictive, predictive_summary
from .presets import PRESETS, load_preset
from .sampling import HittingScenario, sample_batch, sample_sequence
from .survival_model import HierarchicalSpec, build_model, e_factor, margin_density_f_IJ

__all__ = ["ConditionError", "LevyCharacteristics", "make_crm", "root_crm", "subordinate", "validate",
           "LaplaceQuery", "hazard_moments", "laplace_transform", "mean_functional_moment", "ObservationSet",
           "ingest_grouped", "PosteriorModel", "enumerate_scenarios", "gibbs_chain", "tie_partition", "tilt",
           "PredictiveConfig", "mcmc_predictive", "predictive_summary", "PRESETS", "load_preset",
           "HittingScenario", "sample_batch", "sample_sequence", "HierarchicalSpec", "build_model", "e_factor",
           "margin_density_f_IJ"]
