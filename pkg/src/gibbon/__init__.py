"""GIBBON Bayesian optimisation."""

from .acquisition import (
    AcquisitionContext,
    correlation_penaliser,
    dpp_logdet,
    expected_improvement,
    gibbon,
    gibbon_modified,
    gibbon_single,
    mes,
    soft_penaliser,
)
from .benchmarks import Benchmark, get_benchmark, noisy
from .exceptions import (
    FactorisationError,
    FitError,
    GibbonError,
    InputValidationError,
    RejectionSamplingError,
)
from .experiment import RunConfig, aggregate, run
from .gp import Dataset, GPPosterior, Kernel, condition, fit
from .maxvalue import MaxValueSamples, gumbel_sample, thompson_sample
from .multifidelity import FidelityLevel, MFKernel, mf_fit
from .optimize import BatchProposal, SearchSpace, cost_weighted_select, greedy_batch

__version__ = "0.1.0"
