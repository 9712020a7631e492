"""Information-Geometric Optimization toolkit"""
from . import settings
from .core import (
    StepReport,
    adapt_dt,
    cem_step,
    igo_ml_step,
    igo_step,
    lift_noisy,
    smoothed_cem_step,
    step_diagnostics,
    vanilla_step
)
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateUpdate,
    DomainError,
    IgoError,
    RejectedInput,
    SingularFisher,
    UnreliableFisher,
    WeightNormalizationError
)
from .families import FAMILY_CLASS_MAPPINGS, parse_family
from .fisher import FisherMatrix, cross_validated_fisher, exact_fisher, mc_fisher
from .flow import critical_dt, flow_rhs, gaussian_linear_constants, integrate
from .objectives import OBJECTIVE_CLASS_MAPPINGS, parse_objective
from .weights import RankSchedule, WeightScheme, compute_quantile_weights, parse_scheme

__version__ = "1.0.0"

__all__ = [
    "CapabilityError",
    "ConfigError",
    "DegenerateUpdate",
    "DomainError",
    "FAMILY_CLASS_MAPPINGS",
    "FisherMatrix",
    "IgoError",
    "OBJECTIVE_CLASS_MAPPINGS",
    "RankSchedule",
    "RejectedInput",
    "SingularFisher",
    "StepReport",
    "UnreliableFisher",
    "WeightNormalizationError",
    "WeightScheme",
    "adapt_dt",
    "cem_step",
    "compute_quantile_weights",
    "critical_dt",
    "cross_validated_fisher",
    "exact_fisher",
    "flow_rhs",
    "gaussian_linear_constants",
    "igo_ml_step",
    "igo_step",
    "integrate",
    "lift_noisy",
    "mc_fisher",
    "parse_family",
    "parse_objective",
    "parse_scheme",
    "smoothed_cem_step",
    "step_diagnostics",
    "vanilla_step"
]
