"""Exact occupation measures, class conversions and constrained solves for finite
multi-agent constrained POMDPs."""

from .errors import TeamOccError
from .model import RunConfig, TeamModel, discount_mass, load_model, truncation_bound, validate_model

__all__ = ["RunConfig", "TeamModel", "TeamOccError", "discount_mass", "load_model", "truncation_bound",
           "validate_model"]
__version__ = "0.1.0"
