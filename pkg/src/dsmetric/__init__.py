"""Distances and certified approximations between finite dynamical systems."""

from .errors import BudgetExceeded, DsMetricError, ValidationError
from .metric import FiniteMetricSpace, SubsetIndex, epsilon_net, hausdorff_distance, validate_metric
from .relation import DynamicalRelation, ds_distance, inverse, validate_relation

__version__ = "0.1.0"

__all__ = ["BudgetExceeded", "DsMetricError", "DynamicalRelation", "FiniteMetricSpace", "SubsetIndex",
           "ValidationError", "ds_distance", "epsilon_net", "hausdorff_distance", "inverse",
           "validate_metric", "validate_relation"]
