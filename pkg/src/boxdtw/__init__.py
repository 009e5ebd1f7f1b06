"""Dynamic time warping and geometric edit distance by box decomposition.

The quadratic dynamic programs in :mod:`boxdtw.oracle` are the reference.
The boxed algorithm splits the DP grid into g x g boxes, precomputes every
box's shortest staircase paths (:mod:`boxdtw.preprocess`) and then
propagates boundary values box by box with a Monge divide and conquer
(:mod:`boxdtw.compactdp`).
"""

from .compactdp import WorkStats, dtw_subquadratic, ged_subquadratic
from .core import (
    ABS,
    INF,
    ConfigError,
    Coupling,
    GridCostModel,
    InputError,
    InvariantError,
    Metric,
    MonotoneMatching,
    PointSequence,
    ValidationError,
    coupling_cost,
    matching_cost,
)
from .oracle import dtw_quadratic, ged_quadratic

__all__ = [
    "ABS",
    "INF",
    "ConfigError",
    "Coupling",
    "GridCostModel",
    "InputError",
    "InvariantError",
    "Metric",
    "MonotoneMatching",
    "PointSequence",
    "ValidationError",
    "WorkStats",
    "coupling_cost",
    "matching_cost",
    "dtw_quadratic",
    "ged_quadratic",
    "dtw_subquadratic",
    "ged_subquadratic",
]

__version__ = "0.1.0"
