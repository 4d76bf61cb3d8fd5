"""Classical and exponential shrinkage of multinomial parameters from relative counts."""

from . import infogeo, shrinkage, simlab, simplex
from .errors import (
    BoundaryPoint,
    CodaError,
    DegenerateInput,
    DimensionError,
    ImpossibleOutcome,
    InfiniteDivergence,
    InsufficientData,
    InvalidParameter,
    InvalidWeight,
    NotInTangentPlane,
    OracleStarved,
)
from .shrinkage import (
    DeltaMoments,
    ShrinkResult,
    delta_moments,
    empirical_estimate,
    exp_shrink,
    optimal_beta,
    optimal_lambda,
    shrink,
)
from .simplex import clr, clr_inv, closure

__version__ = "0.1.0"
