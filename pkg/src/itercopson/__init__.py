"""Numerical toolkit for weighted iterated Copson inequalities."""

__version__ = "0.1.0"

from .errors import (ConstructionError, InputError, NumericalError,
                     SchemaVersionError, ToleranceNotMet)
from .quadrature import Estimate, GridSpec, integrate, sup_on_interval
from .weights import (WeightExpr, WeightTerm, eval_weight, integrate_weight,
                      sigma_tail)

__all__ = [
    "ConstructionError", "InputError", "NumericalError", "SchemaVersionError",
    "ToleranceNotMet", "Estimate", "GridSpec", "integrate", "sup_on_interval",
    "WeightExpr", "WeightTerm", "eval_weight", "integrate_weight", "sigma_tail",
    "__version__",
]
