"""Weighted L-infinity curve fitting under shape constraints, in linear time.

The package decides feasibility of chains of interval constraints on values,
first differences, and scaled second differences (one O(n) sweep maintaining
a convex feasibility polygon), and bisects that decision to fit monotone,
Lipschitz, convex/concave, or custom-bounded curves to weighted data.
"""

__version__ = "0.1.0"

from .decision import (
    ConstraintSystem,
    DecisionResult,
    DecisionStats,
    InternalConsistencyError,
    InvalidInput,
    constraint_violation,
    decide,
)
from .geometry import (
    AffineMap,
    CapacityError,
    HomoPoint,
    HullDeque,
    LogCorrupt,
    OpLog,
    SingularMap,
)
from .oracle import (
    LinearSystem,
    OracleResult,
    TooLarge,
    fm_feasible,
    from_constraint_system,
    oracle_optimum,
)
from .regression import (
    FitProblem,
    FitResult,
    LevelCapExceeded,
    ShapeInfeasible,
    encode,
    fit,
    greedy_convex,
    preset,
    residual,
)

__all__ = [
    "AffineMap",
    "CapacityError",
    "ConstraintSystem",
    "DecisionResult",
    "DecisionStats",
    "FitProblem",
    "FitResult",
    "HomoPoint",
    "HullDeque",
    "InternalConsistencyError",
    "InvalidInput",
    "LevelCapExceeded",
    "LinearSystem",
    "LogCorrupt",
    "OpLog",
    "OracleResult",
    "ShapeInfeasible",
    "SingularMap",
    "TooLarge",
    "constraint_violation",
    "decide",
    "encode",
    "fit",
    "fm_feasible",
    "from_constraint_system",
    "greedy_convex",
    "oracle_optimum",
    "preset",
    "residual",
    "__version__",
]
