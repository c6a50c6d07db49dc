"""Explicit charts for the Grassmann, non-compact Stiefel and fixed-rank matrix manifolds."""
from .errors import (
    DimensionMismatch,
    LineSearchFailed,
    MatbundleError,
    OutOfChartDomain,
    RankDeficient,
    RankMismatch,
    SingularFactor,
)
from .fixed_rank import (
    FixedRankChart,
    FixedRankCoords,
    FixedRankTangent,
    RankRPoint,
    make_chart,
    rho_project,
)
from .grassmann import GrassmannChart, Subspace, chart_center, col
from .numerics import (
    RankDecision,
    factor_rank_r,
    numerical_rank,
    orthogonal_complement,
    pseudo_inverse,
    random_full_rank,
    random_rank_r,
    read_matrix,
    truncated_svd,
    write_matrix,
)
from .optimize import (
    Objective,
    OptimizerConfig,
    OptimizerTrace,
    coordinate_gradient,
    distance_objective,
    minimize,
    random_start,
    recenter,
)
from .stiefel import StiefelChart, StiefelCoords, StiefelTangent, bundle_project

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
