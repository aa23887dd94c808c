"""Numerical toolkit for basins of attraction at infinity of complex polynomials."""

from .basin import (
    ConnectivityVerdict,
    EscapeGrid,
    EscapeResult,
    Verdict,
    alpha,
    complement_radius_estimate,
    connectivity,
    escape_radius,
    escapes,
    rasterize,
)
from .bottcher import (
    BrennanEstimate,
    DiskPartition,
    F_derivative_abs,
    GreenValue,
    brennan_integral,
    green,
    koebe_bounds,
    log_phi_deriv_ratio,
    partition_point,
)
from .errors import (
    BracketFailure,
    BudgetExceeded,
    ConvergenceFailure,
    DegenerateDenominator,
    IndexOutOfRange,
    NotInBasin,
    NotMonic,
    PolybasinError,
    ValidationError,
)
from .orbit import (
    OrbitFrontier,
    OrbitNode,
    SeriesReport,
    base_point,
    expand,
    one_step_factor,
    one_step_factor_closed_form,
    series,
    two_step_ratio,
    u_delta_estimate,
    v_estimate,
)
from .poly import AffineMap, Polynomial, critical_points, delta_condition, derivative, evaluate, iterate, monic_normalize
from .roots import RootSet, nth_roots, preimages, solve

__version__ = "0.1.0"
