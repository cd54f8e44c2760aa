"""fraclobc: desk-scale laboratory for the fractional viscous
Hamilton-Jacobi equation u_t + (-Delta)^s u = |Du|^p with exterior-zero
Dirichlet data on an interval, and for the loss-of-boundary-conditions
phenomenon it exhibits.
"""

__version__ = "0.1.0"

from .core import (
    Domain,
    Grid,
    GridFunction,
    dist,
    extend_to_grid,
    linf_seminorm_holder,
    make_grid,
    shrink,
    sup_norm,
)
from .fraclap import (
    FracLapOperator,
    apply,
    apply_symmetric_form,
    assemble,
    getoor_constant,
    normalization_constant,
    quad_pointwise,
)

__all__ = [
    "Domain",
    "Grid",
    "GridFunction",
    "dist",
    "extend_to_grid",
    "linf_seminorm_holder",
    "make_grid",
    "shrink",
    "sup_norm",
    "FracLapOperator",
    "apply",
    "apply_symmetric_form",
    "assemble",
    "getoor_constant",
    "normalization_constant",
    "quad_pointwise",
]
