"""Extreme networks over finite boundary sets and their deformations.

Minimal spanning trees, Steiner minimal trees and minimal fillings, with
tools for tracking how the set of optimal network types evolves along a
one-parameter motion of the boundary.
"""
from .errors import GuardError, SingularityError, StructuralError, XnetError
from .fillings import (
    MultiCyclicOrder,
    WeightedTree,
    enumerate_multi_tours,
    eremin_check,
    is_generalized_filling,
    is_irreducible,
    is_multi_tour,
    mf,
    mpf,
    multi_perimeter,
    tree_path_weight,
)
from .functionals import (
    EdgeFunctional,
    enumerate_spanning_trees,
    eval_functional,
    family_extrema,
    kruskal,
    mst,
)
from .metric import EUCLIDEAN, MetricKind, SemimetricVector, pullback, rho_p, validate_semimetric
from .steiner import (
    classify_stability,
    hessian_certificate,
    interior_map_probe,
    smt,
    solve_mpn,
    validate_trace_angles,
)
from .tolerances import DEFAULT, Tolerances
from .topology import (
    BoundedTree,
    Network,
    binary_type,
    canonical_form,
    enumerate_binary_trees,
    isomorphic,
    moustaches,
    quotient,
    regular_components,
    trace,
)
from .variation import (
    SegmentDeformation,
    fd_oracle,
    length_derivatives_1param,
    length_partials_2param,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
