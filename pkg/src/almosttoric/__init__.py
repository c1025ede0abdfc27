"""Exact calculus on almost toric base diagrams of symplectic four-manifolds."""

from .lattice import (
    AbelianGroup,
    AffineMap,
    MonodromySpec,
    SingularContinuedFraction,
    UnimodularMatrix,
    affine_from_topological,
    cf_eval,
    cf_expand,
    cross,
    monodromy_matrix,
    smith_normal_form,
)
from .diagram import (
    BaseDiagram,
    DiagramFormatError,
    Edge,
    Node,
    REDUCED,
    REGULAR,
    ValidationReport,
    apply_affine,
    identified,
    parse,
    paste,
    polygon_diagram,
    serialize,
    transport,
    transport_class,
    validate,
)
from .invariants import (
    InvariantSummary,
    boundary_torus_self_intersection,
    c1_pairing,
    edge_area,
    edge_intersection_matrix,
    edge_self_intersection,
    euler_characteristic,
    first_homology,
    summarize,
    symplectic_volume,
)

__version__ = "0.1.0"
