from src.sets.set_expr import (
    AffineOutputMap,
    Box,
    Complement,
    Intersection,
    MonotoneOutputMap,
    OutputForm,
    Polyhedron,
    Product,
    SetExpr,
    complement_of,
    set_contains,
    set_margin,
)
from src.sets.calculus import (
    minkowski_diff,
    minkowski_sum,
    output_set_chain,
    output_set_condition,
    pontryagin_diff,
    project_x,
    sampled_projection,
)
from src.sets.cones import Cone, cone_feasible, tangent_cone
