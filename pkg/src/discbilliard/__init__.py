"""Hard-disc billiards in polygons.

A disc of radius ``r`` moving in a polygon is equivalent to a point moving in
the polygon eroded by ``r``.  At reflex corners the eroded boundary picks up
dispersing circular arcs, which make the dynamics hyperbolic on a set of
positive measure.
"""
from .analysis import (
    CurvatureState,
    HyperbolicityReport,
    continued_fraction_value,
    ensemble_report,
    lyapunov_estimate,
    propagate_curvature,
    seidel_stern_check,
)
from .dynamics import (
    CollisionEvent,
    PhaseState,
    TrajectoryRecord,
    next_collision,
    reflect,
    sample_initial,
    sample_on_arcs,
    simulate,
    step,
    unfold,
)
from .geometry import (
    Polygon,
    interior_angles,
    polygon_metric_d,
    rationality_report,
    reflexify,
    validate_polygon,
)
from .kernel import BACKEND as KERNEL_BACKEND
from .table import (
    DispersingArc,
    EquivalentTable,
    Wall,
    build_equivalent_table,
    compute_rk,
    compute_rP,
    flatten_arcs,
)

__version__ = "0.1.0"
