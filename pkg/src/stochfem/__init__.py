"""Finite elements for elliptic PDEs on randomly perturbed surfaces and
bulk-surface domains, with Monte-Carlo estimation of the expected solution.

The random geometry is a height-field perturbation of a fixed reference
surface (unit sphere or unit circle/disk); every problem is pulled back onto
the reference domain, where it becomes a PDE with random coefficients that a
standard P1 method discretises on a fixed mesh hierarchy.
"""
from .errors import (
    DegeneratePoint,
    NoConvergence,
    OutOfBand,
    OutsideTriangle,
    SingularGeometry,
    StochFemError,
    UsageError,
)
from .experiments import (
    ConvergenceTable,
    Schedule,
    exact_bulk_solution,
    exact_surface_solution,
    expected_bulk_solution,
    expected_surface_solution,
    manufactured_bulk_loads,
    manufactured_robin_trace,
    manufactured_surface_load,
    reference_expected_v,
    run_convergence,
)
from .fem import (
    FemSolution,
    SparseSystem,
    assemble_coupled,
    assemble_surface,
    error_norms,
    solve_cg,
)
from .geometry import (
    UNIT_CIRCLE,
    UNIT_SPHERE,
    closest_point,
    fermi,
    lift_area_ratio,
    outward_normal,
    tangent_projector,
    weingarten,
)
from .meshing import (
    BulkMesh,
    SurfaceMesh,
    build_disk_mesh,
    build_icosphere,
    bulk_lift,
    mesh_size,
    quasi_uniformity_ratio,
)
from .pullback import (
    bulk_coefficients,
    conormal_factor,
    pulled_normal,
    surface_coefficients,
    weingarten_pullback,
)
from .random_field import (
    BoundaryHeightSample,
    GeometrySample,
    Problem,
    SolutionRandoms,
    SurfaceHeightSample,
    blending,
    bulk_map,
    draw_sample,
    eval_height,
)

__version__ = "0.1.0"
