"""P1 finite elements for Green functions of elliptic systems with mixed boundary conditions."""

__version__ = "0.1.0"

from .errors import MixedGreenError
from .geometry import Domain, LocalDomain, load_domain, local_domain, parse_domain, rectangle, regular_polygon
from .green import (GreenField, GreenTable, approximate_green, evaluate_green, fundamental_solution,
                    green_fields, neumann_green, representation_solve)
from .meshing import Mesh, refine_toward, triangulate, uniform_refine
from .mixed_solver import FemSolution, solve_mixed
from .neumann_solver import compute_kernel, solve_neumann
from .operators import assemble, assemble_load, make_coefficients
