"""Ollivier-type curvature for weighted graph Laplacians."""

from .errors import CurvelabError
from .graph import (
    BirthDeathChain,
    SphereDecomposition,
    WeightedGraph,
    build_graph,
    degree,
    degree_max,
    distances,
    laplacian_apply,
    sphere_decomposition,
    to_graph,
)
from .generators import generate
from .io import read_graph, write_graph
from .transport import Coupling, FiniteMeasure, duality_gap, wasserstein, wasserstein_dual
from .curvature import (
    CurvatureReport,
    EpsCurvature,
    bdc_average_identity,
    bdc_curvature,
    intrinsic_curvature_bdc,
    no_cycle_formula,
    ollivier_bruteforce,
    ollivier_combinatorial,
    ollivier_dual,
    ollivier_eps,
    ollivier_transport,
    ric_lower_bound,
    sphere_curvature,
)

__version__ = "0.1.0"
