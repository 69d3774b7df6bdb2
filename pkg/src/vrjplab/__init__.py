"""Numerical laboratory for linearly reinforced jump processes on hierarchical graphs.

Core pieces: the weighted hierarchical box (``lattice``), block coarse-graining
(``coarse``), exact sampling of the random potential (``betafield``), Green
functions and pinned fields (``greens``), closed-form bounds (``bounds``),
walk and electrical-network diagnostics (``walk``), and a seeded experiment
harness with CLI and HTTP front ends (``experiments``, ``cli``, ``service``).
"""

__version__ = "0.1.0"

from .betafield import (
    BetaSample,
    beta_from_u,
    gibbs_chain,
    laplace_check,
    laplace_transform_theory,
    load_beta_sample,
    sample_beta_gibbs,
    sample_beta_sequential,
    save_beta_sample,
)
from .coarse import (
    CoarseGraph,
    Partition,
    block_average,
    coarsen,
    singleton_partition,
    standard_partition,
    twopoint_partition,
)
from .errors import (
    CapacityError,
    NotPositiveDefiniteError,
    NumericalError,
    PartitionError,
    VrjplabError,
)
from .graphs import ArrayGraph
from .greens import (
    GreenView,
    SchrodingerMatrix,
    UField,
    assemble_H,
    fractional_moment,
    green,
    ufield_from_sample,
    ufield_pinned,
)
from .lattice import (
    HierGraph,
    LatticeParams,
    boundary_weight,
    build_finite_box,
    edge_weight,
    hier_distance,
    rho_for_dimension,
    spectral_dimension,
)
from .walk import (
    ConductanceNetwork,
    Trajectory,
    conductances,
    effective_conductance,
    effective_resistance,
    escape_probability,
    simulate_vrjp,
    skeleton_walk,
)

__all__ = [
    "__version__",
    "ArrayGraph",
    "BetaSample",
    "CapacityError",
    "CoarseGraph",
    "ConductanceNetwork",
    "GreenView",
    "HierGraph",
    "LatticeParams",
    "NotPositiveDefiniteError",
    "NumericalError",
    "Partition",
    "PartitionError",
    "SchrodingerMatrix",
    "Trajectory",
    "UField",
    "VrjplabError",
    "assemble_H",
    "beta_from_u",
    "block_average",
    "boundary_weight",
    "build_finite_box",
    "coarsen",
    "conductances",
    "edge_weight",
    "effective_conductance",
    "effective_resistance",
    "escape_probability",
    "fractional_moment",
    "gibbs_chain",
    "green",
    "hier_distance",
    "laplace_check",
    "laplace_transform_theory",
    "load_beta_sample",
    "rho_for_dimension",
    "sample_beta_gibbs",
    "sample_beta_sequential",
    "save_beta_sample",
    "simulate_vrjp",
    "singleton_partition",
    "skeleton_walk",
    "spectral_dimension",
    "standard_partition",
    "twopoint_partition",
    "ufield_from_sample",
    "ufield_pinned",
]
