"""Fast Fourier extension on two-dimensional domains.

A function sampled on the grid points of a domain inside a periodic box is
approximated by a Fourier series on the box. The least-squares problem is
solved by splitting off the well-conditioned part with the projection
``A A^* - I`` and handling the remaining low-rank part with a randomized
solver.
"""
from .domain import (
    BUILTIN_DOMAINS,
    Domain,
    DomainMask,
    EmptyMaskError,
    MaskFormatError,
    builtin_domain,
    load_mask,
    rasterize,
    save_mask,
)
from .fourier_ops import DenseCapError, FrameOperator, materialize_A_dense, materialize_TBT
from .grid import GridSpec, build_freq_window, build_spatial_grid
from .solver import (
    PlungeRankError,
    SolveReport,
    SolverConfig,
    error_metrics,
    estimate_plunge_rank,
    evaluate_approximation,
    solve_algorithm1,
    solve_dense_tsvd,
)
from .spectral import SpectralProfile, plunge_bound_check, prolate_decomposition, singular_profile
from .topology import boundary_count, distance_layers, verify_layer_bound

__version__ = "0.1.0"
