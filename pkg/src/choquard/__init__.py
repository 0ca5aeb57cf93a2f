"""Numerical laboratory for the doubly critical Choquard equation on radial functions."""

from .extremals import (
    ExtremalFamily,
    Kind,
    SharpConstants,
    normalize_amplitudes,
    sample_extremal,
    sharp_constant_S1,
    sharp_constant_S2,
    sharp_constants,
)
from .functional import (
    EnergyBreakdown,
    NonlinearityParams,
    RayProfile,
    F_eval,
    derivative_action,
    energy,
    h1_gradient,
    ray_max,
    ray_profile,
)
from .grid import (
    GridMismatchError,
    GridSpec,
    RadialFunction,
    RadialGrid,
    build_grid,
    h1_products,
    integrate,
    solve_helmholtz,
)
from .riesz import RieszKernel, build_kernel, convolve, hls_pairing
from .solver import SolveResult, SolverConfig, make_endpoint, mpa_solve, nehari_residual, pohozaev_residual
from .threshold import (
    ThresholdReport,
    Verdict,
    brezis_lieb_gap,
    compute_threshold,
    dimension_gate,
    path_energy_sweep,
    verify_theorem,
)

__version__ = "0.1.0"
