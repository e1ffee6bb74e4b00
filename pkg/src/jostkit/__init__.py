"""Jost functions, coefficient stripping and OPUC Schur machinery for Jacobi matrices."""
from .errors import *  # noqa: F401,F403
from .forward import (
    BoundState,
    Envelope,
    Free,
    GCState,
    JacobiParams,
    bound_states,
    boundary_identity_check,
    gc_step,
    jost_from_finite,
    jost_function,
    jost_solution,
    jost_tail_limit,
    m_continued_fraction,
    m_from_jost,
    orthonormal_polynomials,
    perturbation_determinant,
    sturm_count,
    wronskian,
)
from .inverse import (
    MFunction,
    SpectralData,
    StripState,
    canonical_weight,
    canonicity_check,
    decay_rate_estimate,
    m_evaluate,
    m_reflection_extend,
    measure_from_jost,
    normalization_check,
    recover_jacobi,
    strip_once,
)
from .numerics import (
    CircleGrid,
    TaylorSeries,
    ToleranceConfig,
    coefficients_from_grid,
    find_real_zeros,
    negative_mode_fraction,
    project_plus,
    radius_estimate,
    seminorm_triple,
    unit_circle_quadrature,
)
from .opuc import (
    SchurEvaluator,
    SzegoPair,
    VerblunskySeq,
    caratheodory_from_schur,
    dinv_update,
    relative_szego,
    schur_forward,
    schur_inverse,
    szego_function,
    szego_map_identity_check,
    szego_recursion,
    verblunsky_decay_check,
)

__version__ = "0.1.0"
