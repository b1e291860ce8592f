"""Gowers uniformity norms, Heisenberg nilmanifold coordinates, bracket
polynomials and cocycle experiments."""

from .functions import (
    CyclicFunction,
    IntervalFunction,
    PhasePolynomial,
    e,
    embed_zero_extend,
    mult_derivative,
    mult_derivative_interval,
    phase_poly_function,
)
from .gowers import (
    InternalInvariantError,
    NormResult,
    WitnessReport,
    WorkBudgetExceeded,
    correlate,
    cyclic_norm,
    gowers_norm_cyclic,
    gowers_norm_interval,
    gowers_norm_recursive,
    gowers_norm_sampled,
    u2_inverse_witness,
    u2_norm_fft,
)
from .nilpotent import H3Element, PetalElement, TildeElement, h3_mul, h3_reduce, tilde_mul, tilde_reduce
from .nilsequence import bi_nilchar, bracket_linear_char, heisenberg_nilchar, semidirect_nilchar, vector_nilchar
from .cocycle import HFamily, QuadrupleStats, coboundary_family, integrate_cocycle, quadruple_scan, verify_cocycle
from .config import RunConfig

__version__ = "0.1.0"
