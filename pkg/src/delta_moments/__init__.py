"""Moments of Delta_a(x), the error term of sum_{n<=x} sigma_a(n) for -1/2 < a < 0."""

from .errors import (CapacityError, DeltaMomentsError, DomainError, FormatError, InsufficientData,
                     NonConvergent, OrderError, PoleAtOne, RangeError, UnsupportedBoundary)
from .special_values import ZetaConstants, zeta_constants, zeta_real
from .sigma_delta import (DeltaEvaluator, SigmaTable, build_sigma_table, cached_table, delta_a,
                          load_table, save_table, sigma_direct)
from .sqrt_relations import (SignPattern, count_near_solutions, enumerate_solutions,
                             kernel_decompose, min_nonzero_gap, sqrt_sum_is_zero)
from .exponents import (B_k_finite, C_k, CkConvention, ExponentBundle, auto_cutoff,
                        corollary_delta, exponent_bundle, moment_exponent, s_kl)
from .voronoi import R_a1, VoronoiParams, residual_second_moment, voronoi_params
from .moments import (FitResult, MomentRecord, Window, fit_exponent, integrate_delta_power,
                      moment_report)

__version__ = "0.1.0"
