"""quadround: entropic relaxation and randomized rounding for quadratic maps.

Given k positive definite quadratic forms on R^n and a point a of the convex
hull of the image of the associated map (normalized to sum 1), the library
solves the concave relaxation max sum_i a_i ln <Q_i, X> over the spectahedron
by Frank-Wolfe, rounds the solution to actual image points by pushing
Gaussian vectors through the matrix square root of the solution, and
certifies the relative-entropy distance: below 4.8 + gap for a single image
point, below 15/sqrt(m) + gap for a convex combination of at most m image
points. A verification layer checks every supporting constant by quadrature
and seeded Monte Carlo.
"""

from .bounds import (BoundReport, constants, gauss_log_moments, laplace_tail_upper,
                     log_gamma, phi, phi_expression, rank_m_abs_log, rank_m_beta)
from .config import DEFAULTS, Tolerances
from .entropic_sdp import SdpSolution, gradient, objective, rescale_to_unit, solve
from .linalg import (LinalgError, NotPositiveDefinite, SymMatrix, as_sym,
                     cholesky, frobenius_inner, inverse_spd, outer, sqrt_psd,
                     sym_eigen)
from .quadmap import (PreconditionedMap, QuadraticMap, SimplexVector,
                      SpectahedronPoint, evaluate, hull_point_from_combination,
                      hull_point_from_witness, instance_from_json,
                      instance_to_json, kl_divergence, load_instance,
                      pinsker_lower_bound, precondition)
from .rounding import (GaussianSampler, RoundingOutcome, accept_rank_one,
                       decompose_rank_m, round_rank_m, round_rank_one,
                       sample_gaussian)
from .verify import (DiagonalForm, McEstimate, SandwichReport,
                     SandwichViolation, check_sandwich, extremality_probe,
                     mc_abs_log_moment, mc_rank_m_abs_log, mc_tail,
                     sphere_max_oracle)

__version__ = "0.1.0"
