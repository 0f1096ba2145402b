"""Chebyshev collocation with a posteriori certificates for periodic linear ODEs and DDEs."""

__version__ = "0.1.0"

from .cheb import (
    ChebCoeffs,
    ChebGrid,
    ChebPoly,
    adaptive_sup_norm,
    bary_eval,
    cheb_coeffs,
    cheb_values,
    collocation_points,
    diff_matrix,
    little_l_N,
    little_l_N_norm,
    sup_norm_bound,
)
from .certify import (
    Certification,
    EllipseData,
    RegularityEllipse,
    bauer_fike_matrix,
    certify,
    cond_vhat,
    eps_sequence,
    gamma_matrix,
    nu_table,
)
from .errors import (
    Diverged,
    EigFailure,
    FloqcertError,
    NonConverged,
    NonResolvedWarning,
    NotDiagonalizable,
    SingularGamma,
    SingularSystem,
    Unverifiable,
)
from .fundamental import FundamentalBound, apriori_bound, bootstrap_bound
from .h1 import h1_bound_from_sup, h1_norm, normalized_cheb, pointwise_bound
from .ivp import (
    CertifiedSolution,
    LinearIVP,
    apost_certificate,
    build_system_matrices,
    constant_coeff_certificate,
    scalar_growth_constant,
    solve_ivp,
)
from .monodromy import (
    DdeSystem,
    MonodromyMatrix,
    build_monodromy,
    spectral_radius,
    step_history,
    uhat_norm_bound,
)
