"""
Spectral estimation from generalized moments.

Given a bank of filters ``G(z) = (zI - A)^{-1} B``, a state covariance
``Sigma`` and a prior density ``Psi``, find a density
``Phi = W^{-1} Psi W^{-*}`` whose output covariance ``int G Phi G^*``
equals ``Sigma``, where ``W`` is the minimum-phase spectral factor of
``G^* Lambda G`` for a matrix parameter ``Lambda``.
"""

from .covext import (
    ARMAModel,
    CovextResult,
    CovSequence,
    MatrixPolynomial,
    arma_from_solution,
    covext_solve,
    covs_from_spectrum,
    extract_polynomial_factor,
    sample_covariances,
    toeplitz_assemble,
)
from .estimator import (
    EstimationOptions,
    EstimationResult,
    Status,
    TraceRecord,
    fixed_point_step,
    homotopy_density,
    homotopy_solve,
    maxent_solve,
    moment_residual,
    normalize_problem,
    omega,
    omega_tilde,
    phi_lambda,
)
from .exceptions import *  # noqa: F403
from .filter_bank import CircleGrid, FilterBank, covext_bank, evaluate, evaluate_grid, new_bank
from .moments import (
    RangeGammaBasis,
    SpectrumInput,
    feasibility,
    gamma,
    gamma_exact,
    project_range,
    range_basis,
)
from .riccati import (
    SpectralFactor,
    dare_residual,
    dare_stabilizing,
    eval_w,
    eval_w_inv,
    lambda_admissible,
    spectral_factor,
)

__version__ = "0.1.0"
