"""Truncated Fock-space harmonic oscillator toolkit.

Certifies all-times uncertainty saturation, minimizes the energy difference dH
variationally, and runs the Brownian-motion purity sieve.
"""

from .dynamics import TimeGrid, delta_L_t, evolve_moments, uncertainty_product_sq, unitary_evolve
from .errors import (
    ConfigurationError,
    DimensionError,
    FockbenchError,
    InconsistentMomentsError,
    InsufficientDimensionError,
    IntegrationDivergedError,
    InvalidGridError,
    NegativityWarning,
    NormalizationError,
    OptimizationFailure,
    TruncationWarning,
)
from .fock_core import (
    NATURAL,
    MomentSet,
    OperatorSet,
    OscillatorParams,
    build_operators,
    eigen_residual,
    fidelity,
    moments,
    projector,
    purity,
    tail_mass,
)
from .kernels import BACKEND
from .qbm import (
    QBMParams,
    SieveReport,
    integrate,
    master_rhs,
    period_averaged_slope,
    purity_rate_estimate,
    purity_rate_exact,
    sieve_experiment,
    validity_check,
)
from .sieve import OptimizationResult, OptimizerConfig, delta_H_objective, minimize_delta_H, objective_gradient
from .states import CertificationReport, certify, coherent_state, fock_state, random_state, squeezed_vacuum

__version__ = "0.1.0"
