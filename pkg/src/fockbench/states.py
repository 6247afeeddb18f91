"""Test-state families and the all-times uncertainty saturation certificate."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammainc

from .dynamics import TimeGrid, evolve_moments
from .errors import DimensionError, InsufficientDimensionError, InvalidGridError
from .fock_core import OperatorSet, eigen_residual, moments

log = logging.getLogger(__name__)

COHERENT_TAIL_MAX = 1e-10
SQUEEZED_TAIL_MAX = 1e-8
DEFAULT_TOL = 1e-8

SATURATING = "saturating"
CONSTANT = "constant-but-not-minimal"
OSCILLATING = "oscillating"


def coherent_tail_mass(alpha: complex, D: int) -> float:
    """Poisson weight of levels >= D, i.e. what truncation to D levels discards."""
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    return float(gammainc(D, lam))


def coherent_amplitudes(alpha: complex, D: int) -> np.ndarray:
    """Untruncated coherent-state amplitudes for levels 0..D-1 (not renormalized)."""
    alpha = complex(alpha)
    c = np.empty(D, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, D):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def coherent_state(alpha: complex, D: int) -> np.ndarray:
    if D < 1:
        raise DimensionError(f"dimension must be positive, got {D}")
    tail = coherent_tail_mass(alpha, D)
    if tail >= COHERENT_TAIL_MAX:
        raise InsufficientDimensionError(
            f"coherent state alpha={alpha} needs more than {D} levels (discarded mass {tail:.3e})",
            tail_mass=tail,
        )
    c = coherent_amplitudes(alpha, D)
    return c / np.linalg.norm(c)


def fock_state(n: int, D: int) -> np.ndarray:
    if not 0 <= n < D:
        raise DimensionError(f"Fock level {n} is outside a {D}-level basis")
    psi = np.zeros(D, dtype=complex)
    psi[n] = 1.0
    return psi


def squeezed_vacuum(r: float, D: int) -> np.ndarray:
    """Squeezed vacuum with var_x scaled by exp(-2r) and var_p by exp(2r)."""
    c = np.zeros(D, dtype=complex)
    c[0] = 1.0 / np.sqrt(np.cosh(r))
    th = -np.tanh(r)
    for n in range(2, D, 2):
        c[n] = c[n - 2] * th * np.sqrt((n - 1) / n)
    tail = max(1.0 - float(np.sum(np.abs(c) ** 2)), 0.0)
    if tail >= SQUEEZED_TAIL_MAX:
        raise InsufficientDimensionError(
            f"squeezed vacuum r={r} needs more than {D} levels (discarded mass {tail:.3e})",
            tail_mass=tail,
        )
    return c / np.linalg.norm(c)


def random_state(D: int, seed: int) -> np.ndarray:
    """Normalized vector of i.i.d. standard complex Gaussian amplitudes."""
    if D < 2:
        raise DimensionError(f"dimension must be >= 2, got {D}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(D) + 1j * rng.standard_normal(D)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CertificationReport:
    max_violation: float
    min_product: float
    max_product: float
    dL0: float
    K0: float
    dH: float
    residual: float
    verdict: str
    tol: float
    theorem_consistent: bool

    def to_dict(self) -> dict:
        return asdict(self)


def certify(state, ops: OperatorSet, grid: TimeGrid | None = None, tol: float = DEFAULT_TOL):
    """Check whether dx*dp stays at hbar/2 over a full period of free evolution."""
    params = ops.params
    if grid is None:
        grid = TimeGrid.one_period(params)
    if grid.span < params.period * (1.0 - 1e-12):
        raise InvalidGridError(f"grid spans {grid.span}, shorter than one period {params.period}")

    m0 = moments(state, ops)
    residual = eigen_residual(state, ops)
    mt = evolve_moments(m0, params, grid.times)
    products = np.sqrt(np.clip(mt.var_x, 0, None) * np.clip(mt.var_p, 0, None))
    half_hbar = 0.5 * params.hbar
    max_violation = float(np.max(np.abs(products - half_hbar)))

    if max_violation <= tol:
        verdict = SATURATING
    elif abs(m0.dL) <= tol and abs(m0.K) <= tol and residual > tol:
        verdict = CONSTANT
    else:
        verdict = OSCILLATING

    consistent = not (verdict == SATURATING and residual > tol)
    if not consistent:
        log.warning(
            "saturating state with eigen-residual %.3e > tol %.1e: counterexample candidate",
            residual,
            tol,
        )
    report = CertificationReport(
        max_violation=max_violation,
        min_product=float(products.min()),
        max_product=float(products.max()),
        dL0=m0.dL,
        K0=m0.K,
        dH=m0.dH,
        residual=residual,
        verdict=verdict,
        tol=tol,
        theorem_consistent=consistent,
    )
    return report
