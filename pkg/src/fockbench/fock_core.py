"""Truncated Fock-space representation of a single harmonic oscillator.

States are plain numpy arrays: a 1-D complex vector is a pure state, a 2-D
complex matrix is a density matrix. Both live on the span of the first ``D``
number states.

The second-moment operators ``x2`` and ``p2`` are built from ladder products
with the canonical commutator, ``x2 = (sigma^2/2)(a^2 + a_dag^2 + 2N + 1)``,
instead of multiplying the truncated ``x`` matrix by itself. For any state
supported on the first ``D`` levels this gives the exact (untruncated) moment,
whereas ``x @ x`` is wrong in its last diagonal entry.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NormalizationError, TruncationWarning

TAIL_WARN = 1e-8
PURE_NORM_TOL = 1e-12
MIXED_TOL = 1e-10


@dataclass(frozen=True)
class OscillatorParams:
    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega", "hbar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def sigma(self) -> float:
        """Oscillator length scale sqrt(hbar / (m omega))."""
        return float(np.sqrt(self.hbar / (self.mass * self.omega)))

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    def to_dict(self) -> dict:
        return {"mass": self.mass, "omega": self.omega, "hbar": self.hbar}


NATURAL = OscillatorParams()


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Dense operator matrices on a ``dim``-level truncated basis."""

    dim: int
    params: OscillatorParams
    a: np.ndarray
    a_dag: np.ndarray
    N: np.ndarray
    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    H: np.ndarray
    T: np.ndarray
    V: np.ndarray
    L: np.ndarray
    xp_sym: np.ndarray = field(repr=False)

    def commutator_a_adag(self) -> np.ndarray:
        return self.a @ self.a_dag - self.a_dag @ self.a

    def to_dict(self) -> dict:
        """Row-major ``[re, im]`` dump of every matrix, for golden-file tests."""

        def pairs(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        out = {"dim": self.dim, "params": self.params.to_dict()}
        for name in ("a", "a_dag", "N", "x", "p", "H", "T", "V", "L"):
            out[name] = pairs(getattr(self, name))
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def build_operators(D: int, params: OscillatorParams = NATURAL) -> OperatorSet:
    if int(D) != D or D < 2:
        raise DimensionError(f"truncation dimension must be an integer >= 2, got {D!r}")
    D = int(D)
    m, w, hbar = params.mass, params.omega, params.hbar
    sigma = params.sigma
    n = np.arange(D, dtype=float)

    a = np.diag(np.sqrt(n[1:]), 1).astype(complex)
    a_dag = a.conj().T.copy()
    N = np.diag(n).astype(complex)
    ident = np.eye(D, dtype=complex)
    a_sq = a @ a
    a_dag_sq = a_dag @ a_dag

    x = (sigma / np.sqrt(2.0)) * (a + a_dag)
    p = (1j * hbar / (sigma * np.sqrt(2.0))) * (a_dag - a)
    x2 = (sigma**2 / 2.0) * (a_sq + a_dag_sq + 2.0 * N + ident)
    p2 = (hbar**2 / (2.0 * sigma**2)) * (2.0 * N + ident - a_sq - a_dag_sq)
    # (xp + px)/2 reduces to i*hbar*(a_dag^2 - a^2)/2 with no truncation error
    xp_sym = 0.5j * hbar * (a_dag_sq - a_sq)

    H = hbar * w * (N + 0.5 * ident)
    T = p2 / (2.0 * m)
    V = 0.5 * m * w**2 * x2
    L = T - V

    mats = [_readonly(np.ascontiguousarray(M)) for M in (a, a_dag, N, x, p, x2, p2, H, T, V, L, xp_sym)]
    return OperatorSet(D, params, *mats)


def tail_mass(state: np.ndarray) -> float:
    """Population of the highest retained level."""
    state = np.asarray(state)
    if state.ndim == 1:
        return float(abs(state[-1]) ** 2)
    return float(state[-1, -1].real)


def _warn_tail(state: np.ndarray, where: str) -> float:
    tm = tail_mass(state)
    if tm > TAIL_WARN:
        warnings.warn(
            f"{where}: top-level population {tm:.3e} exceeds {TAIL_WARN:g}",
            TruncationWarning,
            stacklevel=3,
        )
    return tm


def check_state(state, dim: int | None = None) -> np.ndarray:
    """Validate a pure state or density matrix and return it as a complex array."""
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        if dim is not None and arr.shape[0] != dim:
            raise DimensionError(f"state has dimension {arr.shape[0]}, operators have {dim}")
        norm2 = float(np.vdot(arr, arr).real)
        if abs(norm2 - 1.0) > PURE_NORM_TOL:
            raise NormalizationError(f"state norm^2 = {norm2!r}, expected 1")
        return arr
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        if dim is not None and arr.shape[0] != dim:
            raise DimensionError(f"density matrix is {arr.shape[0]}x{arr.shape[0]}, operators have {dim}")
        if np.max(np.abs(arr - arr.conj().T)) > MIXED_TOL:
            raise NormalizationError("density matrix is not Hermitian")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > MIXED_TOL:
            raise NormalizationError(f"density matrix trace = {tr!r}, expected 1")
        return arr
    raise DimensionError(f"expected a vector or square matrix, got shape {arr.shape}")


def expect(state: np.ndarray, A: np.ndarray) -> complex:
    if state.ndim == 1:
        return complex(np.vdot(state, A @ state))
    return complex(np.einsum("ij,ji->", state, A))


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class MomentSet:
    """First and second moments of position and momentum.

    ``n_mean`` is the expectation of the number operator; it feeds the ladder
    route for the energy difference (``dH_ladder``) used as a cross-check.
    """

    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    K: float
    params: OscillatorParams = NATURAL
    n_mean: float | None = None
    tail_mass: float = 0.0

    @property
    def dT(self) -> float:
        return self.var_p / (2.0 * self.params.mass)

    @property
    def dV(self) -> float:
        p = self.params
        return 0.5 * p.mass * p.omega**2 * self.var_x

    @property
    def dH(self) -> float:
        return self.dT + self.dV

    @property
    def dL(self) -> float:
        return self.dT - self.dV

    @property
    def alpha(self) -> complex:
        s, hbar = self.params.sigma, self.params.hbar
        return complex(self.mean_x / (np.sqrt(2.0) * s), self.mean_p * s / (np.sqrt(2.0) * hbar))

    @property
    def Ebar(self) -> float:
        p = self.params
        return p.hbar * p.omega * abs(self.alpha) ** 2

    @property
    def dH_ladder(self) -> float:
        if self.n_mean is None:
            raise ValueError("n_mean not available for these moments")
        p = self.params
        return p.hbar * p.omega * (self.n_mean + 0.5 - abs(self.alpha) ** 2)

    @property
    def uncertainty_product(self) -> float:
        return float(np.sqrt(max(self.var_x, 0.0) * max(self.var_p, 0.0)))

    def as_dict(self) -> dict:
        return {
            "mean_x": self.mean_x,
            "mean_p": self.mean_p,
            "var_x": self.var_x,
            "var_p": self.var_p,
            "K": self.K,
            "dH": self.dH,
            "dL": self.dL,
        }


def moments(state, ops: OperatorSet) -> MomentSet:
    st = check_state(state, ops.dim)
    tm = _warn_tail(st, "moments")
    mx = expect(st, ops.x).real
    mp = expect(st, ops.p).real
    vx = expect(st, ops.x2).real - mx**2
    vp = expect(st, ops.p2).real - mp**2
    K = expect(st, ops.xp_sym).real - mx * mp
    n_mean = expect(st, ops.N).real
    return MomentSet(mx, mp, vx, vp, K, ops.params, n_mean=n_mean, tail_mass=tm)


def purity(rho) -> float:
    rho = check_state(rho)
    if rho.ndim == 1:
        return 1.0
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


def eigen_residual(state, ops: OperatorSet) -> float:
    """Squared norm of ``(a - <a>) psi``; zero exactly for annihilation eigenstates."""
    psi = check_state(state, ops.dim)
    if psi.ndim != 1:
        raise DimensionError("eigen_residual needs a pure state vector")
    _warn_tail(psi, "eigen_residual")
    a_psi = ops.a @ psi
    alpha = np.vdot(psi, a_psi)
    r = a_psi - alpha * psi
    return float(np.vdot(r, r).real)


def fidelity(phi, psi) -> float:
    """|<phi|psi>|^2, insensitive to global phase."""
    return float(min(abs(np.vdot(np.asarray(phi), np.asarray(psi))) ** 2, 1.0))
