"""Variational minimization of the energy difference dH over normalized states.

Projected gradient descent on the complex unit sphere with a renormalization
retraction, Armijo backtracking and random restarts. Every minimizer is
compared against the coherent state built from its own ``<a>``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError, OptimizationFailure
from .fock_core import OperatorSet, build_operators, check_state, tail_mass
from .states import coherent_amplitudes, random_state

log = logging.getLogger(__name__)

ARMIJO = 1e-4
MAX_DOUBLINGS = 3
TAIL_LIMIT = 1e-8
STALL_TAIL_LIMIT = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_iters: int = 5000
    step: float = 0.05
    grad_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if not self.step > 0:
            raise ConfigurationError("step size must be positive")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be >= 0")
        if not self.grad_tol > 0:
            raise ConfigurationError("grad_tol must be positive")


@dataclass
class RestartOutcome:
    seed: int | None
    dH: float
    residual: float
    fidelity_to_coherent: float
    alpha: complex
    iterations: int
    converged: bool
    grad_norm: float
    tail_mass: float
    dim: int
    state: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dH": self.dH,
            "residual": self.residual,
            "fidelity_to_coherent": self.fidelity_to_coherent,
            "alpha": [self.alpha.real, self.alpha.imag],
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "tail_mass": self.tail_mass,
            "dim": self.dim,
        }


@dataclass
class OptimizationResult:
    state: np.ndarray = field(repr=False)
    dH_star: float
    residual: float
    fidelity_to_coherent: float
    iterations: int
    converged: bool
    dim: int
    restarts: list[RestartOutcome] = field(default_factory=list)

    def to_dict(self, hbar_omega: float = 1.0) -> dict:
        return {
            "dim": self.dim,
            "dH_star": self.dH_star,
            "gap": self.dH_star - 0.5 * hbar_omega,
            "residual": self.residual,
            "fidelity_to_coherent": self.fidelity_to_coherent,
            "iterations": self.iterations,
            "converged": self.converged,
            "restarts": [r.to_dict() for r in self.restarts],
        }


def _hw(ops: OperatorSet) -> float:
    return ops.params.hbar * ops.params.omega


def delta_H_objective(state, ops: OperatorSet) -> float:
    """hbar*omega * (<N> + 1/2 - |<a>|^2)."""
    psi = check_state(state, ops.dim)
    n_mean = np.vdot(psi, ops.N @ psi).real
    alpha = np.vdot(psi, ops.a @ psi)
    return float(_hw(ops) * (n_mean + 0.5 - abs(alpha) ** 2))


def _objective_unchecked(psi, ops):
    n_mean = np.vdot(psi, ops.N @ psi).real
    alpha = np.vdot(psi, ops.a @ psi)
    return _hw(ops) * (n_mean + 0.5 - abs(alpha) ** 2)


def _excess(psi, ops):
    # ||(a - <a>) psi||^2: same quantity as <N> - |<a>|^2 but without the cancellation
    a_psi = ops.a @ psi
    r = a_psi - np.vdot(psi, a_psi) * psi
    return float(np.vdot(r, r).real)


def _gradient_unchecked(psi, ops):
    a_psi = ops.a @ psi
    alpha = np.vdot(psi, a_psi)
    g = ops.N @ psi - np.conj(alpha) * a_psi - alpha * (ops.a_dag @ psi)
    g = g - np.vdot(psi, g).real * psi
    return 2.0 * _hw(ops) * g


def objective_gradient(state, ops: OperatorSet) -> np.ndarray:
    """Riemannian gradient of dH on the unit sphere, as a complex vector.

    Convention: for a tangent perturbation ``d``, ``dH(psi + eps*d)`` changes by
    ``eps * Re(vdot(G, d))``. The real and imaginary parts of ``G`` are therefore
    the partial derivatives with respect to the real and imaginary parts of the
    amplitudes of ``dH(psi / |psi|)``.
    """
    psi = check_state(state, ops.dim)
    return _gradient_unchecked(psi, ops)


def coherent_fidelity(psi: np.ndarray, alpha: complex | None = None, a: np.ndarray | None = None) -> float:
    """Overlap with the untruncated coherent state at ``alpha`` (default ``<a>``)."""
    if alpha is None:
        alpha = np.vdot(psi, a @ psi)
    ref = coherent_amplitudes(alpha, psi.shape[0])
    return float(min(abs(np.vdot(ref, psi)) ** 2, 1.0))


def _descend(psi, ops, cfg: OptimizerConfig):
    hw = _hw(ops)
    e = _excess(psi, ops)
    G = _gradient_unchecked(psi, ops)
    gn = float(np.linalg.norm(G))
    step = cfg.step
    it = 0
    converged = gn <= cfg.grad_tol
    while not converged and it < cfg.max_iters:
        t = step
        accepted = False
        while t > 1e-14:
            cand = psi - t * G
            cand /= np.linalg.norm(cand)
            ec = _excess(cand, ops)
            if hw * ec <= hw * e - ARMIJO * t * gn**2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        G_new = _gradient_unchecked(cand, ops)
        # Barzilai-Borwein trial step for the next iteration; backtracking keeps descent monotone
        s = cand - psi
        y = G_new - G
        sy = np.vdot(s, y).real
        step = float(np.vdot(s, s).real / sy) if sy > 0 else 2.0 * t
        step = min(max(step, 1e-3 * cfg.step), 1e3 * cfg.step)
        psi, e, G = cand, ec, G_new
        gn = float(np.linalg.norm(G))
        it += 1
        converged = gn <= cfg.grad_tol
    return psi, hw * (e + 0.5), it, converged, gn


def _finish(psi, f, it, conv, gn, seed, dim) -> RestartOutcome:
    D = psi.shape[0]
    a = np.diag(np.sqrt(np.arange(1, D, dtype=float)), 1)
    a_psi = a @ psi
    alpha = complex(np.vdot(psi, a_psi))
    resid_vec = a_psi - alpha * psi
    residual = float(np.vdot(resid_vec, resid_vec).real)
    fid = coherent_fidelity(psi, alpha)
    return RestartOutcome(seed, f, residual, fid, alpha, it, conv, gn, tail_mass(psi), dim, psi)


def _run_restarts(ops: OperatorSet, cfg: OptimizerConfig, init, escalate: bool) -> list[RestartOutcome]:
    seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.restarts).tolist()
    ops_cache = {ops.dim: ops}
    outcomes = []
    for k in range(cfg.restarts):
        if init is not None and k == 0:
            psi0, seed = check_state(init, ops.dim).copy(), None
        else:
            seed = int(seeds[k])
            psi0 = random_state(ops.dim, seed)
        cur = ops
        for doubling in range(MAX_DOUBLINGS + 1):
            psi, f, it, conv, gn = _descend(psi0, cur, cfg)
            tm = tail_mass(psi)
            # a run that stalls while still holding top-level population is truncation-limited too
            edge = tm > TAIL_LIMIT or (not conv and tm > STALL_TAIL_LIMIT)
            if not edge or not escalate or doubling == MAX_DOUBLINGS:
                break
            D2 = 2 * cur.dim
            log.warning(
                "restart %d hugs the truncation edge at D=%d (top-level mass %.2e); rerunning at D=%d",
                k,
                cur.dim,
                tm,
                D2,
            )
            if D2 not in ops_cache:
                ops_cache[D2] = build_operators(D2, ops.params)
            cur = ops_cache[D2]
            psi0 = np.concatenate([psi0, np.zeros(D2 - psi0.shape[0], complex)])
        outcome = _finish(psi, f, it, conv, gn, seed, cur.dim)
        outcome.dH = float(_objective_unchecked(psi, cur))
        if conv and outcome.residual > 1e-6:
            log.warning(
                "restart %d stopped at a stationary point with residual %.3e: counterexample candidate",
                k,
                outcome.residual,
            )
        if not conv:
            log.info("restart %d did not converge after %d iterations (|grad| = %.3e)", k, it, gn)
        outcomes.append(outcome)
    return outcomes


def minimize_delta_H(
    D: int,
    ops: OperatorSet,
    cfg: OptimizerConfig = OptimizerConfig(),
    init=None,
    escalate: bool = True,
) -> OptimizationResult:
    """Minimize dH over ``D``-level states with random restarts.

    A restart whose minimizer keeps more than 1e-8 population on the top level is
    treated as a truncation artifact and rerun from the same initial state at
    twice the dimension (``escalate=False`` disables this).
    """
    if D != ops.dim:
        raise DimensionError(f"D={D} does not match operator dimension {ops.dim}")
    outcomes = _run_restarts(ops, cfg, init, escalate)
    good = [o for o in outcomes if o.converged]
    best = min(good or outcomes, key=lambda o: o.dH)
    result = OptimizationResult(
        state=best.state,
        dH_star=best.dH,
        residual=best.residual,
        fidelity_to_coherent=best.fidelity_to_coherent,
        iterations=best.iterations,
        converged=best.converged,
        dim=best.dim,
        restarts=outcomes,
    )
    if not good:
        raise OptimizationFailure(f"none of {cfg.restarts} restarts converged", best=result)
    return result
