"""High-temperature quantum Brownian motion: master equation, purity and the sieve.

The master equation is

    d rho/dt = -(i/hbar)[H, rho] - (i gamma/hbar)[x, {p, rho}]
               - (2 m gamma kT / hbar^2)[x, [x, rho]]

integrated with fixed-step classical RK4 on the full density matrix. It is not
of Lindblad form, so small negative eigenvalues are expected and monitored
rather than corrected.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import TimeGrid, unitary_evolve
from .errors import ConfigurationError, DimensionError, IntegrationDivergedError, NegativityWarning
from .fock_core import NATURAL, MomentSet, OperatorSet, OscillatorParams, check_state, moments, projector

log = logging.getLogger(__name__)

STEPS_PER_PERIOD = 4000
STIFFNESS_LIMIT = 0.5
TRACE_ABORT = 1e-6
NEG_WARN = -1e-6
NEG_ABORT = -1e-3
DEFAULT_THRESHOLD = 10.0
TIE_TOL = 1e-10

TRAJECTORY_COLUMNS = ("t", "xi", "trace_err", "min_eig", "mean_x", "mean_p", "var_x", "var_p")


@dataclass(frozen=True)
class QBMParams:
    gamma: float = 1e-3
    kT: float = 100.0
    osc: OscillatorParams = NATURAL

    def __post_init__(self):
        # gamma = 0 is admitted as the closed-system limit
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"damping must be >= 0, got {self.gamma!r}")
        if not (np.isfinite(self.kT) and self.kT > 0):
            raise ValueError(f"kT must be positive, got {self.kT!r}")

    @property
    def thermal_length(self) -> float:
        """Thermal de Broglie length hbar / sqrt(m kT)."""
        return self.osc.hbar / math.sqrt(self.osc.mass * self.kT)

    @property
    def diffusion(self) -> float:
        return 2.0 * self.osc.mass * self.gamma * self.kT / self.osc.hbar**2

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "kT": self.kT, **self.osc.to_dict()}


def _check_dims(rho, ops):
    if rho.shape != (ops.dim, ops.dim):
        raise DimensionError(f"density matrix shape {rho.shape} does not match dimension {ops.dim}")


def master_rhs(rho, ops: OperatorSet, qbm: QBMParams) -> np.ndarray:
    """Dense reference evaluation of d rho / dt."""
    rho = np.asarray(rho, dtype=complex)
    _check_dims(rho, ops)
    hbar = qbm.osc.hbar
    H, x, p = ops.H, ops.x, ops.p
    anti = p @ rho + rho @ p
    comm = x @ rho - rho @ x
    out = (-1j / hbar) * (H @ rho - rho @ H)
    out += (-1j * qbm.gamma / hbar) * (x @ anti - anti @ x)
    out -= qbm.diffusion * (x @ comm - comm @ x)
    return out


def purity_rate_direct(rho, ops: OperatorSet, qbm: QBMParams) -> float:
    """2 Tr[rho * d rho/dt] straight from the master equation."""
    rho = np.asarray(rho, dtype=complex)
    return float(2.0 * np.einsum("ij,ji->", rho, master_rhs(rho, ops, qbm)).real)


def purity_rate_exact(rho, ops: OperatorSet, qbm: QBMParams) -> float:
    """Closed form 2 gamma xi - 8 gamma Tr(rho^2 x^2 - rho x rho x) / lambda_T^2.

    Uses the truncated product ``x @ x`` so the diffusion part matches the
    master equation term by term. The dissipative part relies on [x, p] = i hbar,
    which the truncation breaks only through the top level.
    """
    rho = np.asarray(rho, dtype=complex)
    _check_dims(rho, ops)
    x = ops.x
    rho2 = rho @ rho
    xi = float(np.einsum("ij,ji->", rho, rho).real)
    rx = rho @ x
    spread = np.einsum("ij,ji->", rho2, x @ x) - np.einsum("ij,ji->", rx, rx)
    return float(2.0 * qbm.gamma * xi - 8.0 * qbm.gamma * spread.real / qbm.thermal_length**2)


def purity_rate_estimate(m: MomentSet, qbm: QBMParams, form: str = "dH") -> float:
    """Period-averaged decay rate for an approximately pure state.

    ``form="dH"`` uses the energy difference directly; ``form="variances"`` the
    equivalent weighted sum of position and momentum variances.
    """
    hw = qbm.osc.hbar * qbm.osc.omega
    if form == "dH":
        return -(8.0 * qbm.gamma * qbm.kT / hw) * (m.dH / hw)
    if form == "variances":
        o = qbm.osc
        return -(8.0 * qbm.gamma * qbm.kT / hw**2) * (m.var_p / (2 * o.mass) + 0.5 * o.mass * o.omega**2 * m.var_x)
    raise ValueError(f"unknown form {form!r}")


@dataclass
class ValidityReport:
    ratios: dict
    threshold: float
    flags: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {
            "ratios": {k: (v if math.isfinite(v) else None) for k, v in self.ratios.items()},
            "threshold": self.threshold,
            "flags": list(self.flags),
        }


def validity_check(m: MomentSet, qbm: QBMParams, threshold: float = DEFAULT_THRESHOLD) -> ValidityReport:
    """Ratios that must be large for the high-temperature equation to apply."""
    o = qbm.osc
    ratios = {
        "kT_over_hbar_omega": qbm.kT / (o.hbar * o.omega),
        "kT_over_hbar_gamma": qbm.kT / (o.hbar * qbm.gamma) if qbm.gamma > 0 else math.inf,
        "kT_over_localization": 2.0 * o.mass * m.var_x * qbm.kT / o.hbar**2,
    }
    flags = [name for name, value in ratios.items() if value < threshold]
    return ValidityReport(ratios, threshold, flags)


def stiffness_rate(ops: OperatorSet, qbm: QBMParams) -> float:
    """Upper estimate of the fastest rate in the master equation on this basis."""
    hbar = qbm.osc.hbar
    h = np.real(np.diag(ops.H))
    xn = float(np.max(np.abs(np.linalg.eigvalsh(ops.x))))
    pn = float(np.max(np.abs(np.linalg.eigvalsh(ops.p))))
    return (h.max() - h.min()) / hbar + 4.0 * qbm.diffusion * xn**2 + 4.0 * qbm.gamma * xn * pn / hbar


class _Stepper:
    def __init__(self, ops: OperatorSet, qbm: QBMParams, backend: str | None = None):
        self.ops, self.qbm = ops, qbm
        try:
            self.bands = kernels.bands(ops)
        except ValueError:
            self.bands = None
        self.impl = kernels
        if backend == "python":
            from . import _kernels_py

            self.impl = _kernels_py
        elif backend not in (None, "cython", "auto"):
            raise ConfigurationError(f"unknown backend {backend!r}")

    def advance(self, rho, n_steps: int, dt: float):
        if n_steps == 0:
            return np.array(rho, dtype=complex)
        q = self.qbm
        if self.bands is not None:
            h, xu, pu = self.bands
            return self.impl.rk4_steps(rho, n_steps, dt, h, xu, pu, q.osc.hbar, q.gamma, q.diffusion)
        y = np.array(rho, dtype=complex)
        for _ in range(n_steps):
            k1 = master_rhs(y, self.ops, q)
            k2 = master_rhs(y + 0.5 * dt * k1, self.ops, q)
            k3 = master_rhs(y + 0.5 * dt * k2, self.ops, q)
            k4 = master_rhs(y + dt * k3, self.ops, q)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return y


@dataclass
class Trajectory:
    times: np.ndarray
    xi: np.ndarray
    trace_err: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    dt: float
    states: np.ndarray | None = None

    def rows(self) -> list[dict]:
        cols = {c: getattr(self, "times" if c == "t" else c) for c in TRAJECTORY_COLUMNS}
        return [{c: float(v[i]) for c, v in cols.items()} for i in range(len(self.times))]

    @property
    def full_span_slope(self) -> float:
        """(xi(end) - xi(start)) / duration."""
        return float((self.xi[-1] - self.xi[0]) / (self.times[-1] - self.times[0]))


def _as_density(rho0, ops):
    st = check_state(rho0, ops.dim)
    return projector(st) if st.ndim == 1 else st.copy()


def _resolve_dt(ops, qbm, dt):
    if dt is None:
        dt = qbm.osc.period / STEPS_PER_PERIOD
    if not dt > 0:
        raise ConfigurationError("time step must be positive")
    score = dt * stiffness_rate(ops, qbm)
    if score > STIFFNESS_LIMIT:
        raise ConfigurationError(
            f"time step {dt:.3e} too large for this basis: dt * rate = {score:.3f} > {STIFFNESS_LIMIT}"
        )
    return dt


def integrate(
    rho0,
    ops: OperatorSet,
    qbm: QBMParams,
    grid: TimeGrid,
    dt: float | None = None,
    keep_states: bool = False,
    backend: str | None = None,
) -> Trajectory:
    """Integrate the master equation, sampling on ``grid``.

    ``dt`` is the largest internal step (default one period / 4000); each grid
    interval is split into an integer number of equal steps no longer than it.
    """
    rho = _as_density(rho0, ops)
    dt_max = _resolve_dt(ops, qbm, dt)
    times = grid.times
    interval = grid.span / (len(times) - 1)
    substeps = max(1, math.ceil(interval / dt_max - 1e-9))
    h = interval / substeps
    stepper = _Stepper(ops, qbm, backend)
    x, p, x2, p2 = ops.x, ops.p, ops.x2, ops.p2

    n = len(times)
    rec = {k: np.empty(n) for k in ("xi", "trace_err", "herm_err", "min_eig", "mean_x", "mean_p", "var_x", "var_p")}
    states = np.empty((n, ops.dim, ops.dim), dtype=complex) if keep_states else None
    warned = False
    for i in range(n):
        if i > 0:
            rho = stepper.advance(rho, substeps, h)
        tr = np.trace(rho)
        herm = 0.5 * (rho + rho.conj().T)
        min_eig = float(np.linalg.eigvalsh(herm)[0])
        mx = np.einsum("ij,ji->", rho, x).real
        mp = np.einsum("ij,ji->", rho, p).real
        rec["xi"][i] = np.einsum("ij,ji->", rho, rho).real
        rec["trace_err"][i] = abs(tr - 1.0)
        rec["herm_err"][i] = float(np.max(np.abs(rho - rho.conj().T)))
        rec["min_eig"][i] = min_eig
        rec["mean_x"][i] = mx
        rec["mean_p"][i] = mp
        rec["var_x"][i] = np.einsum("ij,ji->", rho, x2).real - mx**2
        rec["var_p"][i] = np.einsum("ij,ji->", rho, p2).real - mp**2
        if keep_states:
            states[i] = rho
        if rec["trace_err"][i] > TRACE_ABORT or not np.all(np.isfinite(rho)):
            raise IntegrationDivergedError(f"trace drifted by {rec['trace_err'][i]:.3e} at t={times[i]:.4f}")
        if min_eig < NEG_ABORT:
            raise IntegrationDivergedError(f"density matrix eigenvalue {min_eig:.3e} at t={times[i]:.4f}")
        if min_eig < NEG_WARN and not warned:
            warnings.warn(f"negative eigenvalue {min_eig:.3e} at t={times[i]:.4f}", NegativityWarning, stacklevel=2)
            warned = True
    return Trajectory(times=times, dt=h, states=states, **rec)


def _five_point_slope(xi, dt):
    return (-25.0 * xi[0] + 48.0 * xi[1] - 36.0 * xi[2] + 16.0 * xi[3] - 3.0 * xi[4]) / (12.0 * dt)


def initial_slope(rho0, ops: OperatorSet, qbm: QBMParams, dt: float | None = None, backend=None) -> float:
    """d xi/dt at t = 0 from four integrator steps and a one-sided 5-point stencil."""
    rho = _as_density(rho0, ops)
    dt = _resolve_dt(ops, qbm, dt)
    stepper = _Stepper(ops, qbm, backend)
    xi = [float(np.sum(np.abs(rho) ** 2))]
    for _ in range(4):
        rho = stepper.advance(rho, 1, dt)
        xi.append(float(np.einsum("ij,ji->", rho, rho).real))
    return float(_five_point_slope(xi, dt))


def period_averaged_slope(
    rho0, ops: OperatorSet, qbm: QBMParams, n_phases: int = 16, dt: float | None = None, backend=None
) -> float:
    """Purity decay rate averaged over one orbit of the free oscillator.

    The integrator's initial slope is measured for the state carried to each of
    ``n_phases`` equally spaced points of its free orbit, and the results are
    averaged. This stays a rate for an essentially pure state even when the
    purity itself would decay substantially within one period.
    """
    rho = _as_density(rho0, ops)
    T = qbm.osc.period
    slopes = [initial_slope(unitary_evolve(rho, ops, k * T / n_phases), ops, qbm, dt, backend) for k in range(n_phases)]
    return float(np.mean(slopes))


@dataclass
class StateOutcome:
    label: str
    excluded: bool
    reason: str | None = None
    delta_H: float | None = None
    slope_measured: float | None = None
    slope_initial: float | None = None
    slope_full_period: float | None = None
    slope_theory: float | None = None
    rel_dev: float | None = None
    validity: ValidityReport | None = None
    trajectory: Trajectory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "slope_measured": self.slope_measured,
            "slope_theory": self.slope_theory,
            "rel_dev": self.rel_dev,
            "excluded": self.excluded,
            "reason": self.reason,
            "slope_initial": self.slope_initial,
            "slope_full_period": self.slope_full_period,
            "delta_H": self.delta_H,
            "validity": self.validity.to_dict() if self.validity else None,
        }


@dataclass
class SieveReport:
    params: dict
    states: list[StateOutcome]
    ranking: list[str]

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "states": [s.to_dict() for s in self.states],
            "ranking": list(self.ranking),
        }

    def outcome(self, label: str) -> StateOutcome:
        for s in self.states:
            if s.label == label:
                return s
        raise KeyError(label)


def thread_count() -> int:
    env = os.environ.get("FOCKBENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"FOCKBENCH_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def rank_with_ties(labels, losses, tol: float = TIE_TOL) -> list[str]:
    """Ascending by loss; losses within ``tol`` of each other are tied and ordered by label."""
    order = sorted(range(len(labels)), key=lambda i: losses[i])
    ranked, group = [], []
    for i in order:
        if group and losses[i] - losses[group[0]] > tol:
            ranked.extend(sorted(group, key=lambda j: labels[j]))
            group = []
        group.append(i)
    ranked.extend(sorted(group, key=lambda j: labels[j]))
    return [labels[i] for i in ranked]


def tied_ranks(values, tol: float = TIE_TOL) -> np.ndarray:
    """Average ranks (1-based) with values within ``tol`` of a group's first member tied."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and values[order[stop]] - values[order[start]] <= tol:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def rank_correlation(a, b, tol: float = TIE_TOL) -> float:
    """Spearman correlation with tolerance-based tie grouping."""
    ra, rb = tied_ranks(a, tol), tied_ranks(b, tol)
    if np.std(ra) == 0 or np.std(rb) == 0:
        return float("nan")
    return float(np.corrcoef(ra, rb)[0, 1])


def _run_state(label, psi, ops, qbm, grid, n_phases, dt, threshold, backend):
    m = moments(psi, ops)
    validity = validity_check(m, qbm, threshold)
    if not validity.ok:
        return StateOutcome(
            label,
            True,
            reason="validity ratios below threshold: " + ", ".join(validity.flags),
            delta_H=m.dH,
            validity=validity,
        )
    traj = integrate(psi, ops, qbm, grid, dt=dt, backend=backend)
    measured = period_averaged_slope(psi, ops, qbm, n_phases=n_phases, dt=dt, backend=backend)
    theory = purity_rate_estimate(m, qbm)
    rel = abs(measured - theory) / abs(theory) if theory != 0 else abs(measured)
    return StateOutcome(
        label,
        False,
        delta_H=m.dH,
        slope_measured=measured,
        slope_initial=initial_slope(psi, ops, qbm, dt, backend),
        slope_full_period=traj.full_span_slope,
        slope_theory=theory,
        rel_dev=rel,
        validity=validity,
        trajectory=traj,
    )


def sieve_experiment(
    states,
    ops: OperatorSet,
    qbm: QBMParams,
    grid: TimeGrid | None = None,
    n_phases: int = 16,
    dt: float | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    workers: int | None = None,
    backend: str | None = None,
) -> SieveReport:
    """Rank labeled pure states by their period-averaged purity loss (least first)."""
    if grid is None:
        grid = TimeGrid.one_period(qbm.osc, n_samples=201)
    if grid.span < qbm.osc.period * (1.0 - 1e-12):
        raise ConfigurationError("sieve grid must cover at least one period")
    states = list(states)
    labels = [label for label, _ in states]
    if len(set(labels)) != len(labels):
        raise ValueError("state labels must be unique")
    workers = workers or thread_count()

    def job(item):
        label, psi = item
        return _run_state(label, psi, ops, qbm, grid, n_phases, dt, threshold, backend)

    if workers > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(states))) as pool:
            outcomes = list(pool.map(job, states))
    else:
        outcomes = [job(item) for item in states]

    kept = [o for o in outcomes if not o.excluded]
    T = qbm.osc.period
    ranking = rank_with_ties([o.label for o in kept], [-o.slope_measured * T for o in kept])
    params = {
        **qbm.to_dict(),
        "dim": ops.dim,
        "t0": grid.t0,
        "t1": grid.t1,
        "n_samples": grid.n_samples,
        "n_phases": n_phases,
        "dt": dt if dt is not None else qbm.osc.period / STEPS_PER_PERIOD,
        "threshold": threshold,
    }
    return SieveReport(params, outcomes, ranking)
