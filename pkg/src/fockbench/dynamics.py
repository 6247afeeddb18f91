"""Closed-form Heisenberg-picture moment dynamics and exact unitary evolution."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InconsistentMomentsError, InvalidGridError
from .fock_core import MomentSet, OperatorSet, OscillatorParams, check_state

TRAJECTORY_COLUMNS = ("t", "mean_x", "mean_p", "var_x", "var_p", "K", "dH", "dL", "dxdp")


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    n_samples: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise InvalidGridError(f"grid needs t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise InvalidGridError(f"grid needs at least 2 samples, got {self.n_samples!r}")

    @classmethod
    def one_period(cls, params: OscillatorParams, n_samples: int = 1024, t0: float = 0.0) -> "TimeGrid":
        return cls(t0, t0 + params.period, n_samples)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, int(self.n_samples))

    @property
    def span(self) -> float:
        return self.t1 - self.t0


def evolve_moments(m0: MomentSet, params: OscillatorParams, t) -> MomentSet:
    """Moments at time ``t`` (scalar or array) under the free oscillator."""
    m, w = params.mass, params.omega
    c, s = np.cos(w * t), np.sin(w * t)
    c2, s2 = np.cos(2 * w * t), np.sin(2 * w * t)
    mw = m * w

    mean_x = m0.mean_x * c + m0.mean_p / mw * s
    mean_p = m0.mean_p * c - mw * m0.mean_x * s
    var_x = m0.var_x * c**2 + m0.var_p / mw**2 * s**2 + m0.K / mw * s2
    var_p = m0.var_p * c**2 + mw**2 * m0.var_x * s**2 - mw * m0.K * s2
    K = m0.K * c2 + 0.5 * (m0.var_p / mw - mw * m0.var_x) * s2
    # <N> is conserved by the free oscillator
    return MomentSet(mean_x, mean_p, var_x, var_p, K, params, n_mean=m0.n_mean, tail_mass=m0.tail_mass)


def delta_L_t(dL0: float, K0: float, params: OscillatorParams, t: float) -> float:
    """Lagrangian difference at time ``t`` given its initial value and correlation.

    Follows from subtracting the evolved potential variance term from the kinetic
    one; oscillates at ``2 omega`` so its period is ``pi / omega``.
    """
    w = params.omega
    return dL0 * np.cos(2 * w * t) - w * K0 * np.sin(2 * w * t)


def uncertainty_product_sq(dH: float, dL_t: float, params: OscillatorParams) -> float:
    """(dx dp)^2 from the energy and Lagrangian differences."""
    slack = 1e-12 * max(1.0, abs(dH))
    if abs(dL_t) > dH + slack:
        raise InconsistentMomentsError(f"|dL| = {abs(dL_t)!r} exceeds dH = {dH!r}")
    return max(dH**2 - dL_t**2, 0.0) / params.omega**2


def unitary_evolve(state, ops: OperatorSet, t: float) -> np.ndarray:
    """Exact free evolution: amplitude ``n`` picks up ``exp(-i omega (n + 1/2) t)``."""
    st = check_state(state, ops.dim)
    phases = np.exp(-1j * ops.params.omega * (np.arange(ops.dim) + 0.5) * t)
    if st.ndim == 1:
        return phases * st
    return phases[:, None] * st * phases.conj()[None, :]


def moment_trajectory(m0: MomentSet, params: OscillatorParams, grid: TimeGrid) -> list[dict]:
    rows = []
    for t in grid.times:
        mt = evolve_moments(m0, params, t)
        rows.append(
            {
                "t": float(t),
                "mean_x": mt.mean_x,
                "mean_p": mt.mean_p,
                "var_x": mt.var_x,
                "var_p": mt.var_p,
                "K": mt.K,
                "dH": mt.dH,
                "dL": mt.dL,
                "dxdp": mt.uncertainty_product,
            }
        )
    return rows


def write_csv(path, rows: list[dict], columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(float(row[c])) for c in columns])
