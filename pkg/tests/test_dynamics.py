import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockbench import (
    NATURAL,
    InconsistentMomentsError,
    InvalidGridError,
    OscillatorParams,
    TimeGrid,
    build_operators,
    delta_L_t,
    evolve_moments,
    fidelity,
    moments,
    uncertainty_product_sq,
    unitary_evolve,
)
from fockbench.dynamics import TRAJECTORY_COLUMNS, moment_trajectory, write_csv
from fockbench.fock_core import MomentSet
from fockbench.states import coherent_state, fock_state, squeezed_vacuum

FIELDS = ("mean_x", "mean_p", "var_x", "var_p", "K")


def _band_limited(D, seed, top=12):
    rng = np.random.default_rng(seed)
    c = np.zeros(D, complex)
    c[:top] = rng.normal(size=top) + 1j * rng.normal(size=top)
    return c / np.linalg.norm(c)


def test_grid_validation():
    with pytest.raises(InvalidGridError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(InvalidGridError):
        TimeGrid(0.0, 1.0, 1)
    g = TimeGrid.one_period(OscillatorParams(omega=2.0), 5)
    assert g.span == pytest.approx(math.pi)
    np.testing.assert_allclose(np.diff(g.times), math.pi / 4)


def test_ground_state_stationary():
    m0 = moments(fock_state(0, 8), build_operators(8))
    for t in (0.1, 1.0, 7.3):
        mt = evolve_moments(m0, NATURAL, t)
        for f in FIELDS:
            assert getattr(mt, f) == pytest.approx(getattr(m0, f), abs=1e-15)


def test_squeezed_quadratures_swap():
    # Gaussian variances for r = 0.5 written out directly
    vx, vp = math.exp(-1.0) / 2, math.e / 2
    m0 = MomentSet(0.0, 0.0, vx, vp, 0.0)
    mt = evolve_moments(m0, NATURAL, math.pi / 2)
    assert mt.var_x == pytest.approx(1.3591409142295225, abs=1e-12)
    assert mt.var_p == pytest.approx(0.18393972058572117, abs=1e-12)


def test_quarter_period_rotation():
    mt = evolve_moments(MomentSet(1.0, 0.0, 0.5, 0.5, 0.0), NATURAL, math.pi / 2)
    assert mt.mean_x == pytest.approx(0.0, abs=1e-15)
    assert mt.mean_p == pytest.approx(-1.0, abs=1e-15)


def test_delta_L_examples():
    assert delta_L_t(0.0, 0.0, NATURAL, 1.234) == 0.0
    assert delta_L_t(0.5876, 0.0, NATURAL, math.pi / 4) == pytest.approx(0.0, abs=1e-15)
    # sign and magnitude of the correlation term, fixed by exact evolution below
    assert delta_L_t(0.0, 1.0, NATURAL, math.pi / 4) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("t", np.linspace(0.05, 3.0, 7))
def test_delta_L_matches_exact_evolution_with_correlation(t):
    # state with K0 != 0: a squeezed vacuum rotated by a quarter of its period
    ops = build_operators(64)
    psi = unitary_evolve(squeezed_vacuum(0.4, 64), ops, 0.3)
    m0 = moments(psi, ops)
    assert abs(m0.K) > 0.1
    exact = moments(unitary_evolve(psi, ops, t), ops).dL
    assert delta_L_t(m0.dL, m0.K, NATURAL, t) == pytest.approx(exact, abs=1e-10)


def test_delta_L_units():
    params = OscillatorParams(2.0, 3.0, 0.7)
    ops = build_operators(64, params)
    psi = unitary_evolve(squeezed_vacuum(0.3, 64), ops, 0.2)
    m0 = moments(psi, ops)
    for t in (0.1, 0.4, 0.9):
        exact = moments(unitary_evolve(psi, ops, t), ops).dL
        assert delta_L_t(m0.dL, m0.K, params, t) == pytest.approx(exact, abs=1e-10)


def test_uncertainty_product_sq_examples():
    assert uncertainty_product_sq(0.5, 0.0, NATURAL) == pytest.approx(0.25)
    assert uncertainty_product_sq(0.77154, 0.58760, NATURAL) == pytest.approx(0.25, abs=1e-4)
    assert uncertainty_product_sq(1.5, 0.0, NATURAL) == pytest.approx(2.25)
    with pytest.raises(InconsistentMomentsError):
        uncertainty_product_sq(0.5, 0.6, NATURAL)


def test_unitary_examples(ops48):
    g = unitary_evolve(fock_state(0, 48), ops48, 2.1)
    assert fidelity(g, fock_state(0, 48)) == pytest.approx(1.0, abs=1e-15)
    out = unitary_evolve(coherent_state(1.0, 48), ops48, math.pi)
    assert fidelity(out, coherent_state(-1.0, 48)) >= 1 - 1e-10
    m1 = moments(unitary_evolve(fock_state(1, 48), ops48, 0.77), ops48)
    assert (m1.var_x, m1.var_p, m1.K) == pytest.approx((1.5, 1.5, 0.0), abs=1e-13)


def test_unitary_density_matrix_consistent(ops16):
    psi = _band_limited(16, 4)
    rho = np.outer(psi, psi.conj())
    out = unitary_evolve(psi, ops16, 1.1)
    np.testing.assert_allclose(unitary_evolve(rho, ops16, 1.1), np.outer(out, out.conj()), atol=1e-14)


def test_consistency_sweep_100_states_64_times(ops32):
    grid = TimeGrid.one_period(NATURAL, 64)
    worst = 0.0
    for seed in range(100):
        psi = _band_limited(32, seed)
        m0 = moments(psi, ops32)
        for t in grid.times:
            exact = moments(unitary_evolve(psi, ops32, t), ops32)
            closed = evolve_moments(m0, NATURAL, t)
            for f in FIELDS:
                worst = max(worst, abs(getattr(exact, f) - getattr(closed, f)))
    assert worst <= 1e-8


def test_dH_conserved(ops32):
    grid = TimeGrid.one_period(NATURAL, 256)
    for seed in range(20):
        m0 = moments(_band_limited(32, seed), ops32)
        dH = evolve_moments(m0, NATURAL, grid.times).dH
        assert np.ptp(dH) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(
    dL0=st.floats(-5, 5),
    K0=st.floats(-5, 5),
    t=st.floats(0, 50),
    w=st.floats(0.1, 10),
)
def test_delta_L_period(dL0, K0, t, w):
    params = OscillatorParams(omega=w)
    period = math.pi / w
    a = delta_L_t(dL0, K0, params, t)
    b = delta_L_t(dL0, K0, params, t + period)
    assert a == pytest.approx(b, abs=1e-10 * max(1.0, abs(dL0) + abs(K0)) * max(1.0, t * w))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6), t=st.floats(0, 10))
def test_energy_identity_along_trajectory(seed, t):
    # (dH)^2 - (dL_t)^2 = omega^2 var_x var_p holds for every state, not only K = 0
    params = OscillatorParams(1.4, 0.6, 0.9)
    ops = build_operators(32, params)
    m0 = moments(_band_limited(32, seed), ops)
    mt = evolve_moments(m0, params, t)
    dL = delta_L_t(m0.dL, m0.K, params, t)
    lhs = m0.dH**2 - dL**2
    rhs = params.omega**2 * mt.var_x * mt.var_p
    assert lhs == pytest.approx(rhs, abs=1e-9 * max(1.0, m0.dH**2))
    assert uncertainty_product_sq(m0.dH, dL, params) == pytest.approx(mt.var_x * mt.var_p, abs=1e-8 * max(1, m0.dH**2))


def test_trajectory_csv(tmp_path, ops32):
    grid = TimeGrid.one_period(NATURAL, 9)
    rows = moment_trajectory(moments(coherent_state(0.5j, 32), ops32), NATURAL, grid)
    path = tmp_path / "traj.csv"
    write_csv(path, rows, TRAJECTORY_COLUMNS)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert tuple(data[0]) == TRAJECTORY_COLUMNS
    assert len(data) == 10
    dxdp = [float(r[-1]) for r in data[1:]]
    np.testing.assert_allclose(dxdp, 0.5, atol=1e-12)
