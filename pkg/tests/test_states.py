import cmath
import logging
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from fockbench import (
    NATURAL,
    DimensionError,
    InsufficientDimensionError,
    InvalidGridError,
    TimeGrid,
    build_operators,
    certify,
    coherent_state,
    eigen_residual,
    fock_state,
    moments,
    random_state,
    squeezed_vacuum,
)
from fockbench.states import CONSTANT, OSCILLATING, SATURATING, coherent_tail_mass


def test_vacuum_is_alpha_zero():
    np.testing.assert_array_equal(coherent_state(0, 5), fock_state(0, 5))


def test_coherent_matches_displaced_vacuum():
    # displacement generator exponentiated in a much larger basis as the oracle
    big = build_operators(90)
    alpha = 1.1 - 0.6j
    D_op = expm(alpha * big.a_dag - np.conj(alpha) * big.a)
    ref = D_op[:, 0][:30]
    np.testing.assert_allclose(coherent_state(alpha, 30), ref, atol=1e-9)


def test_coherent_poisson_mean(ops32):
    m = moments(coherent_state(1.0, 32), ops32)
    assert m.n_mean == pytest.approx(1.0, abs=1e-10)
    assert m.dH == pytest.approx(0.5, abs=1e-10)


def test_coherent_imaginary_alpha(ops48):
    m = moments(coherent_state(2j, 48), ops48)
    assert m.mean_x == pytest.approx(0.0, abs=1e-10)
    assert m.mean_p == pytest.approx(2 * math.sqrt(2), abs=1e-10)


def test_coherent_insufficient_dimension():
    with pytest.raises(InsufficientDimensionError) as exc:
        coherent_state(5.0, 8)
    assert exc.value.tail_mass > 0.9


def test_coherent_tail_mass_against_series():
    lam = 2.3
    series = 1 - sum(math.exp(-lam) * lam**n / math.factorial(n) for n in range(12))
    assert coherent_tail_mass(math.sqrt(lam), 12) == pytest.approx(series, rel=1e-10)


def test_fock_examples():
    np.testing.assert_array_equal(fock_state(0, 3), [1, 0, 0])
    m = moments(fock_state(1, 8), build_operators(8))
    assert (m.var_x, m.var_p) == pytest.approx((1.5, 1.5), abs=1e-14)
    with pytest.raises(DimensionError):
        fock_state(9, 8)


def test_squeezed_zero_is_vacuum():
    np.testing.assert_allclose(squeezed_vacuum(0.0, 6), fock_state(0, 6), atol=0)


@pytest.mark.parametrize("r", [-0.9, -0.5, 0.2, 0.5, 1.0])
def test_squeezed_closed_form_amplitudes(r):
    c = squeezed_vacuum(r, 160)
    for k in range(10):
        ref = (-math.tanh(r)) ** k * math.sqrt(math.factorial(2 * k)) / (2**k * math.factorial(k))
        assert c[2 * k].real == pytest.approx(ref / math.sqrt(math.cosh(r)), abs=1e-12)
        assert c[2 * k + 1] == 0


@pytest.mark.parametrize("r, D", [(-0.8, 64), (-0.3, 64), (0.5, 64), (0.8, 64), (1.0, 72), (-1.0, 72)])
def test_squeezed_variances(r, D):
    # at r = 1 the 4e-9 discarded mass shifts var_p by 6e-7 when D = 64
    m = moments(squeezed_vacuum(r, D), build_operators(D))
    assert m.var_x == pytest.approx(math.exp(-2 * r) / 2, abs=1e-7)
    assert m.var_p == pytest.approx(math.exp(2 * r) / 2, abs=1e-7)
    assert m.K == pytest.approx(0.0, abs=1e-7)


def test_squeezed_half_energy_differences():
    m = moments(squeezed_vacuum(0.5, 64), build_operators(64))
    assert m.dL == pytest.approx(0.5876005968219007, abs=1e-6)
    assert m.dH == pytest.approx(math.cosh(1.0) / 2, abs=1e-10)


def test_squeezed_insufficient_dimension():
    with pytest.raises(InsufficientDimensionError):
        squeezed_vacuum(1.5, 10)


def test_random_state_norm_and_determinism():
    assert np.linalg.norm(random_state(2, 9)) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(random_state(16, 4), random_state(16, 4))
    assert not np.array_equal(random_state(16, 4), random_state(16, 5))


def test_random_state_mean_occupation(ops32):
    n = np.arange(32)
    mean_n = np.mean([np.sum(n * np.abs(random_state(32, s)) ** 2) for s in range(1000)])
    assert mean_n == pytest.approx(31 / 2, rel=0.05)


def test_certify_coherent(ops32):
    rep = certify(coherent_state(1.0, 32), ops32)
    assert rep.verdict == SATURATING
    assert rep.max_violation <= 1e-9
    assert rep.theorem_consistent


def test_certify_fock2(ops32):
    rep = certify(fock_state(2, 32), ops32)
    assert rep.verdict == CONSTANT
    assert rep.min_product == pytest.approx(2.5, abs=1e-12)
    assert rep.max_product == pytest.approx(2.5, abs=1e-12)


def test_certify_squeezed():
    ops = build_operators(64)
    rep = certify(squeezed_vacuum(0.5, 64), ops)
    assert rep.verdict == OSCILLATING
    assert rep.min_product == pytest.approx(0.5, abs=1e-7)


def test_certify_short_grid(ops16):
    with pytest.raises(InvalidGridError):
        certify(fock_state(0, 16), ops16, TimeGrid(0.0, 3.0, 100))


def test_certify_reports_tolerance(ops16):
    assert certify(fock_state(0, 16), ops16, tol=1e-6).tol == 1e-6


def test_certify_global_phase_invariant(ops48):
    psi = squeezed_vacuum(0.3, 48)
    a = certify(psi, ops48).to_dict()
    b = certify(cmath.exp(0.7j) * psi, ops48).to_dict()
    for k, v in a.items():
        assert b[k] == (pytest.approx(v, abs=1e-14) if isinstance(v, float) else v)


def test_residual_decreases_with_dimension():
    alpha = 1.5
    res = []
    for D in range(22, 40, 3):
        res.append(eigen_residual(coherent_state(alpha, D), build_operators(D)))
    assert all(b <= a for a, b in zip(res, res[1:]))


def test_saturation_equivalence_on_family(ops48):
    family = [coherent_state(a, 48) for a in (0, 0.3, 1, -1.2j, 1 + 1j, 2)]
    family += [fock_state(n, 48) for n in range(1, 5)]
    family += [squeezed_vacuum(r, 48) for r in (-0.4, 0.1, 0.6)]
    family += [random_state(48, s) for s in range(200)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for psi in family:
            rep = certify(psi, ops48)
            assert (rep.verdict == SATURATING) == (rep.residual <= 1e-8)
            assert (rep.verdict == SATURATING) == (abs(rep.dH - 0.5) <= 1e-8)


def test_inconsistent_saturation_is_logged(ops16, caplog):
    # |0> + 1e-3 |2>: violation 1.999993e-6 sits just below residual 1.999998e-6,
    # so a tolerance between them exercises the forward-direction check
    psi = fock_state(0, 16) + 1e-3 * fock_state(2, 16)
    psi /= np.linalg.norm(psi)
    with caplog.at_level(logging.WARNING, logger="fockbench.states"):
        rep = certify(psi, ops16, tol=1.9999960e-6)
    assert rep.verdict == SATURATING
    assert not rep.theorem_consistent
    assert "counterexample" in caplog.text


@settings(max_examples=50, deadline=None)
@given(re=st.floats(-2.5, 2.5), im=st.floats(-2.5, 2.5))
def test_coherent_alpha_recovered(re, im):
    ops = build_operators(48)
    assert moments(coherent_state(complex(re, im), 48), ops).alpha == pytest.approx(complex(re, im), abs=1e-9)


def test_grid_default_is_one_period(ops16):
    rep = certify(coherent_state(0.5, 16), ops16, TimeGrid.one_period(NATURAL, 16))
    assert rep.verdict == SATURATING
