"""Numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same banded representation and call signatures; used when the extension is not
built or when ``FOCKBENCH_PURE_PYTHON`` is set.
"""

import numpy as np


def _lmul(M, u):
    out = np.zeros_like(M)
    out[1:] += np.conj(u)[:, None] * M[:-1]
    out[:-1] += u[:, None] * M[1:]
    return out


def _rmul(M, u):
    out = np.zeros_like(M)
    out[:, 1:] += M[:, :-1] * u[None, :]
    out[:, :-1] += M[:, 1:] * np.conj(u)[None, :]
    return out


def master_rhs_banded(rho, h, xu, pu, hbar, gamma, dcoef):
    rho = np.asarray(rho, dtype=np.complex128)
    h = np.asarray(h, dtype=np.float64)
    A = _lmul(rho, pu) + _rmul(rho, pu)
    B = _lmul(rho, xu) - _rmul(rho, xu)
    out = (-1j / hbar) * (h[:, None] - h[None, :]) * rho
    out += (-1j * gamma / hbar) * (_lmul(A, xu) - _rmul(A, xu))
    out -= dcoef * (_lmul(B, xu) - _rmul(B, xu))
    return out


def rk4_steps(rho, n_steps, dt, h, xu, pu, hbar, gamma, dcoef):
    y = np.array(rho, dtype=np.complex128, copy=True)
    args = (h, xu, pu, hbar, gamma, dcoef)
    for _ in range(int(n_steps)):
        k1 = master_rhs_banded(y, *args)
        k2 = master_rhs_banded(y + 0.5 * dt * k1, *args)
        k3 = master_rhs_banded(y + 0.5 * dt * k2, *args)
        k4 = master_rhs_banded(y + dt * k3, *args)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
