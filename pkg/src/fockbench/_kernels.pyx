# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the high-temperature Brownian-motion master equation.

Position and momentum are tridiagonal Hermitian matrices with zero diagonal in
the number basis, and the Hamiltonian is diagonal, so every commutator costs
O(D^2) instead of a dense O(D^3) product. The density matrix must be Hermitian:
only the upper triangle is computed. Bands are passed as the upper
diagonal ``u`` (``M[i, i+1] = u[i]``, ``M[i+1, i] = conj(u[i])``).
"""

import numpy as np

cdef extern from "complex.h" nogil:
    double complex conj(double complex)

ctypedef double complex cplx


cdef inline cplx _lmul(const cplx[:, ::1] M, const cplx[::1] u, Py_ssize_t i, Py_ssize_t j, Py_ssize_t D) noexcept nogil:
    # (X M)[i, j]
    cdef cplx acc = 0
    if i > 0:
        acc = acc + conj(u[i - 1]) * M[i - 1, j]
    if i < D - 1:
        acc = acc + u[i] * M[i + 1, j]
    return acc


cdef inline cplx _rmul(const cplx[:, ::1] M, const cplx[::1] u, Py_ssize_t i, Py_ssize_t j, Py_ssize_t D) noexcept nogil:
    # (M X)[i, j]
    cdef cplx acc = 0
    if j > 0:
        acc = acc + M[i, j - 1] * u[j - 1]
    if j < D - 1:
        acc = acc + M[i, j + 1] * conj(u[j])
    return acc


cdef void _rhs(const cplx[:, ::1] rho, const double[::1] h, const cplx[::1] xu, const cplx[::1] pu,
               double hbar, double gamma, double dcoef,
               cplx[:, ::1] A, cplx[:, ::1] B, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t D = rho.shape[0]
    cdef Py_ssize_t i, j
    cdef cplx I = 1j
    cdef cplx unit = -I / hbar
    cdef cplx diss = -I * gamma / hbar
    # rho Hermitian => {p, rho} Hermitian, [x, rho] anti-Hermitian, result Hermitian:
    # fill the upper triangle and mirror
    for i in range(D):
        for j in range(i, D):
            A[i, j] = _lmul(rho, pu, i, j, D) + _rmul(rho, pu, i, j, D)
            B[i, j] = _lmul(rho, xu, i, j, D) - _rmul(rho, xu, i, j, D)
            A[j, i] = conj(A[i, j])
            B[j, i] = -conj(B[i, j])
    for i in range(D):
        for j in range(i, D):
            out[i, j] = (unit * (h[i] - h[j]) * rho[i, j]
                         + diss * (_lmul(A, xu, i, j, D) - _rmul(A, xu, i, j, D))
                         - dcoef * (_lmul(B, xu, i, j, D) - _rmul(B, xu, i, j, D)))
            out[j, i] = conj(out[i, j])


def master_rhs_banded(rho, h, xu, pu, double hbar, double gamma, double dcoef):
    cdef cplx[:, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef cplx[::1] xv = np.ascontiguousarray(xu, dtype=np.complex128)
    cdef cplx[::1] pv = np.ascontiguousarray(pu, dtype=np.complex128)
    cdef Py_ssize_t D = r.shape[0]
    out = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] o = out
    cdef cplx[:, ::1] A = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] B = np.empty((D, D), dtype=np.complex128)
    with nogil:
        _rhs(r, hv, xv, pv, hbar, gamma, dcoef, A, B, o)
    return out


def rk4_steps(rho, Py_ssize_t n_steps, double dt, h, xu, pu, double hbar, double gamma, double dcoef):
    """Advance ``rho`` by ``n_steps`` classical RK4 steps; returns a new array."""
    y_arr = np.array(rho, dtype=np.complex128, order="C", copy=True)
    cdef cplx[:, ::1] y = y_arr
    cdef double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef cplx[::1] xv = np.ascontiguousarray(xu, dtype=np.complex128)
    cdef cplx[::1] pv = np.ascontiguousarray(pu, dtype=np.complex128)
    cdef Py_ssize_t D = y.shape[0]
    cdef cplx[:, ::1] k = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] acc = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] stage = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] A = np.empty((D, D), dtype=np.complex128)
    cdef cplx[:, ::1] B = np.empty((D, D), dtype=np.complex128)
    cdef Py_ssize_t s, i, j
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    with nogil:
        for s in range(n_steps):
            _rhs(y, hv, xv, pv, hbar, gamma, dcoef, A, B, k)
            for i in range(D):
                for j in range(D):
                    acc[i, j] = k[i, j]
                    stage[i, j] = y[i, j] + half * k[i, j]
            _rhs(stage, hv, xv, pv, hbar, gamma, dcoef, A, B, k)
            for i in range(D):
                for j in range(D):
                    acc[i, j] = acc[i, j] + 2.0 * k[i, j]
                    stage[i, j] = y[i, j] + half * k[i, j]
            _rhs(stage, hv, xv, pv, hbar, gamma, dcoef, A, B, k)
            for i in range(D):
                for j in range(D):
                    acc[i, j] = acc[i, j] + 2.0 * k[i, j]
                    stage[i, j] = y[i, j] + dt * k[i, j]
            _rhs(stage, hv, xv, pv, hbar, gamma, dcoef, A, B, k)
            for i in range(D):
                for j in range(D):
                    y[i, j] = y[i, j] + sixth * (acc[i, j] + k[i, j])
    return y_arr
