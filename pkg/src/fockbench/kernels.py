"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``FOCKBENCH_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

if os.environ.get("FOCKBENCH_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

master_rhs_banded = _impl.master_rhs_banded
rk4_steps = _impl.rk4_steps


def bands(ops):
    """Extract ``(h, x_upper, p_upper)`` from an OperatorSet, checking the band structure."""
    H, x, p = ops.H, ops.x, ops.p
    D = ops.dim
    h = np.real(np.diag(H)).copy()
    xu = np.diag(x, 1).copy()
    pu = np.diag(p, 1).copy()
    banded = (
        np.array_equal(H, np.diag(np.diag(H)))
        and np.array_equal(x, np.diag(xu, 1) + np.diag(np.conj(xu), -1))
        and np.array_equal(p, np.diag(pu, 1) + np.diag(np.conj(pu), -1))
    )
    if not banded or D < 2:
        raise ValueError("operators are not in tridiagonal number-basis form")
    return h, xu, pu
