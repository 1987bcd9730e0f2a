"""Hot loops: Crank-Nicolson stepping of a tridiagonal Hamiltonian.

Two interchangeable implementations are provided.  The numba one is used when
numba imports and ``SQUID_TIP_DISABLE_NUMBA`` is unset (or "0"); otherwise the
LAPACK-backed numpy path is used.  Both solve

    (1 + i dt/2 H) psi_{n+1} = (1 - i dt/2 H) psi_n

for ``H`` real symmetric tridiagonal with diagonal ``d`` and off-diagonal ``e``.
"""
from __future__ import annotations

import os

import numpy as np
from scipy.linalg import lapack

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SQUID_TIP_DISABLE_NUMBA", "0") in ("", "0")


def _apply_rhs(psi, d, e, half):
    out = (1.0 - 1j * half * d) * psi
    out[:-1] -= 1j * half * e * psi[1:]
    out[1:] -= 1j * half * e * psi[:-1]
    return out


def cn_propagate_numpy(psi, d, e, dt, nsteps):
    """Advance ``psi`` by ``nsteps`` Crank-Nicolson steps of size ``dt``."""
    psi = np.array(psi, dtype=np.complex128)
    if nsteps == 0:
        return psi
    half = 0.5 * dt
    dl = (1j * half * e).astype(np.complex128)
    dd = (1.0 + 1j * half * d).astype(np.complex128)
    du = dl.copy()
    dl, dd, du, du2, ipiv, info = lapack.zgttrf(dl, dd, du)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgttrf failed with info={info}")
    for _ in range(nsteps):
        rhs = _apply_rhs(psi, d, e, half)
        psi, info = lapack.zgttrs(dl, dd, du, du2, ipiv, rhs)
    return psi


if HAVE_NUMBA:

    @njit(cache=True)
    def _cn_propagate_jit(psi, d, e, dt, nsteps):
        n = psi.shape[0]
        half = 0.5 * dt
        # Thomas factorisation of the implicit matrix, reused every step
        off = 1j * half * e
        explicit = 1.0 - 1j * half * d
        cp = np.empty(n - 1, dtype=np.complex128)
        inv = np.empty(n, dtype=np.complex128)
        inv[0] = 1.0 / (1.0 + 1j * half * d[0])
        for i in range(n - 1):
            cp[i] = off[i] * inv[i]
            inv[i + 1] = 1.0 / ((1.0 + 1j * half * d[i + 1]) - off[i] * cp[i])
        y = psi.copy()
        for _ in range(nsteps):
            # forward sweep fused with the explicit half step
            prev = y[0]
            r = explicit[0] * y[0] - off[0] * y[1]
            y[0] = r * inv[0]
            for i in range(1, n - 1):
                cur = y[i]
                r = explicit[i] * cur - off[i - 1] * prev - off[i] * y[i + 1]
                y[i] = (r - off[i - 1] * y[i - 1]) * inv[i]
                prev = cur
            r = explicit[n - 1] * y[n - 1] - off[n - 2] * prev
            y[n - 1] = (r - off[n - 2] * y[n - 2]) * inv[n - 1]
            for i in range(n - 2, -1, -1):
                y[i] -= cp[i] * y[i + 1]
        return y

    def cn_propagate_numba(psi, d, e, dt, nsteps):
        """Same contract as :func:`cn_propagate_numpy`, compiled with numba."""
        return _cn_propagate_jit(np.ascontiguousarray(psi, dtype=np.complex128),
                                 np.ascontiguousarray(d, dtype=np.float64),
                                 np.ascontiguousarray(e, dtype=np.float64),
                                 float(dt), int(nsteps))
else:  # pragma: no cover
    cn_propagate_numba = None


def cn_propagate(psi, d, e, dt, nsteps):
    if USE_NUMBA:
        return cn_propagate_numba(psi, d, e, dt, nsteps)
    return cn_propagate_numpy(psi, d, e, dt, nsteps)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
