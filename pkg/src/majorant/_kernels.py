"""Numerical kernels with a numba fast path and a pure numpy fallback.

Two operations are hot enough to matter: applying a long sequence of real
plane rotations to an accumulating frame, and the dense three-angle grid
search used by the two-cell feasibility oracle.  Both exist in a numba
``@njit`` version and a pure numpy version with identical semantics.

The backend is fixed at import time.  Set ``MAJORANT_BACKEND=numpy`` or
``MAJORANT_BACKEND=numba`` to force one; the default is numba when it is
importable and numpy otherwise.  ``MAJORANT_THREADS`` caps the numba thread
pool.  Both implementations are always importable by name so the test suite
and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _pick_backend() -> str:
    forced = os.environ.get("MAJORANT_BACKEND", "").strip().lower()
    if forced == "numpy":
        return "numpy"
    if forced == "numba" and not HAS_NUMBA:
        return "numpy"
    if forced == "numba":
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _pick_backend()


def _configure_threads() -> None:
    raw = os.environ.get("MAJORANT_THREADS", "").strip()
    if not raw or not HAS_NUMBA:
        return
    try:
        count = max(1, int(raw))
    except ValueError:
        return
    import numba

    try:
        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    except ValueError:
        pass


_configure_threads()


def rotation_sweep_numpy(ia, ib, c, s, out) -> None:
    """Apply plane rotations to the rows of ``out``, in place and in order.

    Rotation ``r`` replaces rows ``i = ia[r]`` and ``j = ib[r]`` by
    ``c[r]*row_i + s[r]*row_j`` and ``-s[r]*row_i + c[r]*row_j``.  The
    sequence is applied left to right; rotations do not commute, so the
    order is part of the contract.
    """
    for r in range(len(ia)):
        i = int(ia[r])
        j = int(ib[r])
        xi = out[i].copy()
        xj = out[j]
        out[i] = c[r] * xi + s[r] * xj
        out[j] = -s[r] * xi + c[r] * xj


def two_cell_search_numpy(s1, s2, a1, a2, m):
    """Grid search over two-cell realizations, numpy backend.

    Scans ``R(u) @ diag(s1*e^{i*w}, s2*e^{-i*w}) @ R(v)`` for ``u, v, w`` on
    uniform ``m``-point grids over ``[0, pi/2]`` and returns
    ``(best_dev, u, w, v)`` where ``best_dev`` is the smallest value of
    ``max(||M11| - a1|, ||M22| - a2|)``.  Outer diagonal phases never move
    the diagonal moduli, so this three-angle family is exhaustive for them.
    """
    grid = np.linspace(0.0, np.pi / 2.0, m)
    cu = np.cos(grid)
    su = np.sin(grid)
    x = np.outer(cu, cu)
    y = np.outer(su, su)
    q1 = (s1 * x) ** 2 + (s2 * y) ** 2
    q2 = (s2 * x) ** 2 + (s1 * y) ** 2
    b = 2.0 * s1 * s2 * x * y
    best = np.inf
    best_iu = best_iv = best_iw = 0
    cw = np.cos(2.0 * grid)
    for iw in range(m):
        m1 = np.sqrt(np.maximum(q1 - b * cw[iw], 0.0))
        m2 = np.sqrt(np.maximum(q2 - b * cw[iw], 0.0))
        dev = np.maximum(np.abs(m1 - a1), np.abs(m2 - a2))
        flat = int(np.argmin(dev))
        if dev.flat[flat] < best:
            best = float(dev.flat[flat])
            best_iu, best_iv = divmod(flat, m)
            best_iw = iw
    return best, grid[best_iu], grid[best_iw], grid[best_iv]


if HAS_NUMBA:

    @njit(cache=True)
    def rotation_sweep_numba(ia, ib, c, s, out):  # pragma: no cover
        width = out.shape[1]
        for r in range(ia.shape[0]):
            i = ia[r]
            j = ib[r]
            cr = c[r]
            sr = s[r]
            for col in range(width):
                xi = out[i, col]
                xj = out[j, col]
                out[i, col] = cr * xi + sr * xj
                out[j, col] = -sr * xi + cr * xj

    @njit(cache=True, fastmath=True)
    def two_cell_search_numba(s1, s2, a1, a2, m):  # pragma: no cover
        step = (np.pi / 2.0) / (m - 1)
        best = np.inf
        best_iu = 0
        best_iv = 0
        best_iw = 0
        for iu in range(m):
            u = iu * step
            cu = np.cos(u)
            su = np.sin(u)
            for iv in range(m):
                v = iv * step
                x = cu * np.cos(v)
                y = su * np.sin(v)
                q1 = (s1 * x) ** 2 + (s2 * y) ** 2
                q2 = (s2 * x) ** 2 + (s1 * y) ** 2
                b = 2.0 * s1 * s2 * x * y
                # b >= 0 on this grid, so |M11| sweeps [sqrt(q1-b), sqrt(q1+b)]
                lo = np.sqrt(max(q1 - b, 0.0))
                hi = np.sqrt(q1 + b)
                if a1 < lo:
                    reach = lo - a1
                elif a1 > hi:
                    reach = a1 - hi
                else:
                    reach = 0.0
                if reach >= best:
                    continue
                for iw in range(m):
                    w = np.cos(2.0 * iw * step)
                    m1 = np.sqrt(max(q1 - b * w, 0.0))
                    d1 = abs(m1 - a1)
                    if d1 >= best:
                        continue
                    m2 = np.sqrt(max(q2 - b * w, 0.0))
                    d2 = abs(m2 - a2)
                    dev = d1 if d1 > d2 else d2
                    if dev < best:
                        best = dev
                        best_iu = iu
                        best_iv = iv
                        best_iw = iw
        return best, best_iu * step, best_iw * step, best_iv * step


if BACKEND == "numba":
    rotation_sweep = rotation_sweep_numba
    two_cell_search = two_cell_search_numba
else:
    rotation_sweep = rotation_sweep_numpy
    two_cell_search = two_cell_search_numpy
