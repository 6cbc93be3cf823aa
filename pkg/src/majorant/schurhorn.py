"""Prescribed-diagonal construction inside a unitary orbit.

Given a self-adjoint matrix and a compatible list of diagonal entries,
``realize_schur_horn`` produces the conjugating unitary by a deterministic
sequence of plane rotations, one per requested entry.  Each step picks the
tightest pair of available diagonal values bracketing the next target,
rotates in that plane to land the target exactly, and returns the leftover
value to the pool; the residual problem stays feasible, so the recursion
never strands a target.  ``realize_sign_expectation`` specializes the
machinery to the two-point spectrum {+1, -1}.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._kernels import rotation_sweep
from .errors import InvariantViolation, PreconditionError
from .matrixmodel import FactorElement, DiagonalElement, spectral_resolution
from .profile import DEFAULT_TOL, rearrangement_order

# accumulated rotations are re-orthonormalized this often to bound drift
_REORTH_EVERY = 64


def _as_real_vector(values, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{label} must be a non-empty 1-d real sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{label} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class SchurHornInstance:
    """A target diagonal and the self-adjoint source it must be cut from.

    The source is either a full matrix or just its eigenvalue list; the
    vector form saves the diagonalization when the caller already works in
    an eigenbasis.
    """

    target: np.ndarray
    source: Union[FactorElement, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "target", _as_real_vector(self.target, "target"))
        self.target.setflags(write=False)
        if not isinstance(self.source, FactorElement):
            src = _as_real_vector(self.source, "source")
            src.setflags(write=False)
            object.__setattr__(self, "source", src)
        if self.source_n != self.target.size:
            raise ValueError("target length must match the source dimension")

    @property
    def source_n(self) -> int:
        if isinstance(self.source, FactorElement):
            return self.source.n
        return self.source.size

    @property
    def n(self) -> int:
        return self.target.size

    def eigenvalues(self, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Source spectrum sorted non-increasingly."""
        if isinstance(self.source, FactorElement):
            from .matrixmodel import eigenvalue_profile

            return eigenvalue_profile(self.source, tol=tol).values
        return self.source[rearrangement_order(self.source)]

    def feasible(self, tol: float = DEFAULT_TOL) -> bool:
        lam = self.eigenvalues(tol)
        alpha = self.target[rearrangement_order(self.target)]
        return feasible_schur_horn(lam, alpha, tol=tol)


def feasible_schur_horn(lam, alpha, tol: float = DEFAULT_TOL) -> bool:
    """Partial-sum test: every prefix of alpha below lam's, totals equal."""
    lam = _as_real_vector(lam, "lam")
    alpha = _as_real_vector(alpha, "alpha")
    if lam.size != alpha.size:
        raise ValueError("length mismatch")
    if np.any(np.diff(lam) > tol) or np.any(np.diff(alpha) > tol):
        raise PreconditionError("inputs must be sorted non-increasingly")
    margins = np.cumsum(lam) - np.cumsum(alpha)
    return bool(np.min(margins) >= -tol and abs(margins[-1]) <= tol)


def _reorthonormalize(R: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(R)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def realize_schur_horn(
    inst: SchurHornInstance, tol: float = DEFAULT_TOL
) -> tuple[FactorElement, FactorElement]:
    """Conjugate the source onto the requested diagonal.

    Returns (U, S) with S = U T U*, diag(S) equal to the target entrywise
    in the order requested, and the spectrum untouched.  Exactly n - 1
    planned rotations; targets already present in the pool cost an identity
    step.
    """
    n = inst.n
    lam_desc = inst.eigenvalues(tol)
    alpha_desc = inst.target[rearrangement_order(inst.target)]
    if not feasible_schur_horn(lam_desc, alpha_desc, tol=tol):
        raise PreconditionError("target diagonal is not majorized by the spectrum")
    if isinstance(inst.source, FactorElement):
        frame_adj = spectral_resolution(inst.source, tol=tol).frame.conj().T
    else:
        # positions of the sorted values inside the input vector
        src_pos = rearrangement_order(inst.source)
        frame = np.zeros((n, n))
        frame[src_pos, np.arange(n)] = 1.0
        frame_adj = frame.T

    # pool of unclaimed diagonal values, ascending, with their coordinates
    # in the sorted eigenbasis
    vals = list(lam_desc[::-1])
    pos = list(range(n - 1, -1, -1))
    R = np.eye(n)
    perm = np.empty(n, dtype=np.int64)
    pend_i, pend_j, pend_c, pend_s = [], [], [], []

    def _flush():
        if pend_i:
            rotation_sweep(
                np.asarray(pend_i, dtype=np.int64),
                np.asarray(pend_j, dtype=np.int64),
                np.asarray(pend_c, dtype=np.float64),
                np.asarray(pend_s, dtype=np.float64),
                R,
            )
            pend_i.clear()
            pend_j.clear()
            pend_c.clear()
            pend_s.clear()

    for k, t in enumerate(inst.target):
        t = float(t)
        if len(vals) == 1:
            perm[k] = pos.pop(0)
            vals.pop(0)
            continue
        idx = bisect.bisect_left(vals, t)
        if idx < len(vals) and vals[idx] == t:
            perm[k] = pos.pop(idx)
            vals.pop(idx)
            continue
        if idx == len(vals) or idx == 0:
            # target outside the pool range: feasibility bounds the gap by
            # the tolerance, so claim the nearest extreme as-is
            at = -1 if idx else 0
            perm[k] = pos.pop(at)
            vals.pop(at)
            continue
        hi, lo = vals[idx], vals[idx - 1]
        pi, pj = pos[idx], pos[idx - 1]
        c2 = (t - lo) / (hi - lo)
        pend_i.append(pi)
        pend_j.append(pj)
        pend_c.append(np.sqrt(c2))
        pend_s.append(-np.sqrt(1.0 - c2))
        perm[k] = pi
        vals[idx - 1] = hi + lo - t
        vals.pop(idx)
        pos.pop(idx)
        if len(pend_i) == _REORTH_EVERY:
            _flush()
            R = _reorthonormalize(R)
    if vals:
        raise InvariantViolation("rotation plan left unclaimed diagonal values")
    _flush()

    S_mid = (R * lam_desc) @ R.T
    S = S_mid[np.ix_(perm, perm)]
    U = R[perm, :] @ frame_adj
    return FactorElement(U), FactorElement(S)


def realize_sign_expectation(
    B, beta: float = None, tol: float = DEFAULT_TOL
) -> FactorElement:
    """A self-adjoint unitary whose diagonal is the given contraction.

    The spectrum {+1, -1} quantizes the achievable traces to a lattice of
    spacing 2/n; the trace of B is moved to the nearest lattice point by
    shrinking entries from the last cell backward, never by more than 1/n
    in total.  Callers recover that perturbation as diag(result) - B.
    """
    if isinstance(B, DiagonalElement):
        if np.max(np.abs(B.diag.imag)) > tol:
            raise PreconditionError("diagonal must be real")
        b = B.diag.real.copy()
    else:
        b = _as_real_vector(B, "B").copy()
    n = b.size
    if np.max(np.abs(b)) > 1.0 + tol:
        raise PreconditionError("entries must lie in [-1, 1]")
    b = np.clip(b, -1.0, 1.0)

    total = float(np.sum(b))
    if beta is None:
        m = int(round((n + total) / 2.0))
    else:
        if not 0.0 <= beta <= 1.0:
            raise PreconditionError("beta must lie in [0, 1]")
        if abs(total / n - (2.0 * beta - 1.0)) > 1.0 / n + tol:
            raise PreconditionError("beta is inconsistent with the trace of B")
        m = int(round(n * beta))
    m = min(max(m, 0), n)

    # move the trace onto the lattice, cascading when a cell saturates
    need = float(2 * m - n) - total
    i = n - 1
    while abs(need) > 16 * np.finfo(np.float64).eps * n and i >= 0:
        room = (1.0 - b[i]) if need > 0 else (b[i] + 1.0)
        step = need if abs(need) <= room else np.copysign(room, need)
        b[i] += step
        need -= step
        i -= 1
    if abs(need) > n * tol:
        raise InvariantViolation("trace adjustment failed to reach the lattice")

    spectrum = np.concatenate([np.ones(m), -np.ones(n - m)])
    _, S = realize_schur_horn(SchurHornInstance(target=b, source=spectrum), tol=tol)
    return S
