"""Staged construction of two-sided unitary factors with a prescribed diagonal.

The solver decides whether a diagonal target is reachable from a given
matrix by multiplying unitaries on both sides, and when it is, builds the
factors.  The pipeline: strip phases and polar parts to reduce to positive
data; split the cell line at the balance point where accumulated surplus
first covers the deficit; realize the balanced block by conjugation onto a
prescribed diagonal; realize the strictly dominated block by interval
partition, spectral alignment, and a halving cascade of paired rotations.

Every shortcut the finite model cannot take is charged to
``truncation_error``, the l1 mass of unresolved diagonal defects, so that
``diag_residual <= truncation_error + n*tol`` holds for every result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import Infeasible, InvariantViolation, PreconditionError
from .matrixmodel import (
    DiagonalElement,
    FactorElement,
    eigenvalue_profile,
    polar,
    singular_profile,
    spectral_resolution,
)
from .profile import DEFAULT_TOL, StepProfile, rearrangement_order, submajorizes
from .schurhorn import (
    SchurHornInstance,
    feasible_schur_horn,
    realize_schur_horn,
    realize_sign_expectation,
)

STAGE_KINDS = (
    "reduce",
    "general-split",
    "dominance",
    "strict",
    "complete",
    "zero-diag",
    "schur-horn",
)


@dataclass
class StageRecord:
    """One pipeline stage: what ran, on which cells, with what residuals."""

    kind: str
    cells: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in STAGE_KINDS:
            raise ValueError(f"unknown stage kind: {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cells": {k: [int(c) for c in v] for k, v in self.cells.items()},
            "data": self.data,
        }


@dataclass
class StageTrace:
    stages: list = field(default_factory=list)

    def add(self, kind: str, cells: dict = None, **data) -> StageRecord:
        rec = StageRecord(kind=kind, cells=cells or {}, data=data)
        self.stages.append(rec)
        return rec

    def extend(self, other: "StageTrace"):
        self.stages.extend(other.stages)

    def find(self, key: str):
        """Last recorded value under a data key, scanning stages in order."""
        found = None
        for rec in self.stages:
            if key in rec.data:
                found = rec.data[key]
        return found

    def to_dict(self) -> dict:
        return {"stages": [rec.to_dict() for rec in self.stages]}


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class ThompsonInstance:
    """A target diagonal A and the matrix T it should be carved from.

    Feasibility (the submajorization of |A| by the singular values of T) is
    deliberately not enforced at construction: infeasible instances are
    legitimate inputs whose verdict is part of the solver contract.
    """

    A: DiagonalElement
    T: FactorElement

    def __post_init__(self):
        if not isinstance(self.A, DiagonalElement) or not isinstance(self.T, FactorElement):
            raise TypeError("expected a DiagonalElement target and a FactorElement source")
        if self.A.n != self.T.n:
            raise ValueError("target and source dimensions differ")
        if not _is_power_of_two(self.A.n):
            raise PreconditionError("dimension must be a power of two for the halving stage")

    @property
    def n(self) -> int:
        return self.A.n

    def feasibility_report(self, tol: float = DEFAULT_TOL):
        return submajorizes(
            StepProfile(np.abs(self.A.diag)), singular_profile(self.T), tol=tol
        )

    def to_json(self) -> dict:
        return {"A": self.A.to_json(), "T": self.T.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "ThompsonInstance":
        return cls(
            A=DiagonalElement.from_json(data["A"]),
            T=FactorElement.from_json(data["T"]),
        )


@dataclass
class RealizationResult:
    U: FactorElement
    V: FactorElement
    S: FactorElement
    diag_residual: float
    sv_drift: float
    truncation_error: float
    trace: StageTrace

    def to_json(self) -> dict:
        return {
            "U": self.U.to_json(),
            "V": self.V.to_json(),
            "S": self.S.to_json(),
            "diag_residual": self.diag_residual,
            "sv_drift": self.sv_drift,
            "truncation_error": self.truncation_error,
            "trace": self.trace.to_dict(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RealizationResult":
        trace = StageTrace()
        for rec in data.get("trace", {}).get("stages", []):
            trace.add(rec["kind"], cells=rec.get("cells", {}), **rec.get("data", {}))
        return cls(
            U=FactorElement.from_json(data["U"]),
            V=FactorElement.from_json(data["V"]),
            S=FactorElement.from_json(data["S"]),
            diag_residual=float(data["diag_residual"]),
            sv_drift=float(data["sv_drift"]),
            truncation_error=float(data["truncation_error"]),
            trace=trace,
        )


def _finish_result(
    A: DiagonalElement,
    T: FactorElement,
    U_mat: np.ndarray,
    V_mat: np.ndarray,
    truncation: float,
    trace: StageTrace,
) -> RealizationResult:
    U = FactorElement(U_mat)
    V = FactorElement(V_mat)
    S = FactorElement(U.entries @ T.entries @ V.entries)
    diag_residual = float(np.max(np.abs(np.diag(S.entries) - A.diag)))
    sv_drift = float(
        np.max(np.abs(singular_profile(S).values - singular_profile(T).values))
    )
    return RealizationResult(
        U=U,
        V=V,
        S=S,
        diag_residual=diag_residual,
        sv_drift=sv_drift,
        truncation_error=float(truncation),
        trace=trace,
    )


def _positive_diag_values(A: DiagonalElement, tol: float, scale: float) -> np.ndarray:
    slack = max(1.0, scale) * A.n * tol
    if np.max(np.abs(A.diag.imag)) > slack or np.min(A.diag.real) < -slack:
        raise PreconditionError("target diagonal must be positive")
    return np.clip(A.diag.real, 0.0, None)


def _positive_spectrum(T: FactorElement, tol: float) -> np.ndarray:
    prof = eigenvalue_profile(T, tol=tol)
    scale = max(1.0, abs(prof.values[0]))
    if prof.values[-1] < -T.n * tol * scale:
        raise PreconditionError("matrix must be positive")
    return np.clip(prof.values, 0.0, None)


def _placement_matrix(place: np.ndarray) -> np.ndarray:
    n = len(place)
    B = np.zeros((n, n))
    B[np.asarray(place), np.arange(n)] = 1.0
    return B


def _norm_two_gap(X: np.ndarray) -> float:
    """Normalized 2-norm distance from the identity."""
    n = X.shape[0]
    return float(np.linalg.norm(np.eye(n) - X, "fro") / np.sqrt(n))


# ---------------------------------------------------------------------------
# complete dominance: every target value below every spectral value


def complete_dominance_step(
    A: DiagonalElement, T: FactorElement, tol: float = DEFAULT_TOL
):
    """One halving move: land the larger half of the targets exactly.

    Returns (P, U, V, A2, T2).  P projects onto the coordinates holding the
    n/2 largest targets; U and V are the two-sided factors for this move,
    so S = U T V has diagonal A on the range of P; (A2, T2) is the
    half-size residual problem, which again satisfies complete dominance.
    """
    n = T.n
    if n % 2 != 0:
        raise PreconditionError("dimension must be even")
    sig = _positive_spectrum(T, tol)
    norm_t = float(sig[0])
    a = _positive_diag_values(A, tol, norm_t)
    if a.size != n:
        raise PreconditionError("target and source dimensions differ")
    if sig[-1] <= np.sqrt(tol) * norm_t:
        raise PreconditionError(
            "matrix is numerically singular; route this block through zero_diagonal"
        )
    if np.max(a) > sig[-1] + n * tol * max(1.0, norm_t):
        raise PreconditionError("complete dominance fails: a target exceeds the least spectral value")

    half = n // 2
    frame = spectral_resolution(T, tol=tol).frame
    order = np.lexsort((np.arange(n), -a))
    p_coords = order[:half]
    q_coords = order[half:]
    # spectral ranks: bottom half to the large-target coordinates, top half
    # to the rest, both matched in decreasing-target order
    place = np.empty(n, dtype=np.int64)
    place[half:] = p_coords
    place[:half] = q_coords
    W = _placement_matrix(place) @ frame.conj().T
    S = W @ T.entries @ W.conj().T

    S1 = S[np.ix_(p_coords, p_coords)]
    H = np.diag(a[p_coords].astype(np.complex128)) @ np.linalg.inv(S1)
    if np.linalg.norm(H, 2) > 1.0 + n * tol:
        raise PreconditionError("contraction check failed: dominance precondition violated")

    def _defect_root(M):
        # square root of I - M with small negative eigenvalues clamped
        w, v = np.linalg.eigh((M + M.conj().T) / 2.0)
        gap = 1.0 - w
        if np.min(gap) < -n * tol * max(1.0, norm_t):
            raise PreconditionError("contraction check failed: dominance precondition violated")
        return (v * np.sqrt(np.clip(gap, 0.0, None))) @ v.conj().T

    right_root = _defect_root(H @ H.conj().T)
    left_root = _defect_root(H.conj().T @ H)
    V_block = np.eye(n, dtype=np.complex128)
    V_block[np.ix_(p_coords, p_coords)] = H
    V_block[np.ix_(p_coords, q_coords)] = right_root
    V_block[np.ix_(q_coords, p_coords)] = left_root
    V_block[np.ix_(q_coords, q_coords)] = -H.conj().T

    P = FactorElement(np.diag(np.isin(np.arange(n), p_coords).astype(np.complex128)))
    U = FactorElement(V_block @ W)
    V = FactorElement(W.conj().T)
    A2 = DiagonalElement(a[q_coords])
    S2 = S[np.ix_(q_coords, q_coords)]
    T2 = FactorElement(-H.conj().T @ S2)

    slack = float(np.min(np.linalg.svd(T2.entries, compute_uv=False)) - np.max(a[q_coords]))
    if slack < -1e-8 * max(1.0, norm_t):
        raise InvariantViolation(
            f"residual block lost complete dominance (slack {slack:.3e})"
        )
    return P, U, V, A2, T2


def zero_diagonal(T: FactorElement, tol: float = DEFAULT_TOL):
    """Two-sided factors killing the whole diagonal of a positive matrix.

    Returns (U, V) with diag(U T V) = 0 up to n*tol: V rotates the
    eigenbasis onto the coordinate axes and U swaps the two half-blocks, a
    permutation with no fixed coordinate.
    """
    n = T.n
    if n % 2 != 0:
        raise PreconditionError("dimension must be even")
    _positive_spectrum(T, tol)
    frame = spectral_resolution(T, tol=tol).frame
    half = n // 2
    swap = np.zeros((n, n))
    swap[np.arange(half), np.arange(half) + half] = 1.0
    swap[np.arange(half) + half, np.arange(half)] = 1.0
    return FactorElement(swap @ frame.conj().T), FactorElement(frame)


class _HalvingPlan:
    """Collected directives of the pairing recursion, executed afterwards."""

    def __init__(self, zero_gate: float, depth: Optional[int],
                 abs_tol: float, h_slack: float):
        self.zero_gate = zero_gate
        self.depth = depth
        self.abs_tol = abs_tol
        self.h_slack = h_slack
        self.rotations = {}  # level -> list of (p_coord, q_coord, h)
        self.levels_data = {}  # level -> (dominance slack, pair count)
        self.terminals = []  # (c1, c2, s1, s2, a1, a2)
        self.zeros = []  # (coords in placement order, supply, targets)
        self.frozen = []  # (coords, supply, targets) stopped by the depth cap
        self.ones = []  # (coord, supply value, target)


def _assign(sig, tgt_vals, tgt_coords, level, plan):
    """Place spectral ranks and plan rotations for one block.

    sig is the block supply sorted non-increasingly; tgt_vals[i] is the
    target at coordinate tgt_coords[i].  Returns place with place[k] =
    coordinate receiving supply rank k.
    """
    L = sig.size
    if L == 1:
        plan.ones.append((int(tgt_coords[0]), float(sig[0]), float(tgt_vals[0])))
        return np.array([tgt_coords[0]], dtype=np.int64)
    order = np.lexsort((tgt_coords, -tgt_vals))
    if sig[-1] <= plan.zero_gate:
        place = np.asarray(tgt_coords, dtype=np.int64)[order]
        if np.max(tgt_vals) > plan.zero_gate + plan.abs_tol:
            raise InvariantViolation(
                "a singular block carries targets above the zero gate"
            )
        plan.zeros.append((place, np.array(sig), np.asarray(tgt_vals)[order]))
        return place
    if L == 2:
        c1, c2 = int(tgt_coords[order[0]]), int(tgt_coords[order[1]])
        plan.terminals.append(
            (c1, c2, float(sig[0]), float(sig[1]),
             float(tgt_vals[order[0]]), float(tgt_vals[order[1]]))
        )
        return np.array([c1, c2], dtype=np.int64)
    if plan.depth is not None and level > plan.depth:
        place = np.asarray(tgt_coords, dtype=np.int64)[order]
        plan.frozen.append((place, np.array(sig), np.asarray(tgt_vals)[order]))
        return place

    half = L // 2
    p_idx = order[:half]
    q_idx = order[half:]
    p_coords = np.asarray(tgt_coords, dtype=np.int64)[p_idx]
    a_p = np.asarray(tgt_vals)[p_idx]
    sig_top = sig[:half]
    sig_bot = sig[half:]
    h = a_p / sig_bot
    if np.max(h) > 1.0 + plan.h_slack:
        raise InvariantViolation("pair ratio exceeded 1: dominance was lost in planning")
    h = np.minimum(h, 1.0)
    h_order = np.argsort(-h, kind="stable")
    r = sig_top * h[h_order]  # non-increasing: both factors are

    child_place = _assign(
        r, np.asarray(tgt_vals)[q_idx], np.asarray(tgt_coords, dtype=np.int64)[q_idx],
        level + 1, plan,
    )
    rho_of_pair = np.empty(half, dtype=np.int64)
    rho_of_pair[h_order] = np.arange(half)
    q_for_pair = child_place[rho_of_pair]
    plan.rotations.setdefault(level, []).extend(
        (int(p_coords[j]), int(q_for_pair[j]), float(h[j])) for j in range(half)
    )
    # the recursion is a chain, so each level has exactly one writer
    child_max = float(np.max(np.asarray(tgt_vals)[q_idx]))
    plan.levels_data[level] = (float(np.min(r)) - child_max, half)
    place = np.empty(L, dtype=np.int64)
    place[:half] = child_place
    place[half:] = p_coords
    return place


def _terminal_factors(s1, s2, a1, a2):
    """Angles and realized diagonal for the closing 2-by-2 block.

    Supply s1 >= s2 >= 0 and targets a1 >= a2 >= 0; the reachable diagonal
    differences are capped by s1 - s2, and the overshoot is the block's
    defect.
    """
    ssum = s1 + s2
    if ssum <= 0.0:
        return 0.0, 0.0, (s1, s2), abs(a1 - s1) + abs(a2 - s2)
    dlim = s1 - s2
    dprime = min(a1 - a2, dlim)
    C1 = dprime / dlim if dlim > 0.0 else 1.0
    C2 = min((a1 + a2) / ssum, 1.0)
    u = np.arccos(np.clip(C1, -1.0, 1.0))
    v = np.arccos(np.clip(C2, -1.0, 1.0))
    theta_a = (u + v) / 2.0
    theta_b = (v - u) / 2.0
    r1 = (C2 * ssum + C1 * dlim) / 2.0
    r2 = (C2 * ssum - C1 * dlim) / 2.0
    defect = abs(a1 - r1) + abs(a2 - r2)
    return theta_a, theta_b, (r1, r2), defect


def _embed_rotation(mat, c1, c2, theta):
    c, s = np.cos(theta), np.sin(theta)
    mat[c1, c1] = c
    mat[c1, c2] = -s
    mat[c2, c1] = s
    mat[c2, c2] = c


def complete_dominance_solve(
    A: DiagonalElement,
    T: FactorElement,
    depth: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> RealizationResult:
    """Full halving cascade under complete dominance, dimension 2^k.

    All halving work is carried by the right-hand factors; the left factor
    is spent once, up front, on spectral alignment plus the folded terminal
    and permutation moves.  Later left increments are therefore exactly
    zero and the geometric step bound holds with room to spare; the right
    increments shrink geometrically as the active blocks do.  ``depth``
    caps the number of halving levels, charging any block frozen early to
    the truncation mass.
    """
    n = T.n
    if not _is_power_of_two(n):
        raise PreconditionError("dimension must be a power of two")
    sig = _positive_spectrum(T, tol)
    norm_t = float(sig[0])
    a = _positive_diag_values(A, tol, norm_t)
    if a.size != n:
        raise PreconditionError("target and source dimensions differ")
    if np.max(a) > sig[-1] + n * tol * max(1.0, norm_t):
        raise PreconditionError("complete dominance fails: a target exceeds the least spectral value")
    trace = StageTrace()

    if n == 1:
        defect = abs(float(sig[0]) - float(a[0]))
        trace.add("complete", terminal=True, size=1, defect=defect,
                  u_increments=[0.0], v_increments=[0.0])
        eye = np.eye(1, dtype=np.complex128)
        return _finish_result(A, T, eye, eye, defect, trace)

    gate = np.sqrt(tol) * norm_t
    if sig[-1] <= gate:
        # numerically singular: all targets sit under the gate, so a
        # diagonal of zeros is within the allowed defect
        if np.max(a) > gate + n * tol * max(1.0, norm_t):
            raise InvariantViolation("singular matrix with targets above the zero gate")
        UL, VR = zero_diagonal(T, tol=tol)
        truncation = float(np.sum(a))
        trace.add("zero-diag", cells={"all": list(range(n))},
                  defect=truncation, u_increments=[_norm_two_gap(UL.entries)],
                  v_increments=[_norm_two_gap(VR.entries)])
        return _finish_result(A, T, UL.entries, VR.entries, truncation, trace)

    frame = spectral_resolution(T, tol=tol).frame
    slack_tol = n * tol * max(1.0, norm_t)
    plan = _HalvingPlan(zero_gate=gate, depth=depth,
                        abs_tol=slack_tol, h_slack=slack_tol)
    placement = _assign(sig, a, np.arange(n), 1, plan)
    W1 = _placement_matrix(placement) @ frame.conj().T

    levels = sorted(plan.rotations)
    right_factors = []
    for lv in levels:
        R = np.eye(n)
        for p, q, h in plan.rotations[lv]:
            s = np.sqrt(max(0.0, 1.0 - h * h))
            R[p, p] = h
            R[q, p] = -s
            R[p, q] = s
            R[q, q] = h
        right_factors.append(R)
        slack, pairs = plan.levels_data[lv]
        trace.add("complete", level=lv, pairs=pairs, dominance_slack=slack,
                  v_increment=_norm_two_gap(R))

    truncation = 0.0
    left_extra = np.eye(n)
    right_term = np.eye(n)
    for c1, c2, s1, s2, a1, a2 in plan.terminals:
        theta_a, theta_b, realized, defect = _terminal_factors(s1, s2, a1, a2)
        _embed_rotation(left_extra, c1, c2, theta_a)
        _embed_rotation(right_term, c1, c2, theta_b)
        truncation += defect
        trace.add("complete", cells={"block": [c1, c2]}, terminal=True, size=2,
                  defect=defect, realized=list(realized))
    for place, supply, targets in plan.zeros:
        L = len(place)
        shift = L // 2
        for c in place:
            left_extra[c, c] = 0.0
        for i, c in enumerate(place):
            left_extra[c, place[(i + shift) % L]] = 1.0
        defect = float(np.sum(np.abs(targets)))
        truncation += defect
        trace.add("zero-diag", cells={"block": [int(c) for c in place]}, defect=defect)
    for place, supply, targets in plan.frozen:
        defect = float(np.sum(np.abs(supply - targets)))
        truncation += defect
        trace.add("complete", cells={"block": [int(c) for c in place]},
                  frozen=True, defect=defect)
    for coord, value, target in plan.ones:
        defect = abs(value - target)
        truncation += defect
        trace.add("complete", cells={"block": [coord]}, terminal=True, size=1,
                  defect=defect)

    U_mat = left_extra @ W1
    V_mat = W1.conj().T
    v_increments = []
    for i, R in enumerate(right_factors):
        if i == 0:
            v_increments.append(_norm_two_gap(V_mat @ R))
        else:
            v_increments.append(_norm_two_gap(R))
        V_mat = V_mat @ R
    if not right_factors:
        v_increments.append(_norm_two_gap(V_mat @ right_term))
    else:
        v_increments.append(_norm_two_gap(right_term))
    V_mat = V_mat @ right_term

    u_increments = [_norm_two_gap(U_mat)] + [0.0] * len(v_increments[1:])
    for m, val in enumerate(u_increments[1:], start=1):
        if val > 2.0 ** (-(m - 1)) + 1e-8:
            raise InvariantViolation(
                f"left increment {val:.3e} at step {m + 1} broke the geometric bound"
            )
    trace.add("complete", summary=True, levels=len(levels),
              u_increments=u_increments, v_increments=v_increments)
    return _finish_result(A, T, U_mat, V_mat, truncation, trace)


# ---------------------------------------------------------------------------
# strict dominance: a uniform gap delta under the spectral profile


def good_interval_partition(a: StepProfile, t: StepProfile, delta: float):
    """Greedy split of the cell line into intervals where max a <= min t.

    Both profiles must be sorted non-increasingly with a + delta <= t
    cellwise.  Extends the current interval rightward while its largest
    target stays below its smallest spectral value, cutting otherwise;
    sortedness makes both extremes one-sided, so the scan is linear.
    """
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if not (a.is_sorted and t.is_sorted):
        raise PreconditionError("profiles must be sorted non-increasingly")
    if a.n != t.n:
        raise PreconditionError("profiles must share a resolution")
    bad = np.nonzero(a.values + delta > t.values)[0]
    if bad.size:
        raise PreconditionError(f"gap precondition fails at cell {int(bad[0])}")
    intervals = []
    start = 0
    for i in range(1, a.n):
        if a.values[start] > t.values[i]:
            intervals.append((start, i))
            start = i
    intervals.append((start, a.n))
    return intervals


def _dyadic_chunks(start: int, stop: int):
    """Split [start, stop) into power-of-two runs, largest first."""
    chunks = []
    size = stop - start
    while size > 0:
        p = 1 << (size.bit_length() - 1)
        chunks.append((start, start + p))
        start += p
        size -= p
    return chunks


def strict_dominance_solve(
    A: DiagonalElement,
    T: FactorElement,
    delta: float,
    tol: float = DEFAULT_TOL,
) -> RealizationResult:
    """Blockwise halving under a uniform gap: a(s) + delta <= t(s).

    Good intervals are solved independently on matching spectral blocks and
    direct-summed in ascending order; inside an interval, non-dyadic sizes
    are split into power-of-two runs, whose 1-cell leftovers surface as
    truncation mass.
    """
    sig = _positive_spectrum(T, tol)
    norm_t = float(sig[0])
    a = _positive_diag_values(A, tol, norm_t)
    n = T.n
    if a.size != n:
        raise PreconditionError("target and source dimensions differ")
    ord_a = rearrangement_order(a)
    a_sorted = a[ord_a]
    intervals = good_interval_partition(
        StepProfile(a_sorted), StepProfile(sig), delta
    )
    frame = spectral_resolution(T, tol=tol).frame

    blk_u = np.zeros((n, n), dtype=np.complex128)
    blk_v = np.zeros((n, n), dtype=np.complex128)
    truncation = 0.0
    trace = StageTrace()
    chunk_notes = []
    for s, e in intervals:
        for cs, ce in _dyadic_chunks(s, e):
            sub_a = DiagonalElement(a_sorted[cs:ce])
            sub_t = FactorElement(np.diag(sig[cs:ce].astype(np.complex128)))
            sub = complete_dominance_solve(sub_a, sub_t, tol=tol)
            blk_u[cs:ce, cs:ce] = sub.U.entries
            blk_v[cs:ce, cs:ce] = sub.V.entries
            truncation += sub.truncation_error
            chunk_notes.append(
                {"chunk": [int(cs), int(ce)], "residual": sub.diag_residual,
                 "truncation": sub.truncation_error}
            )
    trace.add(
        "strict",
        cells={f"interval_{i}": list(range(s, e)) for i, (s, e) in enumerate(intervals)},
        delta=float(delta),
        chunks=chunk_notes,
    )

    P_a = _placement_matrix(ord_a)
    U_mat = P_a @ blk_u @ frame.conj().T
    V_mat = frame @ blk_v @ P_a.T
    return _finish_result(A, T, U_mat, V_mat, truncation, trace)


# ---------------------------------------------------------------------------
# plain dominance: cellwise a <= t with no uniform gap


def dominance_solve(
    A: DiagonalElement,
    T: FactorElement,
    strategy: str = "partition",
    tol: float = DEFAULT_TOL,
) -> RealizationResult:
    """Cellwise-dominated targets, by gap bands or by one sign unitary.

    The partition strategy matches equality cells exactly, then groups the
    rest into bands by gap size and hands each band, which has a uniform
    gap, to the strict solver.  The multiplicative strategy divides target
    by spectrum and realizes the resulting contraction as the diagonal of
    a self-adjoint sign unitary in one shot; its only error is the trace
    lattice of the two-point spectrum, at most 1/n.
    """
    if strategy not in ("partition", "multiplicative"):
        raise ValueError(f"unknown strategy: {strategy!r}")
    sig = _positive_spectrum(T, tol)
    norm_t = float(sig[0])
    a = _positive_diag_values(A, tol, norm_t)
    n = T.n
    if a.size != n:
        raise PreconditionError("target and source dimensions differ")
    ord_a = rearrangement_order(a)
    a_sorted = a[ord_a]
    diff = sig - a_sorted
    bad = np.nonzero(diff < -tol * max(1.0, norm_t))[0]
    if bad.size:
        raise PreconditionError(
            f"dominance fails at cell {int(bad[0])}: target exceeds spectrum"
        )
    frame = spectral_resolution(T, tol=tol).frame
    P_a = _placement_matrix(ord_a)
    trace = StageTrace()

    if strategy == "multiplicative":
        ratio = np.where(sig > tol, a_sorted / np.maximum(sig, tol), 0.0)
        ratio = np.clip(ratio, 0.0, 1.0)
        sign_u = realize_sign_expectation(ratio, tol=tol)
        perturbation = np.diag(sign_u.entries).real - ratio
        truncation = float(np.sum(np.abs(perturbation * sig)))
        trace.add(
            "dominance",
            strategy="multiplicative",
            perturbation_l1=float(np.sum(np.abs(perturbation))),
            truncation=truncation,
        )
        U_mat = P_a @ sign_u.entries @ frame.conj().T
        V_mat = frame @ P_a.T
        return _finish_result(A, T, U_mat, V_mat, truncation, trace)

    # partition strategy: equality cells, then bands of comparable gap
    x0 = np.nonzero(np.abs(diff) <= tol * max(1.0, norm_t))[0]
    x0_set = set(x0.tolist())
    bands = {}
    for r in range(n):
        if r in x0_set:
            continue
        gap = diff[r]
        if norm_t <= 0:
            m = n
        else:
            m = int(norm_t // gap) if gap > 0 else n
            m = min(max(m, 1), n)
        bands.setdefault(m, []).append(r)

    blk_u = np.eye(n, dtype=np.complex128)
    blk_v = np.eye(n, dtype=np.complex128)
    truncation = 0.0
    cells = {"X_0": x0.tolist()}
    band_notes = []
    for m in sorted(bands):
        ranks = np.array(bands[m], dtype=np.int64)
        cells[f"X_{m}"] = ranks.tolist()
        delta_m = norm_t / (m + 1) if m < n else tol
        sub_a = DiagonalElement(a_sorted[ranks])
        sub_t = FactorElement(np.diag(sig[ranks].astype(np.complex128)))
        sub = strict_dominance_solve(sub_a, sub_t, delta_m, tol=tol)
        blk_u[np.ix_(ranks, ranks)] = sub.U.entries
        blk_v[np.ix_(ranks, ranks)] = sub.V.entries
        truncation += sub.truncation_error
        band_notes.append(
            {"band": int(m), "delta": float(delta_m), "size": int(ranks.size),
             "residual": sub.diag_residual, "truncation": sub.truncation_error,
             "tail_merged": bool(m == n)}
        )
    trace.add("dominance", cells=cells, strategy="partition", bands=band_notes)
    U_mat = P_a @ blk_u @ frame.conj().T
    V_mat = frame @ blk_v @ P_a.T
    return _finish_result(A, T, U_mat, V_mat, truncation, trace)


# ---------------------------------------------------------------------------
# the general case


def reduce_to_positive(inst: ThompsonInstance, tol: float = DEFAULT_TOL):
    """Strip target phases and the polar part of the source.

    Returns (positive instance, phase).  Solving the positive instance
    with factors (U', V') solves the original with (phase U' W*, V'),
    where W is the polar unitary of T; the phase diagonal carries each
    target's argument, with 1 on vanishing targets.
    """
    phases = np.ones(inst.n, dtype=np.complex128)
    nz = np.abs(inst.A.diag) > 0
    phases[nz] = inst.A.diag[nz] / np.abs(inst.A.diag[nz])
    _, pos = polar(inst.T)
    reduced = ThompsonInstance(
        A=DiagonalElement(np.abs(inst.A.diag)), T=pos
    )
    return reduced, DiagonalElement(phases)


def _water_fill(values: np.ndarray, mass: float) -> np.ndarray:
    """Move the total by `mass`, raising the smallest entries to a common
    level (or lowering the largest for negative mass)."""
    if abs(mass) <= 0.0:
        return values.copy()
    flip = mass < 0
    v = -values if flip else values
    need = abs(mass)
    # raise the k smallest of v to a common level
    asc = np.sort(v)
    total_below = 0.0
    level = asc[-1] + need  # fallback: everything raised
    for k in range(1, asc.size + 1):
        cap = (asc[k] - asc[k - 1]) * k if k < asc.size else np.inf
        if total_below + cap >= need:
            level = asc[k - 1] + (need - total_below) / k
            break
        total_below += cap
    out = np.maximum(v, level)
    return -out if flip else out


def general_solve(
    inst: ThompsonInstance,
    strategy: str = "partition",
    tol: float = DEFAULT_TOL,
) -> RealizationResult:
    """Decide and realize the two-sided diagonal problem.

    Infeasible targets raise Infeasible carrying the margin report.  For
    feasible ones, the cell line splits at the balance point: the prefix
    plus all deficit cells form a block solved by conjugation onto a
    prescribed diagonal (its trace mismatch is water-filled and charged to
    truncation), and the remaining strictly dominated cells go through the
    dominance solver.  Factors are composed with the phase and polar data
    so that diag(U T V) matches the original complex target.
    """
    if strategy not in ("partition", "multiplicative"):
        raise ValueError(f"unknown strategy: {strategy!r}")
    n = inst.n
    report = inst.feasibility_report(tol)
    norm_t = float(singular_profile(inst.T).values[0]) if n else 0.0
    if float(np.min(report.margins)) < -tol * max(1.0, norm_t):
        raise Infeasible(
            "target is not submajorized by the spectrum "
            f"(margin {float(np.min(report.margins)):.3e})",
            report=report,
        )
    trace = StageTrace()

    W_polar, pos = polar(inst.T)
    phases = np.ones(n, dtype=np.complex128)
    nz = np.abs(inst.A.diag) > 0
    phases[nz] = inst.A.diag[nz] / np.abs(inst.A.diag[nz])
    a = np.abs(inst.A.diag)
    trace.add("reduce", polar_gap=float(
        np.linalg.norm(inst.T.entries - W_polar.entries @ pos.entries, 2)
    ))

    sig = _positive_spectrum(pos, tol)
    ord_a = rearrangement_order(a)
    a_sorted = a[ord_a]
    diff = sig - a_sorted
    scaled_tol = tol * max(1.0, norm_t)
    in_x = diff <= scaled_tol
    x_cells = np.nonzero(in_x)[0]
    y_cells = np.nonzero(~in_x)[0]

    base = float(np.sum(diff[in_x]))
    surplus = np.zeros(n + 1)
    surplus[y_cells + 1] = diff[y_cells]
    f_vals = (base + np.cumsum(surplus)) / n
    crossings = np.nonzero(f_vals >= 0.0)[0]
    j0 = int(crossings[0]) if crossings.size else n
    z_mask = np.zeros(n, dtype=bool)
    z_mask[:j0] = True
    z_mask |= in_x
    zr = np.nonzero(z_mask)[0]
    yb = np.nonzero(~z_mask)[0]
    excess = float(np.sum(diff[z_mask]))
    trace.add(
        "general-split",
        cells={"X": x_cells.tolist(), "Y": y_cells.tolist(), "Z": zr.tolist()},
        t0=j0 / n,
        excess=excess,
        margin_min=float(np.min(report.margins)),
    )

    frame = spectral_resolution(pos, tol=tol).frame
    P_a = _placement_matrix(ord_a)
    truncation = 0.0

    if zr.size == 0:
        sub = dominance_solve(DiagonalElement(a_sorted), FactorElement(
            np.diag(sig.astype(np.complex128))), strategy=strategy, tol=tol)
        trace.extend(sub.trace)
        blk_u = sub.U.entries
        blk_v = sub.V.entries
        truncation += sub.truncation_error
        U_pos = P_a @ blk_u @ frame.conj().T
        V_pos = frame @ blk_v @ P_a.T
    else:
        lam1 = sig[zr]
        alpha1 = a_sorted[zr]
        filled = _water_fill(alpha1, excess)
        fill_cost = float(np.sum(np.abs(filled - alpha1)))
        loose = max(tol, n * tol * max(1.0, norm_t))
        filled_desc = filled[rearrangement_order(filled)]
        if not feasible_schur_horn(lam1, filled_desc, tol=loose):
            # water-filling could not restore exact balance: fall back to
            # the spectrum itself and charge the full gap
            filled = lam1.copy()
            fill_cost = float(np.sum(np.abs(filled - alpha1)))
        truncation += fill_cost
        U1, S1 = realize_schur_horn(
            SchurHornInstance(target=filled, source=lam1), tol=loose
        )
        trace.add("schur-horn", cells={"Z": zr.tolist()},
                  fill_cost=fill_cost, excess=excess)

        blk_u = np.zeros((n, n), dtype=np.complex128)
        blk_v = np.zeros((n, n), dtype=np.complex128)
        k1 = zr.size
        grouped = np.concatenate([zr, yb])
        blk_u[:k1, :k1] = U1.entries
        blk_v[:k1, :k1] = U1.adjoint().entries
        if yb.size:
            sub = dominance_solve(
                DiagonalElement(a_sorted[yb]),
                FactorElement(np.diag(sig[yb].astype(np.complex128))),
                strategy=strategy,
                tol=tol,
            )
            trace.extend(sub.trace)
            blk_u[k1:, k1:] = sub.U.entries
            blk_v[k1:, k1:] = sub.V.entries
            truncation += sub.truncation_error
        E = _placement_matrix(grouped)
        U_pos = P_a @ E @ blk_u @ E.T @ frame.conj().T
        V_pos = frame @ E @ blk_v @ E.T @ P_a.T

    U_mat = np.diag(phases) @ U_pos @ W_polar.entries.conj().T
    V_mat = V_pos
    return _finish_result(inst.A, inst.T, U_mat, V_mat, truncation, trace)
