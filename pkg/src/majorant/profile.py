"""Step profiles on the unit interval and their majorization calculus.

A profile models a piecewise-constant function on [0, 1) over ``n`` equal
cells; cell ``k`` is the interval [k/n, (k+1)/n).  Sorted profiles are the
discrete form of non-increasing right-continuous functions, so partial
integrals are exact finite sums and every comparison below is exact up to an
explicit absolute tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

import numpy as np

DEFAULT_TOL = 1e-9


def _as_float_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("profile values must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("profile values must be finite")
    return arr


def rearrangement_order(values) -> np.ndarray:
    """Indices sorting ``values`` non-increasingly, ties by ascending index.

    The stable tie rule makes every spectral-cell assignment downstream a
    deterministic function of the data.
    """
    arr = np.asarray(values, dtype=np.float64)
    return np.argsort(-arr, kind="stable")


@dataclass(frozen=True, eq=False)
class StepProfile:
    """Values of a step function on the uniform grid: ``values[k]`` on cell k."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_values(self.values))
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def is_sorted(self) -> bool:
        """True when the profile is non-increasing."""
        return bool(np.all(np.diff(self.values) <= 0.0))

    def to_json(self) -> list:
        return [float(v) for v in self.values]

    @classmethod
    def from_json(cls, data) -> "StepProfile":
        return cls(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class BorelCellSet:
    """A subset of the n grid cells, kept sorted ascending."""

    cells: np.ndarray
    n: int

    def __post_init__(self):
        arr = np.unique(np.asarray(self.cells, dtype=np.int64))
        if self.n < 1:
            raise ValueError("resolution must be positive")
        if arr.size and (arr[0] < 0 or arr[-1] >= self.n):
            raise ValueError("cells must lie in [0, n)")
        object.__setattr__(self, "cells", arr)
        self.cells.setflags(write=False)

    @property
    def size(self) -> int:
        return self.cells.size

    @property
    def measure(self) -> float:
        return self.cells.size / self.n

    def complement(self) -> "BorelCellSet":
        mask = np.ones(self.n, dtype=bool)
        mask[self.cells] = False
        return BorelCellSet(np.nonzero(mask)[0], self.n)

    def to_json(self) -> list:
        return [int(c) for c in self.cells]

    @classmethod
    def from_json(cls, data, n: int) -> "BorelCellSet":
        return cls(np.asarray(data, dtype=np.int64), n)


@dataclass(frozen=True)
class MajorizationReport:
    """Partial-sum margins and the derived feasibility verdicts.

    ``margins[k-1]`` is the integral of the gap between the rearranged
    absolute profiles over [0, k/n).  ``thompson_finite_ok`` is the extra
    inequality a finite matrix needs beyond submajorization; it is evaluated
    at the report's resolution and is genuinely resolution-dependent, unlike
    the margins, which are invariant under cell replication.
    """

    margins: np.ndarray
    submajorized: bool
    majorized: bool
    trace_gap: float
    thompson_finite_ok: bool
    resolution: int
    tol: float

    def to_dict(self) -> dict:
        return {
            "margins": [float(m) for m in self.margins],
            "submajorized": bool(self.submajorized),
            "majorized": bool(self.majorized),
            "trace_gap": float(self.trace_gap),
            "thompson_finite_ok": bool(self.thompson_finite_ok),
            "resolution": int(self.resolution),
            "tol": float(self.tol),
        }


def rearrange(f: StepProfile) -> StepProfile:
    """The non-increasing rearrangement: same multiset of values, sorted."""
    return StepProfile(f.values[rearrangement_order(f.values)])


def partial_integral(f: StepProfile, t: float) -> float:
    """Exact integral of a sorted profile over [0, t).

    Full cells contribute value/n; the cell containing ``t`` contributes its
    proportional fraction.
    """
    if not f.is_sorted:
        raise ValueError("partial_integral requires a sorted profile")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    n = f.n
    pos = t * n
    full = min(int(np.floor(pos)), n)
    acc = float(np.sum(f.values[:full]))
    if full < n:
        acc += (pos - full) * f.values[full]
    return acc / n


def _refine_pair(a: StepProfile, t: StepProfile):
    if a.n == t.n:
        return a.values, t.values, a.n
    common = lcm(a.n, t.n)
    return (
        np.repeat(a.values, common // a.n),
        np.repeat(t.values, common // t.n),
        common,
    )


def submajorizes(a: StepProfile, t: StepProfile, tol: float = DEFAULT_TOL) -> MajorizationReport:
    """Report whether ``a`` is submajorized by ``t``.

    Margins are partial-sum gaps of the rearranged absolute values;
    ``majorized`` additionally requires the total integrals to agree.
    Mismatched resolutions are refined to the least common multiple by cell
    replication, which preserves equidistribution.
    """
    av, tv, common = _refine_pair(a, t)
    sa = np.abs(av)[rearrangement_order(np.abs(av))]
    st = np.abs(tv)[rearrangement_order(np.abs(tv))]
    margins = (np.cumsum(st) - np.cumsum(sa)) / common
    submajorized = bool(np.min(margins) >= -tol)
    trace_gap = float(margins[-1])
    majorized = submajorized and abs(trace_gap) <= tol
    head_a = float(np.sum(sa[:-1]))
    head_t = float(np.sum(st[:-1]))
    finite_gap = ((head_t - st[-1]) - (head_a - sa[-1])) / common
    return MajorizationReport(
        margins=margins,
        submajorized=submajorized,
        majorized=majorized,
        trace_gap=trace_gap,
        thompson_finite_ok=bool(finite_gap >= -tol),
        resolution=common,
        tol=tol,
    )


def restrict_equidistributed(f: StepProfile, X: BorelCellSet) -> StepProfile:
    """Select the cells of the rearrangement of ``f`` indexed by ``X``.

    The result lives on |X| cells with the domain renormalized; its multiset
    of values is { f*(k) : k in X }, the restriction of f to the preimage of
    X under the spectral alignment.
    """
    if X.n != f.n:
        raise ValueError("cell set resolution must match the profile")
    if X.size == 0:
        raise ValueError("cannot restrict to an empty cell set")
    fstar = rearrange(f).values
    return StepProfile(fstar[X.cells])


def compress_halves(f: StepProfile) -> tuple[StepProfile, StepProfile]:
    """Split the rearrangement into its top and bottom halves, rescaled."""
    if f.n % 2 != 0:
        raise ValueError("compress_halves requires an even resolution")
    fstar = rearrange(f).values
    half = f.n // 2
    return StepProfile(fstar[:half]), StepProfile(fstar[half:])
