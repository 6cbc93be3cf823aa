"""Independent cross-checks for the realization pipeline.

Everything here is deliberately naive: instances are generated by sampling
unitaries and reading diagonals off actual products, Ky Fan functionals are
brute-forced over random projections, and two-cell feasibility is settled by
grid search over explicit rotation angles.  None of it shares code paths with
the solver, so agreement between the two is evidence rather than tautology.

All generators are deterministic functions of an integer seed.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import two_cell_search
from .errors import PreconditionError
from .matrixmodel import DiagonalElement, FactorElement, singular_profile
from .profile import DEFAULT_TOL, StepProfile, submajorizes
from .thompson import ThompsonInstance, general_solve

__all__ = [
    "INSTANCE_KINDS",
    "InstanceSpec",
    "haar_unitary",
    "gen_feasible",
    "gen_prescribed",
    "gen_trace_equality",
    "gen_infeasible",
    "gen_dominant",
    "gen_complete_dominance",
    "kyfan_bruteforce",
    "two_cell_feasible",
    "two_cell_deviation",
    "search_tolerance_2x2",
    "feasibility_search_2x2",
    "resolution_convergence",
    "convergence_csv",
]

INSTANCE_KINDS = (
    "expectation-generated",
    "spectral-prescribed",
    "boundary",
    "infeasible",
)


@dataclass(frozen=True)
class InstanceSpec:
    """Reproducible description of a test instance.

    The record carries everything needed to rebuild the instance: a seed, a
    dimension, one of the kinds in ``INSTANCE_KINDS``, and kind-specific
    parameters such as the prescribed spectrum or the infeasibility gap.
    """

    seed: int
    n: int
    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in INSTANCE_KINDS:
            raise PreconditionError(f"unknown instance kind {self.kind!r}")
        if self.n < 1:
            raise PreconditionError("dimension must be positive")

    def build(self) -> ThompsonInstance:
        """Materialize the described instance; same spec, same instance."""
        if self.kind == "expectation-generated":
            return gen_feasible(self.seed, self.n)
        if self.kind == "spectral-prescribed":
            spectrum = self.parameters.get("spectrum")
            if spectrum is None:
                raise PreconditionError(
                    "spectral-prescribed instances need a 'spectrum' parameter"
                )
            return gen_prescribed(self.seed, self.n, spectrum)
        if self.kind == "boundary":
            return gen_trace_equality(self.seed, self.n)
        gap = float(self.parameters.get("gap", 0.1))
        return gen_infeasible(self.seed, self.n, gap=gap)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw an n-by-n unitary from the Haar measure.

    QR of a complex Ginibre matrix, with the phases of R's diagonal pushed
    into Q so the distribution is exactly invariant rather than merely
    QR-convention dependent.
    """
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r).copy()
    d[np.abs(d) == 0.0] = 1.0
    return q * (d / np.abs(d))


def _ginibre(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return z / np.sqrt(2.0 * n)


def gen_feasible(seed: int, n: int) -> ThompsonInstance:
    """Random instance that is feasible by construction.

    The target diagonal is read off an actual product diag(U T V) with Haar
    U, V, so submajorization holds with no appeal to the solver.
    """
    rng = np.random.default_rng(seed)
    t = _ginibre(rng, n)
    u = haar_unitary(rng, n)
    v = haar_unitary(rng, n)
    a = np.diagonal(u @ t @ v).copy()
    return ThompsonInstance(DiagonalElement(a), FactorElement(t))


def gen_prescribed(seed: int, n: int, spectrum: Sequence[float]) -> ThompsonInstance:
    """Feasible instance whose T has exactly the prescribed singular values."""
    sig = np.sort(np.abs(np.asarray(spectrum, dtype=np.float64)))[::-1]
    if sig.shape != (n,):
        raise PreconditionError("spectrum length must match the dimension")
    rng = np.random.default_rng(seed)
    t = haar_unitary(rng, n) @ (sig[:, None] * haar_unitary(rng, n))
    u = haar_unitary(rng, n)
    v = haar_unitary(rng, n)
    a = np.diagonal(u @ t @ v).copy()
    return ThompsonInstance(DiagonalElement(a), FactorElement(t))


def gen_trace_equality(seed: int, n: int) -> ThompsonInstance:
    """Positive instance sitting on the majorization boundary.

    T is positive with unit-scale spectrum and A is the diagonal of a
    conjugate W T W*, so A is positive, A is majorized by T, and the total
    traces agree exactly: the last margin is zero up to rounding.
    """
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.5, 2.0, size=n))[::-1]
    w = haar_unitary(rng, n)
    t = (w * lam) @ w.conj().T
    t = (t + t.conj().T) / 2.0
    w2 = haar_unitary(rng, n)
    a = np.real(np.diagonal(w2 @ t @ w2.conj().T)).astype(np.complex128)
    return ThompsonInstance(DiagonalElement(a), FactorElement(t))


def gen_infeasible(seed: int, n: int, gap: float = 0.1) -> ThompsonInstance:
    """Instance whose first margin is negative by at least gap·‖T‖/n.

    Starts from a feasible draw and inflates the largest target modulus past
    the operator norm of T, which no diagonal of U T V can reach.
    """
    if gap <= 0.0:
        raise PreconditionError("infeasibility gap must be positive")
    inst = gen_feasible(seed, n)
    sig = singular_profile(inst.T)
    top = float(sig.values[0])
    a = inst.A.diag.copy()
    k = int(np.argmax(np.abs(a)))
    phase = a[k] / abs(a[k]) if abs(a[k]) > 0 else 1.0
    a[k] = phase * top * (1.0 + gap)
    return ThompsonInstance(DiagonalElement(a), FactorElement(inst.T.entries))


def _positive_with_spectrum(rng: np.random.Generator, sig: np.ndarray) -> np.ndarray:
    w = haar_unitary(rng, sig.size)
    t = (w * sig) @ w.conj().T
    return (t + t.conj().T) / 2.0


def gen_dominant(seed: int, n: int) -> ThompsonInstance:
    """Instance with cellwise dominance: the sorted targets sit below the
    spectrum cell by cell, not merely in partial sums.

    The dominance stages run on positive data, so T is a conjugated positive
    matrix.  Each target is a uniform fraction of one spectral value, which
    bounds every order statistic of the targets by the matching one of the
    spectrum.
    """
    rng = np.random.default_rng(seed)
    sig = np.sort(rng.uniform(0.5, 2.0, size=n))[::-1]
    a = sig * rng.uniform(0.0, 1.0, size=n)
    t = _positive_with_spectrum(rng, sig)
    return ThompsonInstance(DiagonalElement(a.astype(np.complex128)), FactorElement(t))


def gen_complete_dominance(seed: int, n: int) -> ThompsonInstance:
    """Instance for the halving stage: every target is below the whole
    spectrum, so dominance survives any split into invertible blocks.

    T is positive (the stage runs after the positivity reduction), the
    spectrum lives in [1, 2] to keep condition numbers mild, and the targets
    stay under 0.9 times the smallest spectral value.
    """
    rng = np.random.default_rng(seed)
    sig = np.sort(rng.uniform(1.0, 2.0, size=n))[::-1]
    a = rng.uniform(0.0, 0.9 * sig[-1], size=n)
    t = _positive_with_spectrum(rng, sig)
    return ThompsonInstance(DiagonalElement(a.astype(np.complex128)), FactorElement(t))


def kyfan_bruteforce(T: FactorElement, k: int, samples: int = 64, seed: int = 0) -> float:
    """Brute-force the k-th Ky Fan functional of |T|.

    Maximizes tr(|T| P)/n over random rank-k projections, always including
    the projection onto the top-k right singular vectors, so the value
    matches the partial integral of the singular profile at k/n and random
    sampling can only ever fall short of it.
    """
    n = T.n
    if not 1 <= k <= n:
        raise PreconditionError("rank must lie between 1 and the dimension")
    _, sig, vh = np.linalg.svd(T.entries)
    abs_t = vh.conj().T @ (sig[:, None] * vh)

    def value(frame: np.ndarray) -> float:
        return float(np.real(np.trace(frame.conj().T @ abs_t @ frame)) / n)

    best = value(vh.conj().T[:, :k])
    rng = np.random.default_rng(seed)
    for _ in range(int(samples)):
        z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
        q, _ = np.linalg.qr(z)
        best = max(best, value(q))
    return best


def _two_cell_data(sigma, alpha):
    s = np.asarray(sigma, dtype=np.float64).ravel()
    a = np.abs(np.asarray(alpha, dtype=np.complex128).ravel())
    if s.shape != (2,) or a.shape != (2,):
        raise PreconditionError("two-cell checks take two singular values and two targets")
    if s[0] < s[1] or s[1] < 0.0:
        raise PreconditionError("singular values must be sorted and nonnegative")
    return float(s[0]), float(s[1]), float(a[0]), float(a[1])


def two_cell_feasible(sigma, alpha, tol: float = DEFAULT_TOL) -> bool:
    """Predicate form of two-cell feasibility.

    True when the target moduli are submajorized by the singular values and
    the finite two-sided window also closes, i.e. the sorted gap of the
    targets fits inside the sorted gap of the spectrum.
    """
    s1, s2, a1, a2 = _two_cell_data(sigma, alpha)
    report = submajorizes(StepProfile([a1, a2]), StepProfile([s1, s2]), tol=tol)
    return bool(report.submajorized and report.thompson_finite_ok)


def two_cell_deviation(sigma, alpha, grid: int = 200) -> float:
    """Best diagonal defect reachable by grid search over 2-by-2 rotations.

    Scans rotation angles on both sides plus a relative phase, each over a
    uniform grid, and reports the smallest l1 gap between the achieved
    diagonal moduli and the targets.
    """
    if grid < 2:
        raise PreconditionError("grid must have at least two points per angle")
    s1, s2, a1, a2 = _two_cell_data(sigma, alpha)
    best, _, _, _ = two_cell_search(s1, s2, a1, a2, int(grid))
    return float(best)


def search_tolerance_2x2(sigma, grid: int = 200) -> float:
    """Deviation threshold below which the grid search counts as a hit.

    The diagonal moduli are Lipschitz in each angle with constant at most
    twice the spectral sum, so a uniform grid cannot miss a feasible point
    by more than a few steps; the factor 6 leaves slack for the phase axis,
    where the dependence degenerates to a square root near zero moduli.
    """
    s = np.asarray(sigma, dtype=np.float64).ravel()
    step = (np.pi / 2.0) / max(int(grid) - 1, 1)
    return 6.0 * float(s[0] + s[1]) * step + 1e-9


def feasibility_search_2x2(sigma, alpha, grid: int = 200) -> bool:
    """Settle two-cell feasibility by exhaustive search, no theory involved."""
    dev = two_cell_deviation(sigma, alpha, grid=grid)
    return bool(dev <= search_tolerance_2x2(sigma, grid=grid))


def _replicate(pattern: np.ndarray, n: int, label: str) -> np.ndarray:
    if n % pattern.size != 0:
        raise PreconditionError(
            f"resolution {n} is not a multiple of the {label} pattern length {pattern.size}"
        )
    return np.repeat(pattern, n // pattern.size)


def resolution_convergence(
    a_pattern,
    t_pattern,
    resolutions: Sequence[int],
    strategy: str = "partition",
    tol: float = DEFAULT_TOL,
) -> list[dict]:
    """Solve the same step-function instance at several resolutions.

    Both patterns are replicated cellwise to each requested dimension, T is
    the diagonal matrix of its replicated pattern, and the full pipeline runs
    at each size.  Returns one row per resolution with the dimension, the
    diagonal residual, the truncation error, and the wall-clock seconds.
    """
    a_pat = np.asarray(a_pattern, dtype=np.complex128).ravel()
    t_pat = np.asarray(t_pattern, dtype=np.float64).ravel()
    if a_pat.size == 0 or t_pat.size == 0:
        raise PreconditionError("patterns must be non-empty")
    rows: list[dict] = []
    for n in resolutions:
        n = int(n)
        a = _replicate(a_pat, n, "target")
        t = np.diag(_replicate(t_pat, n, "spectrum").astype(np.complex128))
        inst = ThompsonInstance(DiagonalElement(a), FactorElement(t))
        start = time.perf_counter()
        result = general_solve(inst, strategy=strategy, tol=tol)
        elapsed = time.perf_counter() - start
        rows.append(
            {
                "n": n,
                "residual": float(result.diag_residual),
                "truncation": float(result.truncation_error),
                "seconds": float(elapsed),
            }
        )
    return rows


def convergence_csv(rows: Sequence[dict]) -> str:
    """Render convergence rows as CSV with a fixed header."""
    out = io.StringIO()
    out.write("n,residual,truncation,seconds\n")
    for row in rows:
        out.write(
            f"{row['n']},{row['residual']!r},{row['truncation']!r},{row['seconds']!r}\n"
        )
    return out.getvalue()
