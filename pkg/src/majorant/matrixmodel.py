"""The finite model: n-by-n complex matrices under the normalized trace.

The diagonal matrices play the role of the distinguished abelian subalgebra,
and extraction of the diagonal is the trace-preserving conditional
expectation onto it.  Spectral positions are aligned with the unit interval:
sorted eigenvector k spans the cell [k/n, (k+1)/n), so the projection onto
the first k of them has normalized trace k/n exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, PreconditionError
from .profile import DEFAULT_TOL, BorelCellSet, StepProfile, rearrangement_order


def _as_square(entries) -> np.ndarray:
    arr = np.asarray(entries, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError("entries must form a non-empty square matrix")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError("entries must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class FactorElement:
    """A matrix together with the normalized trace tr/n."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square(self.entries))
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def tau(self) -> complex:
        return complex(np.trace(self.entries) / self.n)

    def adjoint(self) -> "FactorElement":
        return FactorElement(self.entries.conj().T)

    def norm_op(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def norm_two(self) -> float:
        """sqrt(tau(X*X)): the Frobenius norm scaled to make ||I|| = 1."""
        return float(np.linalg.norm(self.entries, "fro") / np.sqrt(self.n))

    def __matmul__(self, other: "FactorElement") -> "FactorElement":
        return FactorElement(self.entries @ other.entries)

    @classmethod
    def identity(cls, n: int) -> "FactorElement":
        return cls(np.eye(n, dtype=np.complex128))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "FactorElement":
        re = np.asarray(data["re"], dtype=np.float64)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=np.float64)
        arr = re + 1j * im
        if "n" in data and arr.shape != (int(data["n"]), int(data["n"])):
            raise ValueError("matrix shape does not match declared dimension")
        return cls(arr)


@dataclass(frozen=True, eq=False)
class DiagonalElement:
    """An element of the diagonal subalgebra, stored as its diagonal."""

    diag: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.diag, dtype=np.complex128)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("diag must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("diag must be finite")
        object.__setattr__(self, "diag", arr)
        self.diag.setflags(write=False)

    @property
    def n(self) -> int:
        return self.diag.size

    def tau(self) -> complex:
        return complex(np.mean(self.diag))

    def as_factor(self) -> FactorElement:
        return FactorElement(np.diag(self.diag))

    def to_json(self) -> list:
        return [[float(z.real), float(z.imag)] for z in self.diag]

    @classmethod
    def from_json(cls, data) -> "DiagonalElement":
        pairs = np.asarray(data, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("diagonal must be a list of [re, im] pairs")
        return cls(pairs[:, 0] + 1j * pairs[:, 1])


@dataclass(frozen=True, eq=False)
class SpectralResolution:
    """Sorted eigenvalues with their eigenvector frame.

    Column k of ``frame`` is the eigenvector at spectral cell k, so
    ``frame @ diag(eigenvalues) @ frame*`` reconstructs the input.
    """

    eigenvalues: np.ndarray
    frame: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def cell_of_index(self, k: int) -> tuple[float, float]:
        if not 0 <= k < self.n:
            raise ValueError("index outside the spectral grid")
        return k / self.n, (k + 1) / self.n


def hermitian_gap(T: FactorElement) -> float:
    return float(np.linalg.norm(T.entries - T.entries.conj().T, 2))


def _require_selfadjoint(T: FactorElement, tol: float, enforce: bool) -> np.ndarray:
    # symmetrize whenever within the gate so solver drift cannot flip it
    if enforce and hermitian_gap(T) > T.n * tol:
        raise PreconditionError("matrix is not self-adjoint within the n*tol gate")
    return (T.entries + T.entries.conj().T) / 2.0


def spectral_resolution(
    T: FactorElement,
    tol: float = DEFAULT_TOL,
    require_selfadjoint: bool = True,
) -> SpectralResolution:
    """Eigendecomposition with cells sorted non-increasingly, ties stable."""
    herm = _require_selfadjoint(T, tol, require_selfadjoint)
    w, v = np.linalg.eigh(herm)
    order = rearrangement_order(w)
    return SpectralResolution(eigenvalues=w[order], frame=v[:, order])


def eigenvalue_profile(
    T: FactorElement,
    require_selfadjoint: bool = True,
    tol: float = DEFAULT_TOL,
) -> StepProfile:
    """Sorted eigenvalue list of a self-adjoint element as a step profile."""
    herm = _require_selfadjoint(T, tol, require_selfadjoint)
    w = np.linalg.eigvalsh(herm)
    return StepProfile(w[::-1].copy())


def singular_profile(T: FactorElement) -> StepProfile:
    """Sorted singular values; cell 0 carries the operator norm."""
    s = np.linalg.svd(T.entries, compute_uv=False)
    return StepProfile(s)


def spectral_projection(
    T: FactorElement,
    X: BorelCellSet,
    tol: float = DEFAULT_TOL,
) -> FactorElement:
    """Projection onto the eigenvectors at the sorted positions in ``X``."""
    res = spectral_resolution(T, tol=tol)
    if X.n != res.n:
        raise ValueError("cell set resolution must match the matrix dimension")
    cols = res.frame[:, X.cells]
    return FactorElement(cols @ cols.conj().T)


def expect_diagonal(T: FactorElement) -> DiagonalElement:
    """The conditional expectation onto the diagonal subalgebra."""
    return DiagonalElement(np.diag(T.entries).copy())


def polar(T: FactorElement) -> tuple[FactorElement, FactorElement]:
    """T = W P with W unitary and P = |T| positive.

    The full SVD supplies the unitary on the kernel, so W is unitary even
    for singular input.
    """
    u, s, vh = np.linalg.svd(T.entries)
    w = u @ vh
    p = vh.conj().T @ (s[:, None] * vh)
    return FactorElement(w), FactorElement(p)


def in_two_sided_orbit(S: FactorElement, T: FactorElement, tol: float = DEFAULT_TOL) -> bool:
    """Equality of singular profiles, the two-sided orbit membership test."""
    if S.n != T.n:
        raise ValueError("dimension mismatch")
    gap = np.abs(singular_profile(S).values - singular_profile(T).values)
    return bool(np.max(gap) <= tol)


def in_unitary_orbit(S: FactorElement, T: FactorElement, tol: float = DEFAULT_TOL) -> bool:
    """Equality of eigenvalue profiles for self-adjoint elements."""
    if S.n != T.n:
        raise ValueError("dimension mismatch")
    ps = eigenvalue_profile(S, tol=tol)
    pt = eigenvalue_profile(T, tol=tol)
    return bool(np.max(np.abs(ps.values - pt.values)) <= tol)


def positivity_from_trace_check(
    S: FactorElement,
    T: FactorElement,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Positivity of S forced by matching singular data and trace.

    When S has the singular profile of a positive T and the same trace, S
    must itself be positive; under those hypotheses a failure of the
    positivity checks is an internal error, not a property of the input.
    Outside the hypotheses the function simply reports whether S is
    positive.
    """
    n = T.n
    t_herm = hermitian_gap(T) <= n * tol
    if not t_herm or np.min(np.linalg.eigvalsh((T.entries + T.entries.conj().T) / 2)) < -n * tol:
        raise PreconditionError("reference element must be positive")
    s_gap = hermitian_gap(S)
    s_min = float(np.min(np.linalg.eigvalsh((S.entries + S.entries.conj().T) / 2.0)))
    is_positive = s_gap <= n * tol and s_min >= -n * tol
    profile_gap = float(
        np.max(np.abs(singular_profile(S).values - singular_profile(T).values))
    )
    trace_gap = abs(S.tau() - T.tau())
    if profile_gap <= tol and trace_gap <= tol and not is_positive:
        raise InvariantViolation(
            "matching singular profile and trace must force positivity; "
            f"hermitian gap {s_gap:.3e}, min eigenvalue {s_min:.3e}"
        )
    return is_positive
