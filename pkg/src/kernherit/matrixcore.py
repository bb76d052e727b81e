"""Dense symmetric linear algebra primitives.

Everything downstream (kernel matrices, ridge solves, spectral
diagnostics) is built on three operations: a symmetric eigendecomposition
with deterministic eigenvector orientation, a Cholesky solve of a
positively shifted system, and mean-centering. All functions are pure;
returned arrays are marked read-only so values can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NumericalError

# Eigenvalues more negative than -PSD_RTOL * l_1 mean the matrix is not a
# numerically plausible PSD kernel and indicate corrupted input.
PSD_RTOL = 1e-8

_RECON_RTOL = 1e-8
_ORTHO_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymMatrix:
    """A real symmetric matrix with exact (bitwise) symmetry.

    Construction rejects non-square, non-finite, or asymmetric input;
    use :func:`symmetrize` first when an operation (e.g. a BLAS product)
    may have produced one-ulp asymmetry.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric")
        object.__setattr__(self, "data", _freeze(a.copy()))

    @property
    def order(self) -> int:
        return self.data.shape[0]


def symmetrize(a: np.ndarray) -> SymMatrix:
    """Build a SymMatrix from an almost-symmetric array via (A + A.T)/2."""
    a = np.asarray(a, dtype=np.float64)
    return SymMatrix((a + a.T) / 2.0)


def _as_array(a) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.data
    return np.asarray(a, dtype=np.float64)


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral factorization A = V diag(l) V^T.

    ``eigenvalues`` are sorted non-increasing (l_1 >= ... >= l_n) and the
    columns of ``eigenvectors`` are the matching orthonormal eigenvectors,
    each oriented so that its largest-magnitude entry is positive (first
    such entry on ties), which makes the factorization deterministic.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _freeze(np.asarray(self.eigenvalues)))
        object.__setattr__(self, "eigenvectors", _freeze(np.asarray(self.eigenvectors)))

    @property
    def order(self) -> int:
        return self.eigenvalues.shape[0]


def eigh(a: SymMatrix | np.ndarray) -> EigenDecomposition:
    """Eigendecompose a symmetric matrix, descending, deterministically.

    Raises NumericalError if the underlying solver does not converge or
    the factorization fails the reconstruction / orthonormality checks.
    """
    A = _as_array(a)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    try:
        w, v = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        off = float(np.max(np.abs(A - np.diag(np.diag(A))))) if n > 1 else 0.0
        raise NumericalError(
            f"symmetric eigensolver did not converge for order {n} matrix "
            f"(max off-diagonal magnitude {off:.3e})"
        ) from exc

    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    # Deterministic orientation: largest-magnitude entry of each vector > 0.
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(n)])
    signs[signs == 0] = 1.0
    v *= signs

    a_norm = float(np.linalg.norm(A))
    recon = float(np.linalg.norm((v * w) @ v.T - A))
    ortho = float(np.linalg.norm(v.T @ v - np.eye(n)))
    if recon > _RECON_RTOL * max(1.0, a_norm) or ortho > _ORTHO_TOL:
        raise NumericalError(
            f"eigendecomposition of order {n} matrix failed verification "
            f"(reconstruction residual {recon:.3e}, orthogonality residual {ortho:.3e})"
        )
    return EigenDecomposition(w, v)


def solve_spd_shifted(a: SymMatrix | np.ndarray, shift: float, b: np.ndarray) -> np.ndarray:
    """Solve (A + shift*I) x = b by Cholesky for PSD A and shift > 0.

    The shift makes the system positive definite whenever A is
    numerically PSD (min eigenvalue >= -PSD_RTOL * l_1); anything worse
    raises NumericalError since PSD kernels cannot produce it.
    """
    A = _as_array(a)
    if shift <= 0:
        raise ValueError(f"shift must be positive, got {shift}")
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix order {A.shape[0]} vs vector length {b.shape[0]}"
        )
    shifted = A + shift * np.eye(A.shape[0])
    try:
        cho = scipy.linalg.cho_factor(shifted, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        evals = np.linalg.eigvalsh(A)
        l1 = float(evals[-1])
        lmin = float(evals[0])
        raise NumericalError(
            f"Cholesky failed for shifted system of order {A.shape[0]}: "
            f"min eigenvalue {lmin:.3e} vs PSD tolerance {-PSD_RTOL * max(l1, 0.0):.3e}"
        ) from exc
    return scipy.linalg.cho_solve(cho, b, check_finite=False)


def center(v: np.ndarray) -> np.ndarray:
    """Apply the mean-removing projector: v minus its mean.

    Idempotent; the output sums to zero up to roundoff.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot center an empty vector")
    return v - v.mean()
