"""Kernel matrix construction from genotype data.

Three kernels are supported, each producing an exactly symmetric PSD
matrix from an n-by-p data matrix X (raw allele counts or any real
design matrix):

    linear      K = X X^T / p
    poly2       K = elementwise square of (1 + X X^T / p)
    gaussian    K_ij = exp(-||x_i - x_j||^2 / (2 * bandwidth)), unit diagonal

The Gaussian bandwidth defaults to 1. The eigendecomposition of a kernel
is computed lazily, exactly once even under concurrent access, and is
reused by every ridge fit over a regularization grid.
"""

from __future__ import annotations

import threading

import numpy as np

from . import matrixcore
from .genotypes import GenotypeMatrix
from .matrixcore import EigenDecomposition, SymMatrix

KERNEL_KINDS = ("linear", "poly2", "gaussian")


def _as_design(x) -> np.ndarray:
    if isinstance(x, GenotypeMatrix):
        return x.as_float()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"design matrix must be 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"design matrix must be non-empty, got shape {x.shape}")
    return x


class KernelMatrix:
    """A named symmetric PSD kernel with a cached eigendecomposition."""

    def __init__(self, kind: str, matrix: SymMatrix):
        if kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {kind!r}; choose one of {KERNEL_KINDS}")
        self.kind = kind
        self.matrix = matrix
        self._eig: EigenDecomposition | None = None
        self._eig_lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.matrix.order

    @property
    def has_eig(self) -> bool:
        return self._eig is not None

    @property
    def eig(self) -> EigenDecomposition:
        """Spectral factorization, computed on first access (single-flight)."""
        if self._eig is None:
            with self._eig_lock:
                if self._eig is None:
                    self._eig = matrixcore.eigh(self.matrix)
        return self._eig

    def write_csv(self, path) -> None:
        """Dump the raw kernel entries to CSV (debugging aid)."""
        np.savetxt(path, self.matrix.data, delimiter=",", fmt="%.17g")


def _linear_gram(x) -> SymMatrix:
    z = _as_design(x)
    return matrixcore.symmetrize(z @ z.T / z.shape[1])


def linear_kernel(x) -> KernelMatrix:
    """Inner-product kernel scaled by the number of columns: X X^T / p."""
    return KernelMatrix("linear", _linear_gram(x))


def polynomial_kernel(x) -> KernelMatrix:
    """Degree-2 polynomial kernel: elementwise square of (1 + X X^T / p)."""
    gram = _linear_gram(x).data
    return KernelMatrix("poly2", SymMatrix((1.0 + gram) ** 2))


def gaussian_kernel(x, bandwidth: float = 1.0) -> KernelMatrix:
    """Gaussian kernel exp(-||x_i - x_j||^2 / (2 * bandwidth)).

    The diagonal is exactly 1. ``bandwidth`` rescales squared distances;
    the default of 1 leaves them unscaled.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    z = _as_design(x)
    sq = np.einsum("ij,ij->i", z, z)
    cross = matrixcore.symmetrize(z @ z.T).data
    d2 = sq[:, None] + sq[None, :] - 2.0 * cross
    np.fill_diagonal(d2, 0.0)
    np.maximum(d2, 0.0, out=d2)
    return KernelMatrix("gaussian", SymMatrix(np.exp(-0.5 * d2 / bandwidth)))


def make_kernel(kind: str, x, gaussian_bandwidth: float = 1.0) -> KernelMatrix:
    """Build a kernel by name; ``gaussian_bandwidth`` applies to 'gaussian' only."""
    if kind == "linear":
        return linear_kernel(x)
    if kind == "poly2":
        return polynomial_kernel(x)
    if kind == "gaussian":
        return gaussian_kernel(x, bandwidth=gaussian_bandwidth)
    raise ValueError(f"unknown kernel kind {kind!r}; choose one of {KERNEL_KINDS}")
