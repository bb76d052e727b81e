"""Shared oracle implementations for the test suite.

These stay deliberately naive and independent of the library's own
linear-algebra paths: explicit cofactor determinants, Laplace-expansion
solves, rational characteristic polynomials, and double loops.
"""

from fractions import Fraction

import numpy as np


def det_cofactor(a: list[list]) -> object:
    """Determinant by recursive Laplace expansion (exact on Fractions)."""
    n = len(a)
    if n == 1:
        return a[0][0]
    total = a[0][0] * 0  # zero of the element type
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in a[1:]]
        term = a[0][j] * det_cofactor(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def cramer_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a small linear system by Cramer's rule with exact rationals."""
    n = a.shape[0]
    rows = [[Fraction(float(a[i, j])) for j in range(n)] for i in range(n)]
    rhs = [Fraction(float(v)) for v in b]
    d = det_cofactor(rows)
    out = np.empty(n)
    for j in range(n):
        cols = [[rhs[i] if k == j else rows[i][k] for k in range(n)] for i in range(n)]
        out[j] = float(det_cofactor(cols) / d)
    return out


def charpoly_roots(a: np.ndarray, digits: int = 40) -> np.ndarray:
    """Eigenvalues as roots of the exact characteristic polynomial.

    Entries are lifted to exact rationals (binary floats are rational),
    the characteristic polynomial is expanded symbolically, and its
    roots are located with arbitrary-precision arithmetic. Fully
    independent of any LAPACK code path.
    """
    import mpmath
    import sympy

    n = a.shape[0]
    m = sympy.Matrix(n, n, lambda i, j: sympy.Rational(Fraction(float(a[i, j]))))
    coeffs = m.charpoly().all_coeffs()
    with mpmath.workdps(digits):
        roots = mpmath.polyroots([mpmath.mpf(str(c)) for c in coeffs], maxsteps=200)
        values = sorted((float(mpmath.re(r)) for r in roots), reverse=True)
    return np.array(values)


def naive_linear_kernel(z: np.ndarray) -> np.ndarray:
    n, p = z.shape
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(p):
                acc += z[i, k] * z[j, k]
            out[i, j] = acc / p
    return out


def naive_gaussian_kernel(z: np.ndarray, bandwidth: float = 1.0) -> np.ndarray:
    n = z.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            d2 = 0.0
            for k in range(z.shape[1]):
                d2 += (z[i, k] - z[j, k]) ** 2
            out[i, j] = np.exp(-0.5 * d2 / bandwidth)
    return out


def random_symmetric(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(0.0, scale, size=(n, n))
    return (a + a.T) / 2.0


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    r = rank or n
    b = rng.normal(size=(n, r))
    return (b @ b.T + (b @ b.T).T) / 2.0


def rel_err(a: float, b: float) -> float:
    denom = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / denom
