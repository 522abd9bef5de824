"""Dense real linear-algebra kernels.

Everything here operates on 2D float64 arrays and is pure: inputs are never
mutated, so all functions are safe to call concurrently.  Symmetric inputs
are re-symmetrized on entry and PSD inputs have round-off negative
eigenvalues clamped to zero before any root is taken, because factor
matrices accumulated by exponential moving averages drift slightly off the
PSD cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    SingularWithoutDampingError,
    ZeroMatrixError,
)

# Quintic coefficients for the Newton-Schulz orthogonalization iteration.
NS_QUINTIC = (3.4445, -4.775, 2.0315)

# Eigenvalues at or below this are treated as exactly singular when no
# damping is available.
_SINGULAR_FLOOR = 1e-300


def _as_matrix(a, name: str = "a") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return a


def _as_square(a, name: str = "a") -> np.ndarray:
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix.

    eigenvalues are ascending; eigenvectors are the matching orthonormal
    columns, so ``eigenvectors @ diag(eigenvalues) @ eigenvectors.T``
    reconstructs the (symmetrized) input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Svd:
    """Reduced singular value decomposition ``a = u @ diag(s) @ v.T``.

    singular_values are descending and nonnegative; ``u`` is m-by-k and
    ``v`` is n-by-k with k = min(m, n), both with orthonormal columns.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


class MatrixNorms(NamedTuple):
    frobenius: float
    spectral: float
    nuclear: float
    rms_rms: float


def sym_eig(a) -> SymEig:
    """Eigendecomposition of a symmetric matrix.

    Symmetry is enforced via (a + a.T) / 2 before factorizing.
    """
    a = _as_square(a)
    sym = 0.5 * (a + a.T)
    w, q = np.linalg.eigh(sym)
    return SymEig(eigenvalues=w, eigenvectors=q)


def _clamped_eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """eigh with negative round-off eigenvalues clamped to zero."""
    eig = sym_eig(a)
    return np.maximum(eig.eigenvalues, 0.0), eig.eigenvectors


def stabilized_inverse_root(a, epsilon: float, p: float) -> np.ndarray:
    """Compute ``(a + epsilon * I)^(-p)`` for a PSD matrix.

    Eigenvalues are clamped at zero before damping, so slightly indefinite
    inputs (EMA round-off) are accepted.  With ``epsilon == 0`` the matrix
    must be strictly positive definite after clamping.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if p <= 0:
        raise ValueError("p must be positive")
    w, q = _clamped_eigh(a)
    if epsilon == 0 and np.any(w <= _SINGULAR_FLOOR):
        raise SingularWithoutDampingError(
            "inverse root with epsilon=0 needs a positive definite input"
        )
    root = (q * (w + epsilon) ** (-p)) @ q.T
    return 0.5 * (root + root.T)


def pseudo_inverse_root(a, p: float, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose variant of :func:`stabilized_inverse_root`.

    Eigenvalues at or below ``rtol * max_eigenvalue`` are treated as exact
    zeros and mapped to zero instead of being inverted, which is the
    correct limit of the damped root as the damping vanishes on a
    rank-deficient matrix.  Default ``rtol`` is ``1e-12 * n``.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    w, q = _clamped_eigh(a)
    if rtol is None:
        rtol = 1e-12 * a.shape[0] if hasattr(a, "shape") else 1e-12
    cutoff = rtol * w.max(initial=0.0)
    inv = np.where(w > cutoff, w, np.inf) ** (-p)
    root = (q * inv) @ q.T
    return 0.5 * (root + root.T)


def svd(a) -> Svd:
    """Reduced SVD with descending singular values."""
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return Svd(u=u, singular_values=s, v=vt.T)


def polar_svd(a) -> np.ndarray:
    """Polar factor ``u @ v.T`` of the reduced SVD.

    This is the closest semi-orthogonal matrix to ``a`` in Frobenius norm;
    it maps every nonzero singular value to one.
    """
    dec = svd(a)
    return dec.u @ dec.v.T


def polar_newton_schulz(
    a, steps: int = 5, coeffs: tuple[float, float, float] = NS_QUINTIC
) -> np.ndarray:
    """Approximate the polar factor with a quintic Newton-Schulz iteration.

    The input is pre-normalized by its Frobenius norm so all singular
    values start in (0, 1], then ``X <- c0*X + c1*(X X^T) X + c2*(X X^T)^2 X``
    is applied ``steps`` times.  When rows > cols the iteration runs on the
    transpose so the Gram products stay on the smaller side.  The default
    coefficients do not converge to 1 exactly; they oscillate singular
    values into a band around 1.
    """
    a = _as_matrix(a)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise ZeroMatrixError("cannot orthogonalize the zero matrix")
    c0, c1, c2 = coeffs
    flip = a.shape[0] > a.shape[1]
    x = (a.T if flip else a) / norm
    for _ in range(steps):
        gram = x @ x.T
        x = c0 * x + (c1 * gram + c2 * gram @ gram) @ x
    return x.T if flip else x


def pseudo_inverse(a, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the reduced SVD.

    Singular values at or below ``rtol * sigma_max`` are zeroed; default
    ``rtol`` is ``1e-12 * max(m, n)``.
    """
    dec = svd(a)
    if rtol is None:
        rtol = 1e-12 * max(dec.u.shape[0], dec.v.shape[0])
    s = dec.singular_values
    cutoff = rtol * s.max(initial=0.0)
    s_inv = np.where(s > cutoff, s, np.inf) ** -1.0
    return (dec.v * s_inv) @ dec.u.T


def kron(a, b) -> np.ndarray:
    """Kronecker product with finiteness checks."""
    a = _as_matrix(a)
    b = _as_matrix(b, "b")
    return np.kron(a, b)


def matrix_norms(a) -> MatrixNorms:
    """Frobenius, spectral, nuclear, and RMS-to-RMS operator norms.

    For an m-by-n matrix the RMS-to-RMS operator norm is
    ``sqrt(n / m) * spectral``.
    """
    a = _as_matrix(a)
    s = svd(a).singular_values
    m, n = a.shape
    spectral = float(s.max(initial=0.0))
    return MatrixNorms(
        frobenius=float(np.linalg.norm(a)),
        spectral=spectral,
        nuclear=float(s.sum()),
        rms_rms=float(np.sqrt(n / m) * spectral),
    )


def vec(a) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.size != shape[0] * shape[1]:
        raise DimensionMismatchError(f"cannot reshape {v.size} entries to {shape}")
    return v.reshape(shape, order="F")
