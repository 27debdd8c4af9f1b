"""Symmetric-matrix kernels built on a single eigendecomposition.

Every derived quantity (inverse, square roots, operator norm, condition
number) goes through :func:`spectral`, so there is exactly one numerical path
to validate. Matrices are plain dense ``numpy`` arrays.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NonFinite, NonPositiveDiagonal, SingularMatrix

DEFAULT_REL_TOL = 1e-10


class SpectralDecomp(NamedTuple):
    """Eigenvalues sorted in descending order and matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q, lam = self.eigenvectors, self.eigenvalues
        return sym((q * lam) @ q.T)

    def apply(self, f) -> np.ndarray:
        """Return ``Q f(Lambda) Q^T``."""
        q = self.eigenvectors
        return sym((q * f(self.eigenvalues)) @ q.T)


def sym(a) -> np.ndarray:
    """Validate a square finite matrix and return its exact symmetrization."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix contains NaN or Inf entries")
    return 0.5 * (a + a.T)


def spectral(a) -> SpectralDecomp:
    a = sym(a)
    lam, q = np.linalg.eigh(a)
    order = np.argsort(lam)[::-1]
    return SpectralDecomp(lam[order], q[:, order])


def op_norm(a) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    lam = spectral(a).eigenvalues
    return float(max(abs(lam[0]), abs(lam[-1])))


def check_pd(dec: SpectralDecomp, rel_tol: float) -> None:
    lam = dec.eigenvalues
    if lam[0] <= 0 or lam[-1] <= rel_tol * lam[0]:
        raise SingularMatrix(
            f"matrix is singular to relative tolerance {rel_tol:g} "
            f"(eigenvalue range [{lam[-1]:.3e}, {lam[0]:.3e}])"
        )


def inv(a, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    dec = spectral(a)
    check_pd(dec, rel_tol)
    return dec.apply(lambda lam: 1.0 / lam)


def sqrtm(a) -> np.ndarray:
    """PSD square root; tiny negative eigenvalues from rounding are clipped."""
    dec = spectral(a)
    lam = dec.eigenvalues
    if lam[-1] < -DEFAULT_REL_TOL * max(abs(lam[0]), 1.0):
        raise SingularMatrix("matrix is not positive semidefinite")
    return dec.apply(lambda lam: np.sqrt(np.clip(lam, 0.0, None)))


def inv_sqrt(a, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Return ``A^{-1/2}``; no regularization is ever applied."""
    dec = spectral(a)
    check_pd(dec, rel_tol)
    return dec.apply(lambda lam: 1.0 / np.sqrt(lam))


def condition_number(a, rel_tol: float = DEFAULT_REL_TOL) -> float:
    dec = spectral(a)
    check_pd(dec, rel_tol)
    return float(dec.eigenvalues[0] / dec.eigenvalues[-1])


def corr_of(a) -> np.ndarray:
    """``diag(A)^{-1/2} A diag(A)^{-1/2}`` with an exactly unit diagonal."""
    a = sym(a)
    diag = np.diag(a)
    if np.any(diag <= 0):
        raise NonPositiveDiagonal("correlation requires a strictly positive diagonal")
    s = 1.0 / np.sqrt(diag)
    c = sym(a * np.outer(s, s))
    np.fill_diagonal(c, 1.0)
    return np.clip(c, -1.0, 1.0)


def solve_pd(dec: SpectralDecomp, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` using an existing decomposition of a PD ``A``."""
    q, lam = dec.eigenvectors, dec.eigenvalues
    coef = q.T @ b
    if coef.ndim == 1:
        return q @ (coef / lam)
    return q @ (coef / lam[:, None])
