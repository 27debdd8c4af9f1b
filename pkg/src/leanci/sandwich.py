"""Sandwich covariance of the least-squares estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DegenerateVariance
from .ols import ProjectionFit

# a coordinate whose standard error is this small relative to the one implied
# by residuals of the size of y is treated as having zero residual variance
DEGENERACY_RTOL = 1e-10

# when set, every sandwich_cov call also checks the outer-product identity
VERIFY_IDENTITY = False
IDENTITY_RTOL = 1e-10


@dataclass(frozen=True)
class SandwichCov:
    v_hat: np.ndarray
    v_hat_n: np.ndarray
    cov: np.ndarray
    std_err: np.ndarray

    @property
    def corr(self) -> np.ndarray:
        return linalg.corr_of(self.cov)


def sandwich_cov(fit: ProjectionFit) -> SandwichCov:
    n = fit.n
    xr = fit.data.x * fit.residuals[:, None]
    v_hat = linalg.sym(xr.T @ xr / n)
    v_hat_n = v_hat / n
    s_inv = fit.sigma_hat_inv
    cov = linalg.sym(s_inv @ v_hat_n @ s_inv)
    diag = np.diag(cov)

    y_scale = np.sqrt(np.mean(fit.data.y**2))
    reference = np.sqrt(np.diag(s_inv) / n) * y_scale
    bad = np.flatnonzero(~(diag > (DEGENERACY_RTOL * reference) ** 2))
    if bad.size:
        raise DegenerateVariance(
            f"zero residual variance along coordinate(s) {bad.tolist()}; "
            "standard errors would vanish"
        )
    out = SandwichCov(v_hat, v_hat_n, cov, np.sqrt(diag))
    if VERIFY_IDENTITY:
        err = identity_error(fit, out)
        if err > IDENTITY_RTOL:
            raise AssertionError(f"sandwich/outer-product identity off by {err:.3e}")
    return out


def outer_score_cov(fit: ProjectionFit) -> np.ndarray:
    """``n^{-2} sum_i psi_i psi_i'``; equals the sandwich covariance exactly."""
    return linalg.sym(fit.scores.T @ fit.scores / fit.n**2)


def identity_error(fit: ProjectionFit, cov: SandwichCov) -> float:
    """Relative Frobenius gap between the sandwich and the score outer product."""
    outer = outer_score_cov(fit)
    return float(np.linalg.norm(cov.cov - outer) / np.linalg.norm(cov.cov))


def oracle_sandwich(truth) -> np.ndarray:
    """``Sigma^{-1} V Sigma^{-1}`` from population quantities."""
    s_inv = linalg.inv(truth.sigma)
    return linalg.sym(s_inv @ linalg.sym(truth.v) @ s_inv)


@dataclass(frozen=True)
class Diagnostics:
    residual_moments: dict
    eig_min: float
    eig_max: float
    kappa_hat: float


def assumption_diagnostics(fit: ProjectionFit, cov: SandwichCov, q_grid=(2.0, 4.0, 6.0)) -> Diagnostics:
    """Empirical surrogates for the moment and conditioning assumptions.

    Values only; there are no canonical thresholds to compare them against.
    """
    r = np.abs(fit.residuals)
    moments = {float(q): float(np.mean(r ** float(q))) for q in q_grid}
    s_half = linalg.sqrtm(fit.sigma_hat)
    v_inv = linalg.inv(cov.v_hat)
    lam = linalg.spectral(s_half @ v_inv @ s_half).eigenvalues
    kappa = kappa_of(fit.sigma_hat, cov.v_hat)
    return Diagnostics(moments, float(lam[-1]), float(lam[0]), kappa)


def kappa_of(sigma, v) -> float:
    """Condition number of ``Sigma^{-1/2} V^{1/2}``.

    Its singular values are the square roots of the eigenvalues of
    ``Sigma^{-1/2} V Sigma^{-1/2}``.
    """
    s = linalg.inv_sqrt(sigma)
    return float(np.sqrt(linalg.condition_number(s @ linalg.sym(v) @ s)))
