"""Least-squares estimation of the projection parameter.

The Gram matrix is factored once by eigendecomposition; its inverse is reused
for the coefficient vector and for the estimated score vectors
``psi_i = Sigma_hat^{-1} X_i (Y_i - X_i' beta_hat)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch, NonFinite, SingularGram, SingularMatrix, UsageError


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    intercept: bool = False
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or y.ndim != 1:
            raise DimensionMismatch("x must be n x d and y a length-n vector")
        if x.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        n, d = x.shape
        if d < 1 or n < d:
            raise UsageError(f"need n >= d >= 1, got n={n}, d={d}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NonFinite("dataset contains NaN or Inf")
        if self.intercept and not np.all(x[:, 0] == 1.0):
            raise UsageError("intercept flag set but column 0 is not all ones")
        if self.names is not None and len(self.names) != d:
            raise DimensionMismatch("names must match the number of columns of x")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def with_intercept(cls, covariates, y, names=None) -> "Dataset":
        covariates = np.asarray(covariates, dtype=np.float64)
        if covariates.ndim == 1:
            covariates = covariates[:, None]
        ones = np.ones((covariates.shape[0], 1))
        if names is not None:
            names = ("(intercept)", *names)
        return cls(np.hstack([ones, covariates]), y, intercept=True, names=names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ProjectionFit:
    beta_hat: np.ndarray
    sigma_hat: np.ndarray
    gamma_hat: np.ndarray
    residuals: np.ndarray
    scores: np.ndarray
    sigma_hat_inv: np.ndarray = field(repr=False)
    decomp: linalg.SpectralDecomp = field(repr=False)
    data: Dataset = field(repr=False)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def d(self) -> int:
        return self.scores.shape[1]


def fit(data: Dataset, rel_tol: float = linalg.DEFAULT_REL_TOL) -> ProjectionFit:
    x, y = data.x, data.y
    n = x.shape[0]
    sigma_hat = linalg.sym(x.T @ x / n)
    gamma_hat = x.T @ y / n
    dec = linalg.spectral(sigma_hat)
    try:
        linalg.check_pd(dec, rel_tol)
    except SingularMatrix as exc:
        raise SingularGram(f"Gram matrix is singular: {exc}") from None
    sigma_inv = dec.apply(lambda lam: 1.0 / lam)
    beta_hat = linalg.solve_pd(dec, gamma_hat)
    residuals = y - x @ beta_hat
    scores = (x * residuals[:, None]) @ sigma_inv
    return ProjectionFit(beta_hat, sigma_hat, gamma_hat, residuals, scores, sigma_inv, dec, data)


def oracle_scores(data: Dataset, truth) -> np.ndarray:
    """Scores built from the true Gram matrix and projection parameter.

    ``truth`` needs ``sigma`` and ``beta`` attributes; only meaningful in
    simulations where those are known.
    """
    sigma_inv = linalg.inv(truth.sigma)
    beta = np.asarray(truth.beta, dtype=np.float64)
    if beta.shape != (data.d,):
        raise DimensionMismatch("truth.beta does not match the data dimension")
    r = data.y - data.x @ beta
    return (data.x * r[:, None]) @ sigma_inv
