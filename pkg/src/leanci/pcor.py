"""Partial correlations with influence-function studentization.

Conventions: the sample covariance uses denominator ``n`` (not ``n - 1``);
pairs ``(j, k)`` with ``j < k`` are ordered lexicographically and every
per-pair vector in this module follows that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import linalg, rng
from .confidence import BootstrapDistribution, rectangle, studentized_max
from .errors import (
    DegenerateStudentizer,
    DimensionMismatch,
    InvalidLevel,
    NonFinite,
    PreconditionViolated,
    SingularCovariance,
    SingularMatrix,
    UsageError,
)
from .gaussian_max import bonferroni_crit, sidak_crit, upper_quantile


def pair_list(d: int) -> list[tuple[int, int]]:
    return list(combinations(range(d), 2))


def theta_from_precision(omega: np.ndarray) -> np.ndarray:
    """``-omega_jk / sqrt(omega_jj omega_kk)`` off the diagonal, ones on it."""
    s = 1.0 / np.sqrt(np.diag(omega))
    theta = -omega * np.outer(s, s)
    theta = 0.5 * (theta + theta.T)
    np.fill_diagonal(theta, 1.0)
    return theta


def _pair_scores(a: np.ndarray, theta: np.ndarray, pairs, mean_aa=None, mean_sq=None) -> np.ndarray:
    """Influence values for each pair from the standardized components ``a``.

    ``mean_aa`` and ``mean_sq`` are the centring constants ``E[a_j a_k]`` and
    ``E[a_j^2]``; when omitted, empirical means over the rows of ``a`` are used.
    """
    j = np.array([p[0] for p in pairs], dtype=int)
    k = np.array([p[1] for p in pairs], dtype=int)
    prod = a[:, j] * a[:, k]
    sq = a[:, j] ** 2 + a[:, k] ** 2
    if mean_aa is None:
        c_prod = prod.mean(axis=0)
        c_sq = sq.mean(axis=0)
    else:
        c_prod = mean_aa[j, k]
        c_sq = mean_sq[j] + mean_sq[k]
    th = theta[j, k]
    return -(prod - c_prod) - 0.5 * th * (sq - c_sq)


@dataclass(frozen=True)
class PartialCorrFit:
    theta_hat: np.ndarray
    sigma_hat: np.ndarray
    omega_hat: np.ndarray
    mean: np.ndarray
    a_hat: np.ndarray
    psi_hat: np.ndarray  # n x m, columns follow ``pairs``
    zeta_hat: np.ndarray  # length m
    pairs: list = field(repr=False)

    @property
    def n(self) -> int:
        return self.a_hat.shape[0]

    @property
    def d(self) -> int:
        return self.a_hat.shape[1]

    def pair_index(self, j: int, k: int) -> int:
        if j > k:
            j, k = k, j
        return self.pairs.index((j, k))

    def psi(self, j: int, k: int) -> np.ndarray:
        return self.psi_hat[:, self.pair_index(j, k)]

    def estimates(self) -> np.ndarray:
        return np.array([self.theta_hat[j, k] for j, k in self.pairs])


def _as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("x must be an n x d matrix")
    if not np.all(np.isfinite(x)):
        raise NonFinite("x contains NaN or Inf")
    return x


def pcor_fit(x) -> PartialCorrFit:
    x = _as_matrix(x)
    n, d = x.shape
    if d < 2:
        raise UsageError("partial correlations need at least two variables")
    if n <= d:
        raise UsageError(f"need n > d, got n={n}, d={d}")
    mean = x.mean(axis=0)
    xc = x - mean
    sigma_hat = linalg.sym(xc.T @ xc / n)
    try:
        omega = linalg.inv(sigma_hat)
    except SingularMatrix as exc:
        raise SingularCovariance(f"sample covariance is singular: {exc}") from None
    theta = theta_from_precision(omega)
    a_hat = xc @ omega / np.sqrt(np.diag(omega))
    pairs = pair_list(d)
    psi = _pair_scores(a_hat, theta, pairs)
    zeta = np.sqrt(np.mean(psi**2, axis=0))
    if np.any(zeta <= 0):
        bad = [pairs[i] for i in np.flatnonzero(zeta <= 0)]
        raise DegenerateStudentizer(f"zero studentizer for pair(s) {bad}")
    return PartialCorrFit(theta, sigma_hat, omega, mean, a_hat, psi, zeta, pairs)


def oracle_pcor_scores(x, truth) -> np.ndarray:
    """Population influence values ``psi_jk(X_i)``, shape ``n x m``.

    ``truth`` supplies ``mu_x`` and ``design_cov`` (the covariance of ``x``);
    ``theta`` is taken from ``truth.theta`` when present.
    """
    x = _as_matrix(x)
    sigma = linalg.sym(truth.design_cov)
    if sigma.shape[0] != x.shape[1]:
        raise DimensionMismatch("truth covariance does not match x")
    omega = linalg.inv(sigma)
    theta = getattr(truth, "theta", None)
    theta = theta_from_precision(omega) if theta is None else np.asarray(theta)
    s = 1.0 / np.sqrt(np.diag(omega))
    a = (x - truth.mu_x) @ omega * s
    # E[a_j a_k] = omega_jk / sqrt(omega_jj omega_kk), E[a_j^2] = 1
    mean_aa = omega * np.outer(s, s)
    mean_sq = np.ones(x.shape[1])
    return _pair_scores(a, theta, pair_list(x.shape[1]), mean_aa, mean_sq)


def pcor_bootstrap(fit: PartialCorrFit, b: int = 2000, seed: int = 0, workers: int = 1,
                   key=rng.PCOR_BOOTSTRAP) -> BootstrapDistribution:
    if np.any(fit.zeta_hat <= 0):
        raise DegenerateStudentizer("zero studentizer")
    scores = fit.psi_hat / np.sqrt(fit.n)
    draws = studentized_max(scores, fit.zeta_hat, int(b), rng.check_seed(seed), key, workers)
    return BootstrapDistribution(draws, int(b), int(seed))


@dataclass(frozen=True)
class PairIntervals:
    method: str
    level: float
    crit: float
    pairs: list
    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    width: np.ndarray

    def covers(self, theta: np.ndarray) -> bool:
        target = np.array([theta[j, k] for j, k in self.pairs])
        return bool(np.all((self.lower <= target) & (target <= self.upper)))

    def edges(self) -> list[tuple[int, int]]:
        """Pairs whose interval excludes zero."""
        keep = (self.lower > 0) | (self.upper < 0)
        return [p for p, flag in zip(self.pairs, keep) if flag]


def pcor_ci(fit: PartialCorrFit, method: str = "bootstrap", alpha: float = 0.05, b: int = 2000,
            seed: int = 0, workers: int = 1, key=rng.PCOR_BOOTSTRAP) -> PairIntervals:
    if not 0.0 < float(alpha) < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")
    m = len(fit.pairs)
    if method == "bonferroni":
        crit = bonferroni_crit(m, alpha)
    elif method == "sidak":
        crit = sidak_crit(m, alpha)
    elif method == "bootstrap":
        crit = upper_quantile(pcor_bootstrap(fit, b, seed, workers, key).draws, alpha)
    else:
        raise UsageError(f"unknown method {method!r}")
    est = fit.estimates()
    r = rectangle(est, fit.zeta_hat / np.sqrt(fit.n), crit, method, alpha)
    return PairIntervals(method, r.level, r.crit, list(fit.pairs), est, r.lower, r.upper, r.width)


@dataclass(frozen=True)
class LinearizationReport:
    lhs: float
    d_n_sigma: float
    mean_norm_sq: float

    @property
    def ratio(self) -> float:
        denom = self.d_n_sigma**2 + self.mean_norm_sq
        return float("inf") if denom == 0 and self.lhs > 0 else (0.0 if denom == 0 else self.lhs / denom)


def verify_pcor_linearization(x, truth) -> LinearizationReport:
    """Size of the remainder after linearizing the partial correlations.

    Returns ``max_{j<k} |theta_hat - theta + mean_i psi_jk(X_i)|`` with the
    ingredients ``D`` (whitened covariance deviation) and
    ``||mean - mu||^2_{Sigma^{-1}}`` that control it. The diagonal is omitted
    because both ``theta_hat_jj`` and ``theta_jj`` are fixed at one.
    """
    x = _as_matrix(x)
    n = x.shape[0]
    sigma = linalg.sym(truth.design_cov)
    mu = np.asarray(truth.mu_x, dtype=np.float64)
    xc = x - x.mean(axis=0)
    s_cov = linalg.sym(xc.T @ xc / n)
    w = linalg.inv_sqrt(sigma)
    dn = linalg.op_norm(w @ s_cov @ w - np.eye(sigma.shape[0]))
    if dn > 0.5:
        raise PreconditionViolated(f"whitened covariance deviation {dn:.3f} exceeds 1/2")
    fit = pcor_fit(x)
    theta = theta_from_precision(linalg.inv(sigma))
    psi_bar = oracle_pcor_scores(x, truth).mean(axis=0)
    diff = fit.estimates() - np.array([theta[j, k] for j, k in fit.pairs]) + psi_bar
    dev = x.mean(axis=0) - mu
    mean_norm_sq = float(dev @ linalg.solve_pd(linalg.spectral(sigma), dev))
    return LinearizationReport(float(np.max(np.abs(diff))), dn, mean_norm_sq)
