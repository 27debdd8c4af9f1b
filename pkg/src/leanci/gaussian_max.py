"""Law of ``max_j |G_j|`` for a unit-variance Gaussian vector.

Critical values come in three flavours: Bonferroni and Sidak (closed form,
conservative) and Monte Carlo quantiles under a given correlation matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import linalg, rng
from .errors import InvalidLevel, NonPSDCorrelation, UsageError

DEFAULT_EPS_GRID = (0.01, 0.05, 0.1)
T_GRID_POINTS = 512


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def z_upper(gamma: float) -> float:
    """Upper ``gamma`` quantile of the standard normal, ``z_gamma``."""
    return float(-ndtri(gamma))


def bonferroni_crit(d: int, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return z_upper(alpha / (2 * int(d)))


def sidak_crit(d: int, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    d = int(d)
    if d == 1:
        return z_upper(alpha / 2)
    # 1 - (1 - alpha)^{1/d}, computed without cancellation
    gamma = -math.expm1(math.log1p(-alpha) / d)
    return z_upper(gamma / 2)


def upper_quantile(draws: np.ndarray, alpha: float) -> float:
    """Order statistic ``ceil((1 - alpha) B)`` of the sorted draws.

    Conservative convention: never below the interpolated quantile.
    """
    alpha = _check_alpha(alpha)
    s = np.sort(np.asarray(draws, dtype=np.float64))
    k = math.ceil((1.0 - alpha) * s.size - 1e-12)
    return float(s[min(max(k, 1), s.size) - 1])


@dataclass(frozen=True)
class MaxGaussSpec:
    corr: np.ndarray
    mc_draws: int = 100_000
    seed: int = 0

    def __post_init__(self):
        c = linalg.sym(self.corr)
        if np.max(np.abs(np.diag(c) - 1.0)) > 1e-12:
            raise NonPSDCorrelation("correlation matrix must have a unit diagonal")
        lam = linalg.spectral(c).eigenvalues
        if lam[-1] < -1e-10:
            raise NonPSDCorrelation(f"correlation matrix is not PSD (min eigenvalue {lam[-1]:.3e})")
        if int(self.mc_draws) < 1:
            raise UsageError("mc_draws must be positive")
        object.__setattr__(self, "corr", c)
        object.__setattr__(self, "seed", rng.check_seed(self.seed))

    @property
    def d(self) -> int:
        return self.corr.shape[0]


def _factor(corr: np.ndarray) -> np.ndarray:
    # spectral factor L with L L' = corr; tolerates singular correlations
    dec = linalg.spectral(corr)
    return dec.eigenvectors * np.sqrt(np.clip(dec.eigenvalues, 0.0, None))


def sample_max_abs(spec: MaxGaussSpec, workers: int = 1, tag: int = rng.MAX_GAUSS) -> np.ndarray:
    """``mc_draws`` realisations of ``max_j |G_j|`` with ``G ~ N(0, corr)``."""
    lt = _factor(spec.corr).T

    def block(args):
        b, start, stop = args
        z = rng.substream(spec.seed, tag, b).standard_normal((stop - start, spec.d))
        return np.max(np.abs(z @ lt), axis=1)

    return np.concatenate(rng.pmap(block, rng.blocks(int(spec.mc_draws), 8192), workers))


def mc_quantile(spec: MaxGaussSpec, alpha: float, workers: int = 1) -> float:
    return upper_quantile(sample_max_abs(spec, workers), alpha)


def anti_concentration(spec: MaxGaussSpec, eps_grid=DEFAULT_EPS_GRID, workers: int = 1) -> float:
    """Monte Carlo estimate of ``sup_{t, eps} P(t <= M <= t + eps) / eps``.

    The supremum runs over a 512-point grid of ``t`` in ``[0, max M]`` and the
    given ``eps`` values. It is an estimate, not a bound.
    """
    m = np.sort(sample_max_abs(spec, workers))
    t = np.linspace(0.0, m[-1], T_GRID_POINTS)
    best = 0.0
    for eps in eps_grid:
        eps = float(eps)
        if eps <= 0:
            raise UsageError("eps values must be positive")
        counts = np.searchsorted(m, t + eps, side="right") - np.searchsorted(m, t, side="left")
        best = max(best, float(counts.max()) / (m.size * eps))
    return best
