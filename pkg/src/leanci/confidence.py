"""Simultaneous confidence rectangles for the projection parameter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DegenerateVariance, EmptyInput, InvalidLevel, UsageError
from .gaussian_max import bonferroni_crit, sidak_crit, upper_quantile
from .ols import ProjectionFit
from .sandwich import SandwichCov

METHODS = ("bonferroni", "sidak", "bootstrap")
DEFAULT_B = 2000


@dataclass(frozen=True)
class SimultaneousCI:
    method: str
    level: float
    crit: float
    lower: np.ndarray
    upper: np.ndarray
    width: np.ndarray

    def covers(self, value) -> bool:
        value = np.asarray(value)
        return bool(np.all((self.lower <= value) & (value <= self.upper)))


@dataclass(frozen=True)
class BootstrapDistribution:
    draws: np.ndarray
    b: int
    seed: int

    def quantile(self, alpha: float) -> float:
        return upper_quantile(self.draws, alpha)


def rectangle(center, std_err, crit: float, method: str, alpha: float) -> SimultaneousCI:
    center = np.asarray(center, dtype=np.float64)
    half = crit * np.asarray(std_err, dtype=np.float64)
    return SimultaneousCI(method, 1.0 - alpha, float(crit), center - half, center + half, 2.0 * half)


def studentized_max(scores: np.ndarray, scale: np.ndarray, b: int, seed: int, key,
                    workers: int = 1) -> np.ndarray:
    """``max_j |sum_i e_i scores_ij| / scale_j`` for ``b`` Gaussian multiplier draws.

    Multipliers for replicate block ``k`` come from substream ``(seed, *key, k)``.
    """
    key = _as_key(key)
    n = scores.shape[0]
    if b < 1:
        raise UsageError("number of bootstrap draws must be >= 1")
    if not np.all(scale > 0):
        raise DegenerateVariance("bootstrap studentizer must be positive")
    w = scores / scale

    def block(args):
        k, start, stop = args
        e = rng.substream(seed, *key, k).standard_normal((stop - start, n))
        return np.max(np.abs(e @ w), axis=1)

    return np.concatenate(rng.pmap(block, rng.blocks(int(b)), workers))


def _as_key(key) -> tuple:
    return tuple(key) if isinstance(key, (tuple, list)) else (int(key),)


def multiplier_bootstrap(fit: ProjectionFit, cov: SandwichCov, b: int = DEFAULT_B, seed: int = 0,
                         workers: int = 1, key=rng.BOOTSTRAP) -> BootstrapDistribution:
    n = fit.n
    total = fit.scores.sum(axis=0)
    bound = 1e-8 * n * (np.abs(fit.scores).max(axis=0) + np.finfo(float).tiny)
    if np.any(np.abs(total) > bound):
        raise AssertionError("fitted scores do not sum to zero; the fit is inconsistent")
    draws = studentized_max(fit.scores / n, cov.std_err, int(b), rng.check_seed(seed), key, workers)
    return BootstrapDistribution(draws, int(b), int(seed))


def ci(fit: ProjectionFit, cov: SandwichCov, method: str = "bootstrap", alpha: float = 0.05,
       boot_b: int = DEFAULT_B, seed: int = 0, workers: int = 1, key=rng.BOOTSTRAP) -> SimultaneousCI:
    if not 0.0 < float(alpha) < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha}")
    d = fit.d
    if method == "bonferroni":
        crit = bonferroni_crit(d, alpha)
    elif method == "sidak":
        crit = sidak_crit(d, alpha)
    elif method == "bootstrap":
        crit = multiplier_bootstrap(fit, cov, boot_b, seed, workers, key).quantile(alpha)
    else:
        raise UsageError(f"unknown method {method!r}; choose from {METHODS}")
    return rectangle(fit.beta_hat, cov.std_err, crit, method, alpha)


def empirical_cdf_distance(draws_a, draws_b) -> float:
    """Two-sample Kolmogorov distance ``sup_t |F_a(t) - F_b(t)|``."""
    a = np.sort(np.asarray(draws_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(draws_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptyInput("both samples must be non-empty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
