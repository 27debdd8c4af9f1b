"""Assumption-lean inference for linear projection parameters and partial correlations.

Least-squares fits with sandwich standard errors, simultaneous confidence
rectangles (Bonferroni, Sidak, Gaussian multiplier bootstrap), partial
correlation inference, and a simulation lab with known ground truth.
"""

__version__ = "0.1.0"

from .confidence import (
    BootstrapDistribution,
    SimultaneousCI,
    ci,
    empirical_cdf_distance,
    multiplier_bootstrap,
)
from .gaussian_max import MaxGaussSpec, anti_concentration, bonferroni_crit, mc_quantile, sidak_crit
from .ols import Dataset, ProjectionFit, fit, oracle_scores
from .pcor import PartialCorrFit, pcor_bootstrap, pcor_ci, pcor_fit
from .sandwich import SandwichCov, assumption_diagnostics, oracle_sandwich, sandwich_cov

__all__ = [
    "BootstrapDistribution", "Dataset", "MaxGaussSpec", "PartialCorrFit", "ProjectionFit",
    "SandwichCov", "SimultaneousCI", "anti_concentration", "assumption_diagnostics",
    "bonferroni_crit", "ci", "empirical_cdf_distance", "fit", "mc_quantile",
    "multiplier_bootstrap", "oracle_sandwich", "oracle_scores", "pcor_bootstrap", "pcor_ci",
    "pcor_fit", "sandwich_cov", "sidak_crit",
]
