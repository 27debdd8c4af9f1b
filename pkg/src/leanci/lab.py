"""Simulation laboratory: known-truth data generators and oracle checks.

Covariates are Gaussian with an equicorrelated covariance (unit variances),
optionally preceded by an intercept column. Three response families are
available:

``linear_homoskedastic``
    ``Y = X'beta* + eps``.
``linear_heteroskedastic``
    ``Y = X'beta* + s(X) eps`` with ``s(X)^2 = (1 + X_1^2) / 2``.
``misspecified_quadratic``
    ``Y = X'beta* + c (X_1^2 - 1) + eps``; the projection parameter is still
    ``beta*`` because odd Gaussian moments vanish.

``X_1`` is the first non-intercept covariate. Errors are scaled to have
variance ``scale^2`` under either error law.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg, rng
from .confidence import METHODS, ci, empirical_cdf_distance
from .errors import InvalidSpec, NumericalError, SingularMatrix, UsageError
from .gaussian_max import MaxGaussSpec, sample_max_abs
from .ols import Dataset, ProjectionFit, fit as ols_fit, oracle_scores
from .pcor import pcor_ci, pcor_fit, theta_from_precision
from .sandwich import SandwichCov, kappa_of, oracle_sandwich, sandwich_cov

FAMILIES = ("linear_homoskedastic", "linear_heteroskedastic", "misspecified_quadratic")
ERROR_LAWS = ("gaussian", "student_t")
BRUTE_FORCE_DRAWS = 1_000_000
ORACLE_SEED = 20200715


@dataclass(frozen=True)
class ErrorLaw:
    kind: str = "gaussian"
    scale: float = 1.0
    df: float | None = None

    def __post_init__(self):
        if self.kind not in ERROR_LAWS:
            raise InvalidSpec(f"unknown error law {self.kind!r}")
        if not self.scale >= 0:
            raise InvalidSpec("error scale must be non-negative")
        if self.kind == "student_t" and (self.df is None or not self.df > 4):
            raise InvalidSpec("student_t errors need df > 4 (at least four finite moments)")

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * gen.standard_normal(size)
        nu = float(self.df)
        return self.scale * math.sqrt((nu - 2.0) / nu) * gen.standard_t(nu, size)


@dataclass(frozen=True)
class DGPSpec:
    n: int
    d: int
    family: str = "linear_homoskedastic"
    error_law: ErrorLaw = field(default_factory=ErrorLaw)
    design_corr: float = 0.0
    intercept: bool = True
    seed: int = 0
    c: float = 1.0

    def __post_init__(self):
        if isinstance(self.error_law, dict):
            object.__setattr__(self, "error_law", ErrorLaw(**self.error_law))
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not (int(self.d) >= 1 and int(self.n) >= int(self.d)):
            raise InvalidSpec(f"need n >= d >= 1, got n={self.n}, d={self.d}")
        if not 0.0 <= self.design_corr < 1.0:
            raise InvalidSpec("design_corr must lie in [0, 1)")
        if self.family != "linear_homoskedastic" and self.p < 1:
            raise InvalidSpec(f"{self.family} needs at least one non-intercept covariate")
        try:
            rng.check_seed(self.seed)
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None

    @property
    def p(self) -> int:
        """Number of random (non-intercept) covariates."""
        return self.d - 1 if self.intercept else self.d

    def with_(self, **changes) -> "DGPSpec":
        kw = asdict(self)
        kw["error_law"] = self.error_law
        kw.update(changes)
        return DGPSpec(**kw)


@dataclass(frozen=True)
class OracleTruth:
    beta: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    mu_x: np.ndarray | None = None
    design_cov: np.ndarray | None = None
    theta: np.ndarray | None = None
    v_source: str = "closed_form"


def equicorrelation(p: int, rho: float) -> np.ndarray:
    return (1.0 - rho) * np.eye(p) + rho * np.ones((p, p))


def beta_star(d: int) -> np.ndarray:
    j = np.arange(d)
    return (-1.0) ** j / (1.0 + j)


def _gram(spec: DGPSpec, r: np.ndarray) -> np.ndarray:
    if not spec.intercept:
        return r.copy()
    g = np.zeros((spec.d, spec.d))
    g[0, 0] = 1.0
    g[1:, 1:] = r
    return g


def _sample_x(spec: DGPSpec, gen: np.random.Generator, size: int, factor: np.ndarray) -> np.ndarray:
    z = gen.standard_normal((size, spec.p)) @ factor.T
    if spec.intercept:
        return np.hstack([np.ones((size, 1)), z])
    return z


def _response(spec: DGPSpec, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    col = 1 if spec.intercept else 0
    y = x @ beta_star(spec.d)
    if spec.family == "linear_homoskedastic":
        return y + eps
    x1 = x[:, col]
    if spec.family == "linear_heteroskedastic":
        return y + np.sqrt(0.5 * (1.0 + x1**2)) * eps
    return y + spec.c * (x1**2 - 1.0) + eps


def _truth_key(spec: DGPSpec) -> tuple:
    law = spec.error_law
    return (spec.d, spec.family, law.kind, float(law.scale), law.df, float(spec.design_corr),
            bool(spec.intercept), float(spec.c))


def oracle_truth(spec: DGPSpec) -> OracleTruth:
    """Population quantities for ``spec``; independent of ``n`` and ``seed``."""
    return _oracle_truth_cached(_truth_key(spec), spec.with_(n=max(spec.d, 1), seed=0))


@lru_cache(maxsize=64)
def _oracle_truth_cached(key, spec: DGPSpec) -> OracleTruth:
    p = spec.p
    r = equicorrelation(p, spec.design_corr) if p else np.zeros((0, 0))
    sigma = _gram(spec, r)
    beta = beta_star(spec.d)
    s2 = float(spec.error_law.scale) ** 2
    if spec.family == "linear_homoskedastic":
        v, source = s2 * sigma, "closed_form"
    elif spec.family == "linear_heteroskedastic":
        # E[X X' X_1^2] by Isserlis: R_ab + 2 R_a1 R_b1 on the covariate block,
        # E[X_1^2] = 1 for the intercept entry, zero in mixed entries
        m_cov = r + 2.0 * np.outer(r[:, 0], r[:, 0])
        m = _gram(spec, m_cov)
        v, source = 0.5 * s2 * (sigma + m), "closed_form"
    else:
        v = brute_force_v(spec, BRUTE_FORCE_DRAWS, ORACLE_SEED)
        source = f"brute_force({BRUTE_FORCE_DRAWS})"
    mu_x = np.zeros(p)
    theta = theta_from_precision(linalg.inv(r)) if p >= 1 else None
    for a in (beta, sigma, v, mu_x, r):
        a.setflags(write=False)
    return OracleTruth(beta, sigma, v, mu_x, r if p else None, theta, source)


def brute_force_v(spec: DGPSpec, draws: int, seed: int, check: bool = True) -> np.ndarray:
    """Monte Carlo ``E[X X' (Y - X'beta)^2]`` using antithetic pairs ``(X, eps), (-X, -eps)``.

    With ``check`` set, also confirms ``E[X (Y - X'beta)] = 0`` within a
    4-standard-error band, i.e. that ``beta*`` is the projection parameter.
    """
    factor = linalg.sqrtm(equicorrelation(spec.p, spec.design_corr))
    beta = beta_star(spec.d)
    half = draws // 2
    acc = np.zeros((spec.d, spec.d))
    g_sum = np.zeros(spec.d)
    g_sq = np.zeros(spec.d)
    chunk = 100_000
    for b, start, stop in rng.blocks(half, chunk):
        gen = rng.substream(seed, rng.ORACLE_TRUTH, b)
        x = _sample_x(spec, gen, stop - start, factor)
        eps = spec.error_law.sample(gen, stop - start)
        u_pos = _response(spec, x, eps) - x @ beta
        xn = -x
        if spec.intercept:
            xn[:, 0] = 1.0
        u_neg = _response(spec, xn, -eps) - xn @ beta
        for xx, u in ((x, u_pos), (xn, u_neg)):
            xu = xx * u[:, None]
            acc += xu.T @ xu
        pair = 0.5 * (x * u_pos[:, None] + xn * u_neg[:, None])
        g_sum += pair.sum(axis=0)
        g_sq += (pair**2).sum(axis=0)
    v = linalg.sym(acc / (2 * half))
    if check:
        mean = g_sum / half
        se = np.sqrt(np.maximum(g_sq / half - mean**2, 0.0) / half)
        if np.any(np.abs(mean) > 4.0 * se + 1e-12):
            raise InvalidSpec("beta* is not the projection parameter of this design")
    return v


def draw(spec: DGPSpec, gen: np.random.Generator) -> Dataset:
    factor = _factor_cached(spec.p, float(spec.design_corr))
    x = _sample_x(spec, gen, spec.n, factor)
    eps = spec.error_law.sample(gen, spec.n)
    return Dataset(x, _response(spec, x, eps), intercept=spec.intercept)


@lru_cache(maxsize=64)
def _factor_cached(p: int, rho: float) -> np.ndarray:
    return linalg.sqrtm(equicorrelation(p, rho)) if p else np.zeros((0, 0))


def generate(spec: DGPSpec, replicate: int = 0) -> tuple[Dataset, OracleTruth]:
    gen = rng.substream(spec.seed, rng.REPLICATE, replicate)
    return draw(spec, gen), oracle_truth(spec)


# ---------------------------------------------------------------------------
# oracle diagnostics


def _norm(x: np.ndarray, m: np.ndarray) -> float:
    return float(np.sqrt(max(x @ m @ x, 0.0)))


@dataclass(frozen=True)
class OracleDiagnostics:
    d_n_sigma: float
    kappa_n: float
    lin_error_norm: float
    score_norm: float
    max_ratio_err: float
    c_n_eta: float
    eta_n: float
    in_event: bool
    thm21_rhs: float
    cor22_lhs: float
    abs_tol: float

    @property
    def thm21_holds(self) -> bool:
        return self.lin_error_norm <= self.thm21_rhs * (1 + 1e-8) + self.abs_tol

    @property
    def cor22_holds(self) -> bool:
        return self.cor22_lhs <= self.thm21_rhs * (1 + 1e-8) + self.abs_tol


def oracle_diagnostics(data: Dataset, truth: OracleTruth, fit: ProjectionFit,
                       cov: SandwichCov | None = None, eta_n: float | None = None) -> OracleDiagnostics:
    """Evaluate the deterministic linearization quantities against the truth.

    Norms are ``||x||_{Sigma V_n^{-1} Sigma}`` with ``V_n = V / n``. When
    ``eta_n`` is omitted the realized product ``D * score_norm`` is used.
    ``thm21_rhs`` is ``kappa_n D / (1 - D) * score_norm`` (infinite when
    ``D >= 1``).
    """
    n = data.n
    sigma = linalg.sym(truth.sigma)
    v_n = linalg.sym(truth.v) / n
    w = linalg.inv_sqrt(sigma)
    dn = linalg.op_norm(w @ fit.sigma_hat @ w - np.eye(data.d))
    kappa = kappa_of(sigma, v_n)
    metric = linalg.sym(sigma @ linalg.inv(v_n) @ sigma)
    psi_bar = oracle_scores(data, truth).mean(axis=0)
    beta = np.asarray(truth.beta)
    lin = fit.beta_hat - beta - psi_bar
    lin_norm = _norm(lin, metric)
    score_norm = _norm(psi_bar, metric)
    rhs = kappa * dn / (1.0 - dn) * score_norm if dn < 1 else math.inf

    avar = linalg.sym(linalg.inv(sigma) @ v_n @ linalg.inv(sigma))
    cor_lhs = float(np.max(np.abs(lin) / np.sqrt(np.diag(avar))))

    if cov is not None:
        max_ratio = float(np.max(np.abs(np.sqrt(np.diag(avar) / np.diag(cov.cov)) - 1.0)))
    else:
        max_ratio = math.nan
    eta = dn * score_norm if eta_n is None else float(eta_n)
    c_n = 2 * kappa + 2 * kappa * eta + math.sqrt(2 * math.log(2 * n))
    in_event = bool(dn <= 0.5 and dn * score_norm <= eta and max_ratio <= eta)

    # floating-point floor: solving with Sigma_hat loses ~cond(Sigma_hat) ulps
    eps = np.finfo(float).eps
    cond = float(fit.decomp.eigenvalues[0] / fit.decomp.eigenvalues[-1])
    scale = max(_norm(fit.beta_hat, metric), _norm(beta, metric), score_norm)
    abs_tol = 100.0 * eps * cond * scale
    return OracleDiagnostics(dn, kappa, lin_norm, score_norm, max_ratio, c_n, eta, in_event,
                             rhs, cor_lhs, abs_tol)


@dataclass
class VerificationReport:
    reps: int
    valid: int
    skipped: int
    thm21_violations: int
    cor22_violations: int
    max_thm21_ratio: float
    max_cor22_ratio: float
    event_frequency: float | None
    thm21_holds: list = field(default_factory=list)
    cor22_holds: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return self.thm21_violations + self.cor22_violations


def verify_deterministic_bounds(reps: int, spec: DGPSpec, eta_n: float | None = None,
                                workers: int = 1) -> VerificationReport:
    """Check the linearization inequality and its coordinatewise consequence.

    Replicates with ``D >= 1`` or a singular Gram matrix are skipped and
    counted, never dropped silently.
    """
    if reps < 1:
        raise UsageError("reps must be >= 1")
    truth = oracle_truth(spec)

    def one(r):
        data, _ = generate(spec, r)
        try:
            f = ols_fit(data)
        except SingularMatrix:
            return None
        try:
            cov = sandwich_cov(f) if eta_n is not None else None
        except NumericalError:
            cov = None
        diag = oracle_diagnostics(data, truth, f, cov, eta_n)
        if diag.d_n_sigma >= 1:
            return None
        return diag

    results = rng.pmap(one, range(reps), workers)
    valid = [r for r in results if r is not None]
    t_ok = [r.thm21_holds for r in valid]
    c_ok = [r.cor22_holds for r in valid]

    def ratio(lhs, r):
        return lhs / r.thm21_rhs if r.thm21_rhs > 0 else (0.0 if lhs <= r.abs_tol else math.inf)

    return VerificationReport(
        reps=reps,
        valid=len(valid),
        skipped=reps - len(valid),
        thm21_violations=t_ok.count(False),
        cor22_violations=c_ok.count(False),
        max_thm21_ratio=max((ratio(r.lin_error_norm, r) for r in valid), default=0.0),
        max_cor22_ratio=max((ratio(r.cor22_lhs, r) for r in valid), default=0.0),
        event_frequency=(float(np.mean([r.in_event for r in valid])) if eta_n is not None and valid else None),
        thm21_holds=t_ok,
        cor22_holds=c_ok,
    )


# ---------------------------------------------------------------------------
# Gaussian approximation error and coverage


DELTA_NOISE = 0.02


def normalized_score_max(data: Dataset, truth: OracleTruth) -> float:
    avar = oracle_sandwich(truth) / data.n
    psi_bar = oracle_scores(data, truth).mean(axis=0)
    return float(np.max(np.abs(psi_bar) / np.sqrt(np.diag(avar))))


def estimate_delta_n(spec: DGPSpec, truth: OracleTruth | None = None, reps: int = 2000,
                     mc_draws: int = 100_000, seed: int | None = None, workers: int = 1) -> float:
    """Kolmogorov distance between the normalized oracle-score maximum and ``max |G_j|``.

    Both laws are sampled, so the value carries Monte Carlo noise of order
    ``1.36 sqrt(1/reps + 1/mc_draws)``; see :func:`delta_noise_band`.
    """
    if reps < 500:
        raise UsageError("estimate_delta_n needs reps >= 500")
    truth = oracle_truth(spec) if truth is None else truth
    seed = spec.seed if seed is None else seed

    def one(r):
        gen = rng.substream(seed, rng.DELTA_REPLICATE, r)
        return normalized_score_max(draw(spec, gen), truth)

    stats = np.array(rng.pmap(one, range(reps), workers))
    corr = linalg.corr_of(oracle_sandwich(truth))
    gauss = sample_max_abs(MaxGaussSpec(corr, mc_draws, seed), workers, tag=rng.DELTA_GAUSS)
    return empirical_cdf_distance(stats, gauss)


def delta_noise_band(reps: int, mc_draws: int) -> float:
    """95% two-sample Kolmogorov critical value for the given sample sizes."""
    return 1.358 * math.sqrt(1.0 / reps + 1.0 / mc_draws)


@dataclass
class MethodCoverage:
    method: str
    covered: int
    valid: int
    coverage: float
    mean_width: float
    median_width: float
    width_sqrt_n: float
    mean_crit: float


@dataclass
class CoverageTable:
    mode: str
    n: int
    d: int
    alpha: float
    reps: int
    skipped: int
    methods: dict


def coverage_experiment(spec: DGPSpec, methods=METHODS, alpha: float = 0.1, reps: int = 500,
                        b: int = 1000, seed: int | None = None, mode: str = "regression",
                        workers: int = 1) -> CoverageTable:
    """Empirical simultaneous coverage of the true parameter.

    ``mode="regression"`` targets the projection parameter; ``mode="pcor"``
    uses the covariates alone and targets their partial correlations.
    Per-replicate width is the average side length of the rectangle.
    """
    if reps < 100:
        raise UsageError("coverage experiments need reps >= 100")
    if mode not in ("regression", "pcor"):
        raise UsageError(f"unknown mode {mode!r}")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    if mode == "pcor" and spec.p < 2:
        raise InvalidSpec("pcor mode needs at least two random covariates")
    truth = oracle_truth(spec)
    seed = spec.seed if seed is None else seed
    data_spec = spec.with_(seed=seed)

    def one(r):
        data, _ = generate(data_spec, r)
        key = (rng.EXPERIMENT_BOOTSTRAP, r)
        out = {}
        try:
            if mode == "regression":
                f = ols_fit(data)
                cov = sandwich_cov(f)
                for m in methods:
                    res = ci(f, cov, m, alpha, b, seed, key=key)
                    out[m] = (res.covers(truth.beta), float(np.mean(res.width)), res.crit)
            else:
                x = data.x[:, 1:] if spec.intercept else data.x
                pf = pcor_fit(x)
                for m in methods:
                    res = pcor_ci(pf, m, alpha, b, seed, key=key)
                    out[m] = (res.covers(truth.theta), float(np.mean(res.width)), res.crit)
        except NumericalError:
            return None
        return out

    results = [r for r in rng.pmap(one, range(reps), workers) if r is not None]
    table = {}
    for m in methods:
        cov_flags = np.array([r[m][0] for r in results], dtype=bool)
        widths = np.array([r[m][1] for r in results])
        crits = np.array([r[m][2] for r in results])
        k = len(results)
        med = float(np.median(widths)) if k else math.nan
        table[m] = MethodCoverage(
            method=m,
            covered=int(cov_flags.sum()),
            valid=k,
            coverage=float(cov_flags.mean()) if k else math.nan,
            mean_width=float(widths.mean()) if k else math.nan,
            median_width=med,
            width_sqrt_n=med * math.sqrt(spec.n),
            mean_crit=float(crits.mean()) if k else math.nan,
        )
    return CoverageTable(mode, spec.n, spec.d, float(alpha), reps, reps - len(results), table)
