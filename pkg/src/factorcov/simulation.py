"""Synthetic factor-model data and Monte Carlo experiments.

Generators draw i.i.d. sub-Gaussian factors and idiosyncratic errors with an
exact covariance factorization, so the finite-sample covariance of the noise
is the target matrix by construction, not approximately. All randomness
flows from explicit integer seeds; replication ``r`` of an experiment uses
the substream ``SeedSequence(seed, spawn_key=(r,))``, which makes any single
replication reproducible in isolation and the whole experiment independent
of worker scheduling.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from factorcov import kernels
from factorcov.factors import fit_pc
from factorcov.linalg import banded_matrix, reflect_upper
from factorcov.thresholding import plugin_scale

LOW_REPS_WARNING = "replication count below 100: standard errors unreliable"

MIN_FOURTH_MOMENT_FLAG = "fourth-moment studentizer nearly degenerate"
MOMENT_GAP_FLAG = "residual fourth-moment gap dominates the studentizer floor"


class ConstructionWarning(UserWarning):
    """Raised when a generated covariance needed a positive-definite repair."""


# ---------------------------------------------------------------------------
# covariance structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Banded:
    """decay^|j-l| within the band, unit diagonal; bandwidth 0 = identity."""

    bandwidth: int = 2
    decay: float = 0.4


@dataclass(frozen=True)
class BlockDiagonal:
    """Equicorrelated blocks: unit diagonal, within_corr inside each block."""

    block_size: int = 4
    within_corr: float = 0.3


@dataclass(frozen=True)
class RandomSparse:
    """Random sparse structure honoring a row-sparsity budget.

    ``m_p_target`` bounds max_j sum_l |sigma_jl|^q (diagonal included);
    ``q=0`` counts nonzeros per row. Deterministic given ``seed``.
    """

    q: float = 0.0
    m_p_target: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must be in [0, 1), got {self.q}")
        if not self.m_p_target > 1.0:
            raise ValueError(
                f"m_p_target must exceed 1 (the diagonal alone contributes 1), "
                f"got {self.m_p_target}"
            )


def build_sigma_u(structure, p):
    """Construct the idiosyncratic covariance for a structure tag.

    If the construction is not positive definite beyond 1e-8, the diagonal is
    inflated by the deficit plus 1e-6 and a ConstructionWarning is emitted.
    """
    if isinstance(structure, Banded):
        sigma = banded_matrix(p, structure.bandwidth, structure.decay)
    elif isinstance(structure, BlockDiagonal):
        if structure.block_size < 1:
            raise ValueError("block_size must be >= 1")
        sigma = np.zeros((p, p))
        for start in range(0, p, structure.block_size):
            stop = min(start + structure.block_size, p)
            sigma[start:stop, start:stop] = structure.within_corr
        np.fill_diagonal(sigma, 1.0)
        sigma = reflect_upper(sigma)
    elif isinstance(structure, RandomSparse):
        sigma = _random_sparse_sigma(structure, p)
    else:
        raise TypeError(f"unsupported covariance structure: {structure!r}")

    min_eig = float(np.min(np.linalg.eigvalsh(sigma)))
    if min_eig <= 1e-8:
        bump = (1e-8 - min_eig) + 1e-6
        sigma = sigma + bump * np.eye(p)
        warnings.warn(
            f"covariance construction had min eigenvalue {min_eig:.3e}; "
            f"diagonal inflated by {bump:.3e}",
            ConstructionWarning,
            stacklevel=2,
        )
    return sigma


def _random_sparse_sigma(structure, p):
    # Greedy symmetric fill: accept random off-diagonal pairs while every row
    # stays inside both the sparsity budget and an L1 budget of 0.9 (strict
    # diagonal dominance keeps the matrix positive definite without repair).
    rng = np.random.default_rng(structure.seed)
    sigma = np.eye(p)
    q = structure.q
    if q == 0.0:
        row_budget = np.full(p, float(math.floor(structure.m_p_target)) - 1.0)
    else:
        row_budget = np.full(p, structure.m_p_target - 1.0)
    l1_budget = np.full(p, 0.9)

    pairs = [(j, l) for j in range(p) for l in range(j + 1, p)]
    rng.shuffle(pairs)
    for j, l in pairs:
        magnitude = rng.uniform(0.15, 0.35)
        cost = 1.0 if q == 0.0 else magnitude**q
        if row_budget[j] < cost or row_budget[l] < cost:
            continue
        if l1_budget[j] < magnitude or l1_budget[l] < magnitude:
            continue
        value = magnitude if rng.uniform() < 0.5 else -magnitude
        sigma[j, l] = value
        sigma[l, j] = value
        row_budget[j] -= cost
        row_budget[l] -= cost
        l1_budget[j] -= magnitude
        l1_budget[l] -= magnitude
    return sigma


def sparsity_measure(sigma, q):
    """max_j sum_l |sigma_jl|^q (with 0^0 = 0), the row-sparsity size."""
    a = np.abs(np.asarray(sigma, dtype=np.float64))
    if q == 0.0:
        return float(np.max(np.sum(a > 0.0, axis=1)))
    return float(np.max(np.sum(np.where(a > 0.0, a**q, 0.0), axis=1)))


# ---------------------------------------------------------------------------
# data-generating process
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DGPSpec:
    """Synthetic model description: dimensions, structures, distributions.

    Loadings are i.i.d. uniform on ``loading_range`` (bounded support);
    factors are Gaussian with covariance ``factor_cov`` (identity when
    ``None``); noise is Gaussian or scaled-uniform with exact covariance
    given by ``sigma_u_structure``.
    """

    p: int
    n: int
    k: int
    sigma_u_structure: object = Banded()
    loading_range: tuple = (0.5, 1.5)
    factor_cov: np.ndarray | None = None
    noise_dist: str = "normal"
    seed: int = 0

    def __post_init__(self):
        if self.p < 2 or self.n < 2:
            raise ValueError(f"need p, n >= 2, got p={self.p}, n={self.n}")
        if self.k < 0 or self.k >= min(self.p, self.n):
            raise ValueError(
                f"k must satisfy 0 <= k < min(p, n) = {min(self.p, self.n)}, got {self.k}"
            )
        lo, hi = self.loading_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"invalid loading range ({lo}, {hi})")
        if self.noise_dist not in ("normal", "uniform"):
            raise ValueError(f"noise_dist must be 'normal' or 'uniform', got {self.noise_dist!r}")
        if self.factor_cov is not None:
            fc = np.asarray(self.factor_cov, dtype=np.float64)
            if fc.shape != (self.k, self.k):
                raise ValueError(f"factor_cov must be {self.k}x{self.k}, got {fc.shape}")
            if self.k > 0 and np.min(np.linalg.eigvalsh(fc)) <= 0:
                raise ValueError("factor_cov must be positive definite")


class SimulatedData(NamedTuple):
    """One draw from the model: observations plus the latent truth."""

    y: np.ndarray        # (p, n)
    factors: np.ndarray  # (n, k)
    idio: np.ndarray     # (p, n)
    loadings: np.ndarray # (p, k)


def generate_sigma_u(spec):
    """The idiosyncratic covariance implied by a DGPSpec (deterministic)."""
    return build_sigma_u(spec.sigma_u_structure, spec.p)


def replication_rng(seed, index):
    """Generator for replication ``index`` of the experiment stream ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def simulate(spec, rng=None, sigma_u=None):
    """Draw one dataset from the model, bit-reproducible given the seed.

    Draw order is fixed (loadings, then factors, then noise). ``rng`` lets
    experiments substitute per-replication substreams; ``sigma_u`` lets them
    reuse a precomputed covariance (it must equal ``generate_sigma_u(spec)``).
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    if sigma_u is None:
        sigma_u = generate_sigma_u(spec)
    p, n, k = spec.p, spec.n, spec.k

    lo, hi = spec.loading_range
    loadings = rng.uniform(lo, hi, size=(p, k))
    if k > 0:
        fc = np.eye(k) if spec.factor_cov is None else np.asarray(spec.factor_cov, dtype=np.float64)
        factors = rng.standard_normal((n, k)) @ np.linalg.cholesky(fc).T
    else:
        factors = np.zeros((n, 0))
    if spec.noise_dist == "normal":
        shocks = rng.standard_normal((p, n))
    else:
        half_width = math.sqrt(3.0)  # unit-variance uniform
        shocks = rng.uniform(-half_width, half_width, size=(p, n))
    idio = np.linalg.cholesky(sigma_u) @ shocks
    y = loadings @ factors.T + idio
    return SimulatedData(y=y, factors=factors, idio=idio, loadings=loadings)


# ---------------------------------------------------------------------------
# moment diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentDiagnostics:
    """Finite-sample checks of the moment conditions behind the threshold."""

    min_fourth_cross_moment: float  # min_jl (1/n) sum u_ji^2 u_li^2
    max_sixth_moment: float         # max_j (1/n) sum u_ji^6
    fourth_moment_gap: float        # max_jl |(1/n) sum (u^2 u^2 - uhat^2 uhat^2)|
    flags: tuple = field(default_factory=tuple)


def moment_diagnostics(u, u_hat):
    """Diagnostics comparing true and fitted residual moments."""
    u = np.asarray(u, dtype=np.float64)
    u_hat = np.asarray(u_hat, dtype=np.float64)
    if u.shape != u_hat.shape:
        raise ValueError(f"shape mismatch: u {u.shape} vs u_hat {u_hat.shape}")
    n = u.shape[1]
    _, fourth_true = kernels.cross_moments(u)
    _, fourth_hat = kernels.cross_moments(u_hat)
    min_fourth = float(np.min(fourth_true))
    max_sixth = float(np.max(np.sum(u**6, axis=1) / n))
    gap = kernels.max_abs_diff(fourth_true, fourth_hat)
    flags = []
    if min_fourth < 1e-4:
        flags.append(MIN_FOURTH_MOMENT_FLAG)
    if gap > 0.5 * min_fourth:
        flags.append(MOMENT_GAP_FLAG)
    return MomentDiagnostics(
        min_fourth_cross_moment=min_fourth,
        max_sixth_moment=max_sixth,
        fourth_moment_gap=gap,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# experiment reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSummary:
    """Aggregates for one (p, n) grid point."""

    p: int
    n: int
    max_norm_error_mean: float
    max_norm_error_sd: float
    operator_norm_error_mean: float
    operator_norm_error_sd: float
    frobenius_norm_error_mean: float
    frobenius_norm_error_sd: float
    residual_term_mean: float
    zero_fraction_mean: float
    seed: int

    def to_dict(self):
        return {
            "p": self.p,
            "n": self.n,
            "max_norm_error_mean": self.max_norm_error_mean,
            "max_norm_error_sd": self.max_norm_error_sd,
            "operator_norm_error_mean": self.operator_norm_error_mean,
            "operator_norm_error_sd": self.operator_norm_error_sd,
            "frobenius_norm_error_mean": self.frobenius_norm_error_mean,
            "frobenius_norm_error_sd": self.frobenius_norm_error_sd,
            "residual_term_mean": self.residual_term_mean,
            "zero_fraction_mean": self.zero_fraction_mean,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Monte Carlo outputs: per-point errors, coverage, fitted slopes."""

    kind: str
    points: tuple
    reps: int
    seed: int
    c0: float
    alpha: float
    coverage_frequency: float | None = None
    coverage_se: float | None = None
    fitted_slopes: dict | None = None
    flags: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {
            "kind": self.kind,
            "points": [pt.to_dict() for pt in self.points],
            "reps": self.reps,
            "seed": self.seed,
            "c0": self.c0,
            "alpha": self.alpha,
            "coverage_frequency": self.coverage_frequency,
            "coverage_se": self.coverage_se,
            "fitted_slopes": (
                {name: {"slope": s, "se": se} for name, (s, se) in self.fitted_slopes.items()}
                if self.fitted_slopes is not None
                else None
            ),
            "flags": list(self.flags),
        }


def fit_loglog_slope(x, y):
    """OLS slope (with standard error) of log y on log x.

    Requires at least 2 distinct x values and positive data. With exactly
    two points the standard error is degenerate and reported as 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if len(set(x.tolist())) < 2:
        raise ValueError("slope undefined: grid values are all equal")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    lx, ly = np.log(x), np.log(y)
    lx_c = lx - lx.mean()
    sxx = float(np.sum(lx_c * lx_c))
    slope = float(np.sum(lx_c * ly) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = len(x) - 2
    if dof <= 0:
        return slope, 0.0
    se = float(np.sqrt(np.sum(resid * resid) / dof / sxx))
    return slope, se


def _map_in_order(fn, count, threads):
    """Evaluate fn(0..count-1), returning results in index order."""
    if threads is None or threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _with_replication_context(exc, rep, seed):
    exc.args = (f"replication {rep} (root seed {seed}, spawn key ({rep},)): {exc}",)
    return exc


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _replication_errors(spec, sigma_u, rep, c0, alpha, threshold_scale=1.0):
    """One replication: simulate, fit, threshold; return the error record."""
    rng = replication_rng(spec.seed, rep)
    data = simulate(spec, rng=rng, sigma_u=sigma_u)
    fit = fit_pc(data.y, spec.k)
    s_hat, fourth = kernels.cross_moments(fit.residuals)
    mu = plugin_scale(spec.p, spec.n, c0, alpha) * np.sqrt(fourth)

    exceeded = bool(np.any(np.abs(s_hat - sigma_u) > mu * threshold_scale))
    sigma_hat = kernels.soft_threshold_matrix(s_hat, mu)
    diff = sigma_hat - sigma_u
    off = ~np.eye(spec.p, dtype=bool)
    return {
        "exceeded": exceeded,
        "max_norm": float(np.max(np.abs(diff))),
        "operator_norm": float(np.max(np.abs(np.linalg.eigvalsh(reflect_upper(diff))))),
        "frobenius_norm": float(np.sqrt(np.sum(diff * diff))),
        "residual_term": kernels.max_abs_diff(
            s_hat, kernels.sample_cross_moment(data.idio)
        ),
        "zero_fraction": float(
            np.count_nonzero(sigma_hat[off] == 0.0) / (spec.p * spec.p - spec.p)
        ),
    }


def _summarize_point(spec, records):
    def stats(key):
        vals = np.array([r[key] for r in records])
        return float(vals.mean()), float(vals.std(ddof=1) if len(vals) > 1 else 0.0)

    mx = stats("max_norm")
    op = stats("operator_norm")
    fr = stats("frobenius_norm")
    return PointSummary(
        p=spec.p,
        n=spec.n,
        max_norm_error_mean=mx[0],
        max_norm_error_sd=mx[1],
        operator_norm_error_mean=op[0],
        operator_norm_error_sd=op[1],
        frobenius_norm_error_mean=fr[0],
        frobenius_norm_error_sd=fr[1],
        residual_term_mean=float(np.mean([r["residual_term"] for r in records])),
        zero_fraction_mean=float(np.mean([r["zero_fraction"] for r in records])),
        seed=spec.seed,
    )


def coverage_experiment(spec, reps, c0=1.1, alpha=0.05, threads=1, threshold_scale=1.0):
    """Frequency with which any studentized entrywise error beats its threshold.

    Per replication the event is
    ``max_jl |s_hat_jl - sigma_jl| > mu_jl`` with sigma the known truth; the
    design targets a frequency of at most ``alpha`` (plus a vanishing term).
    ``threshold_scale`` is a diagnostic hook multiplying mu in the event only.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    flags = [] if reps >= 100 else [LOW_REPS_WARNING]
    sigma_u = generate_sigma_u(spec)

    def one(rep):
        try:
            return _replication_errors(spec, sigma_u, rep, c0, alpha, threshold_scale)
        except np.linalg.LinAlgError as exc:
            raise _with_replication_context(exc, rep, spec.seed)

    records = _map_in_order(one, reps, threads)
    hits = sum(r["exceeded"] for r in records)
    freq = hits / reps
    se = math.sqrt(freq * (1.0 - freq) / reps)
    return ExperimentReport(
        kind="coverage",
        points=(_summarize_point(spec, records),),
        reps=reps,
        seed=spec.seed,
        c0=c0,
        alpha=alpha,
        coverage_frequency=freq,
        coverage_se=se,
        flags=tuple(flags),
    )


def rate_experiment(base_spec, axis, grid, reps, c0=1.1, alpha=0.05, threads=1):
    """Error decay along a grid of sample sizes ("n") or dimensions ("p").

    For each grid value the corresponding field of ``base_spec`` is
    replaced, ``reps`` replications are run with common random substreams
    across grid points, and the mean errors per norm are recorded. Fitted
    log-log slopes of mean error against the grid value summarize the decay:
    under sparse truth the max-norm error shrinks like sqrt(log p / n), and
    the residual-estimation term like 1/p once that dominates log p / n.
    """
    if axis not in ("n", "p"):
        raise ValueError(f"axis must be 'n' or 'p', got {axis!r}")
    grid = [int(v) for v in grid]
    if len(grid) < 3:
        raise ValueError(f"grid needs at least 3 points, got {len(grid)}")
    if len(set(grid)) < 2:
        raise ValueError("slope undefined: grid values are all equal")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    flags = [] if reps >= 50 else [LOW_REPS_WARNING]

    points = []
    for value in grid:
        spec = replace(base_spec, **{axis: value})
        sigma_u = generate_sigma_u(spec)

        def one(rep, spec=spec, sigma_u=sigma_u):
            try:
                return _replication_errors(spec, sigma_u, rep, c0, alpha)
            except np.linalg.LinAlgError as exc:
                raise _with_replication_context(exc, rep, spec.seed)

        records = _map_in_order(one, reps, threads)
        points.append(_summarize_point(spec, records))

    xs = np.array(grid, dtype=np.float64)
    slopes = {
        "max_norm": fit_loglog_slope(xs, [pt.max_norm_error_mean for pt in points]),
        "operator_norm": fit_loglog_slope(xs, [pt.operator_norm_error_mean for pt in points]),
        "frobenius_norm": fit_loglog_slope(xs, [pt.frobenius_norm_error_mean for pt in points]),
        "residual_term": fit_loglog_slope(xs, [pt.residual_term_mean for pt in points]),
    }
    return ExperimentReport(
        kind="rate",
        points=tuple(points),
        reps=reps,
        seed=base_spec.seed,
        c0=c0,
        alpha=alpha,
        fitted_slopes=slopes,
        flags=tuple(flags),
    )
