"""Principal-components factor estimation and residual moments.

Data convention: an observation matrix ``y`` is (p, n) with rows indexing
variables and columns indexing observations. Factors are normalized so that
``factors' factors / n`` is the identity; loadings follow by regression, and
residuals are exactly ``y - loadings @ factors.T``.

The fitted factors equal sqrt(n) times the leading eigenvectors of ``y' y``.
Whichever Gram matrix (p x p or n x n) is smaller gets decomposed; the other
side is recovered by multiplication, and the sign convention is re-applied
to the factor columns so both routes agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from factorcov import kernels
from factorcov.linalg import as_float_matrix, reflect_upper, sym_eigen


def validate_observations(y, name="observations"):
    """Check the (p, n) layout contract: both dims >= 2, finite entries."""
    y = as_float_matrix(y, name)
    p, n = y.shape
    if p < 2 or n < 2:
        raise ValueError(f"{name} needs at least 2 variables and 2 observations, got {y.shape}")
    return y


@dataclass(frozen=True)
class FactorFit:
    """Estimated loadings (p, k), factors (n, k) and residuals (p, n)."""

    loadings: np.ndarray
    factors: np.ndarray
    residuals: np.ndarray

    @property
    def p(self):
        return self.residuals.shape[0]

    @property
    def n(self):
        return self.residuals.shape[1]

    @property
    def k(self):
        return self.loadings.shape[1]


def _fix_column_signs(m):
    idx = np.argmax(np.abs(m), axis=0)
    signs = np.sign(m[idx, np.arange(m.shape[1])])
    signs[signs == 0] = 1.0
    return m * signs


def fit_pc(y, k):
    """Fit ``k`` factors by principal components.

    Parameters
    ----------
    y : array, shape (p, n)
        Observations, rows are variables.
    k : int
        Number of factors, ``0 <= k < min(p, n)``. With ``k=0`` the fit is
        the trivial one: empty factor block, residuals equal to ``y``.

    Returns
    -------
    FactorFit
    """
    y = validate_observations(y)
    p, n = y.shape
    k = int(k)
    if k < 0 or k >= min(p, n):
        raise ValueError(f"k must satisfy 0 <= k < min(p, n) = {min(p, n)}, got {k}")
    if k == 0:
        return FactorFit(
            loadings=np.zeros((p, 0)),
            factors=np.zeros((n, 0)),
            residuals=y.copy(),
        )

    if p > n:
        gram = reflect_upper(y.T @ y)  # n x n
        decomp = sym_eigen(gram)
        factors = np.sqrt(n) * decomp.vectors[:, :k]
    else:
        gram = reflect_upper(y @ y.T)  # p x p
        decomp = sym_eigen(gram)
        top = decomp.values[:k]
        if top[-1] <= max(top[0], 0.0) * 1e-12 or top[-1] <= 0.0:
            raise np.linalg.LinAlgError(
                f"data has numerical rank below k={k}; cannot normalize factors"
            )
        factors = np.sqrt(n) * (y.T @ (decomp.vectors[:, :k] / np.sqrt(top)))
    factors = _fix_column_signs(factors)
    loadings = y @ factors / n
    residuals = y - loadings @ factors.T
    return FactorFit(loadings=loadings, factors=factors, residuals=residuals)


def residual_sample_covariance(fit):
    """Residual sample covariance (1/n) * U_hat U_hat', exactly symmetric."""
    return kernels.sample_cross_moment(fit.residuals)


def residual_term_error(fit, u_true):
    """Max-norm gap between fitted and true residual sample covariances.

    ``max_jl |(1/n) sum_i uhat_ji uhat_li - (1/n) sum_i u_ji u_li|`` — the
    part of the estimation error that comes from estimating residuals.
    Available only in simulations where the true ``u`` is known.
    """
    u_true = as_float_matrix(u_true, "u_true")
    if u_true.shape != fit.residuals.shape:
        raise ValueError(
            f"shape mismatch: residuals {fit.residuals.shape} vs u_true {u_true.shape}"
        )
    s_hat = kernels.sample_cross_moment(fit.residuals)
    s_true = kernels.sample_cross_moment(u_true)
    return kernels.max_abs_diff(s_hat, s_true)
