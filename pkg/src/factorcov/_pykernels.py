"""Pure-numpy implementations of the hot kernels.

Reference backend: every function here must agree with the compiled
``_fastkernels`` versions to well below the tolerances the estimators are
tested at (1e-12 in max norm on unit-scale inputs). Symmetric outputs are
built from the upper triangle so symmetry holds exactly, not just to
rounding.
"""

import numpy as np


def _reflect_upper(a):
    out = np.triu(a)
    out += np.triu(a, 1).T
    return out


def sample_cross_moment(u):
    """(1/n) * U U' with exact symmetry; U is (p, n)."""
    n = u.shape[1]
    return _reflect_upper(u @ u.T / n)


def cross_moments(u):
    """Second and fourth cross moments of the rows of U in one call.

    Returns (S, Q) where S_jl = (1/n) sum_i u_ji u_li and
    Q_jl = (1/n) sum_i u_ji^2 u_li^2. Both are exactly symmetric.
    """
    n = u.shape[1]
    u2 = u * u
    s = _reflect_upper(u @ u.T / n)
    q = _reflect_upper(u2 @ u2.T / n)
    return s, q


def soft_threshold_matrix(s, mu):
    """Entrywise soft threshold off the diagonal; diagonal copied verbatim."""
    out = np.sign(s) * np.maximum(np.abs(s) - mu, 0.0)
    np.fill_diagonal(out, np.diagonal(s))
    return out


def max_abs_diff(a, b):
    """Max norm of A - B."""
    return float(np.max(np.abs(a - b)))
