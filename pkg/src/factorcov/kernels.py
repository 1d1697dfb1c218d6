"""Kernel backend selection.

The estimators funnel their inner-loop work through four kernels (row cross
moments, fused soft thresholding, max-norm differences). A compiled
extension implements them when it was built; otherwise the numpy versions
are used. The choice is made once at import time and can be forced with

    FACTORCOV_BACKEND=python     never load the extension
    FACTORCOV_BACKEND=compiled   require the extension, fail loudly
    FACTORCOV_BACKEND=auto       prefer the extension (default)

Both backends satisfy identical contracts; they may differ by floating-point
rounding (different summation orders), never beyond ~1e-14 relative.
"""

import os

import numpy as np

from factorcov import _pykernels

_impl = _pykernels
_backend = "python"

_requested = os.environ.get("FACTORCOV_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "python", "compiled"):
    raise ValueError(
        f"FACTORCOV_BACKEND must be 'auto', 'python' or 'compiled', got {_requested!r}"
    )
if _requested in ("auto", "compiled"):
    try:
        from factorcov import _fastkernels as _ext
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "FACTORCOV_BACKEND=compiled but the factorcov._fastkernels "
                "extension is not built; reinstall with a C compiler available"
            ) from None
    else:
        _impl = _ext
        _backend = "compiled"


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _backend


def _as_c_float64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sample_cross_moment(u):
    """S with S_jl = (1/n) sum_i u_ji u_li for a (p, n) row-major matrix."""
    return _impl.sample_cross_moment(_as_c_float64(u))


def cross_moments(u):
    """(S, Q): second and fourth row cross-moment matrices of U.

    S_jl = (1/n) sum_i u_ji u_li, Q_jl = (1/n) sum_i u_ji^2 u_li^2.
    Both outputs are exactly symmetric and Q is entrywise nonnegative.
    """
    return _impl.cross_moments(_as_c_float64(u))


def soft_threshold_matrix(s, mu):
    """sgn(s_jl) * max(|s_jl| - mu_jl, 0) off the diagonal; diagonal kept."""
    return _impl.soft_threshold_matrix(_as_c_float64(s), _as_c_float64(mu))


def max_abs_diff(a, b):
    """max_jl |a_jl - b_jl|."""
    return _impl.max_abs_diff(_as_c_float64(a), _as_c_float64(b))
