"""Dense symmetric-matrix primitives shared by the estimators.

Conventions used throughout the package:

* matrices are float64 numpy arrays;
* symmetric matrices are exactly symmetric (built by reflecting the upper
  triangle), so equality of transposed entries is bitwise, not approximate;
* eigenvalues are sorted descending and eigenvector signs follow a fixed
  convention, making every decomposition-based result deterministic.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class EigenDecomposition(NamedTuple):
    """Full symmetric eigendecomposition.

    ``values`` is sorted non-increasing; ``vectors[:, i]`` is the unit
    eigenvector for ``values[i]``, with its largest-magnitude entry
    positive (first such entry on ties).
    """

    values: np.ndarray
    vectors: np.ndarray


def as_float_matrix(a, name="matrix"):
    """Validate a 2-d finite float array and return a float64 copy-if-needed view."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {out.shape}")
    if out.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def reflect_upper(a):
    """Exactly symmetric matrix built from the upper triangle of ``a``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    out = np.triu(a)
    out += np.triu(a, 1).T
    return out


def require_symmetric(a, name="matrix", tol=1e-8):
    """Validate near-symmetry, then return the exactly symmetric reflection."""
    a = as_float_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    skew = np.max(np.abs(a - a.T))
    if skew > tol * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"{name} is not symmetric (max |A - A'| = {skew:.3e})")
    return reflect_upper(a)


def max_norm(a):
    """Largest absolute entry."""
    a = as_float_matrix(a)
    return float(np.max(np.abs(a)))


def frobenius_norm(a):
    """Square root of the sum of squared entries."""
    a = as_float_matrix(a)
    return float(np.sqrt(np.sum(a * a)))


def operator_norm(a):
    """Spectral norm of a symmetric matrix: max_l |eigenvalue_l|."""
    decomp = sym_eigen(a)
    return float(np.max(np.abs(decomp.values)))


def _fix_vector_signs(vectors):
    # Flip each column so its largest-|entry| coordinate is positive;
    # np.argmax takes the first maximum, which settles ties by lowest index.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(a):
    """Eigendecomposition of a symmetric matrix, descending, sign-fixed.

    Backed by LAPACK's symmetric solver; a convergence failure surfaces as
    ``numpy.linalg.LinAlgError``. The output satisfies, up to roundoff,
    ``vectors @ diag(values) @ vectors.T == a`` and
    ``vectors.T @ vectors == eye``.
    """
    a = require_symmetric(a)
    values, vectors = np.linalg.eigh(a)
    order = np.arange(values.shape[0] - 1, -1, -1)
    return EigenDecomposition(values[order].copy(), _fix_vector_signs(vectors[:, order]))


def eigen_reconstruct(decomp):
    """Rebuild the (exactly symmetric) matrix from its decomposition."""
    a = (decomp.vectors * decomp.values) @ decomp.vectors.T
    return reflect_upper(a)


def banded_matrix(p, bandwidth, decay):
    """Symmetric banded matrix: unit diagonal, decay^|j-l| within the band.

    Entry (j, l) is ``decay ** |j - l|`` when ``0 < |j - l| <= bandwidth``
    and 0 outside the band. ``bandwidth=0`` gives the identity.
    """
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    if bandwidth < 0:
        raise ValueError(f"bandwidth must be >= 0, got {bandwidth}")
    offsets = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
    out = np.where(offsets <= bandwidth, float(decay) ** offsets, 0.0)
    np.fill_diagonal(out, 1.0)
    return reflect_upper(out)
