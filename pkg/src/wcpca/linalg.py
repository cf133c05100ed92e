"""Dense symmetric and orthogonal linear-algebra kernels.

Everything downstream (losses, solvers, completion, data generation) is built
on the handful of primitives in this module: eigendecomposition of symmetric
matrices, projection onto the set of matrices with orthonormal columns, a
span-level distance, and two random-frame samplers. All arithmetic is double
precision; worst-case objectives amplify small eigen-gaps, so no
single-precision path exists.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, InvalidRank, RankDeficient
from .rng import as_rng

__all__ = [
    "Spectrum",
    "as_covariance",
    "sym_eigen",
    "top_k_frame",
    "stiefel_project",
    "projection_distance",
    "haar_frame",
    "orthocomplement_frame",
]

# Relative asymmetry beyond this is rejected rather than silently averaged.
_ASYMMETRY_RTOL = 1e-6
# Singular values at or below s_max * this ratio count as numerically zero.
_RANK_RTOL = 1e-12


class Spectrum(NamedTuple):
    """Eigendecomposition with eigenvalues sorted in descending order.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``; the matrix is
    orthogonal, so ``Q @ diag(w) @ Q.T`` reconstructs the input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_covariance(a) -> np.ndarray:
    """Validate a square matrix and return its symmetrized copy (A + A.T)/2.

    Parameters
    ----------
    a : array_like
        Square real matrix.

    Returns
    -------
    numpy.ndarray
        Symmetric float64 copy of ``a``.

    Raises
    ------
    InvalidInput
        If ``a`` is not square, has non-finite entries, or its asymmetry
        exceeds 1e-6 relative to the largest entry magnitude.
    """
    m = np.array(a, dtype=np.float64, copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"covariance must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("covariance has non-finite entries")
    scale = float(np.abs(m).max()) if m.size else 0.0
    if scale > 0.0:
        asym = float(np.abs(m - m.T).max())
        if asym > _ASYMMETRY_RTOL * scale:
            raise InvalidInput(
                f"matrix asymmetry {asym:.3e} exceeds {_ASYMMETRY_RTOL:g} relative tolerance"
            )
    return (m + m.T) / 2.0


def sym_eigen(sigma) -> Spectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    sigma : array_like
        Symmetric p x p matrix. Sub-tolerance asymmetry is averaged away.

    Returns
    -------
    Spectrum
        Descending eigenvalues and the matching orthogonal eigenvector matrix.

    Raises
    ------
    InvalidInput
        On non-finite entries or a non-square input.
    """
    s = np.asarray(sigma, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidInput("matrix has non-finite entries")
    w, q = np.linalg.eigh((s + s.T) / 2.0)
    # eigh returns ascending order; reverse for the descending convention.
    return Spectrum(w[::-1].copy(), q[:, ::-1].copy())


def top_k_frame(sigma, k: int) -> np.ndarray:
    """Return the p x k frame of eigenvectors for the k largest eigenvalues.

    Ties produce an arbitrary but deterministic basis of the tied eigenspace,
    so callers should assert spans or objective values, never specific
    vectors.

    Raises
    ------
    InvalidRank
        If ``k`` is outside ``1..p``.
    """
    spec = sym_eigen(sigma)
    p = spec.eigenvalues.shape[0]
    if not 1 <= k <= p:
        raise InvalidRank(f"k must be in 1..{p}, got {k}")
    return spec.eigenvectors[:, :k].copy()


def stiefel_project(m) -> np.ndarray:
    """Project a full-column-rank p x k matrix onto the orthonormal frames.

    Returns the polar factor U @ W.T of the thin SVD ``m = U S W.T``, the
    closest orthonormal frame in Frobenius norm. Matrices that already have
    orthonormal columns map to themselves within 1e-10.

    Raises
    ------
    InvalidInput
        If ``m`` is not 2-D or has more columns than rows.
    RankDeficient
        If the smallest singular value is at or below 1e-12 times the
        largest (no well-defined polar factor).
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"expected a 2-D array, got shape {a.shape}")
    if a.shape[1] > a.shape[0]:
        raise InvalidInput(f"cannot orthonormalize {a.shape[1]} columns in {a.shape[0]} rows")
    u, s, wt = np.linalg.svd(a, full_matrices=False)
    if s[0] <= 0.0 or s[-1] <= s[0] * _RANK_RTOL:
        raise RankDeficient("matrix is numerically rank-deficient")
    return u @ wt


def projection_distance(v, w) -> float:
    """Span distance ``||V V.T - W W.T||_F`` between two frames.

    Symmetric, zero iff the spans coincide, and invariant to
    right-multiplication of either frame by a k x k orthogonal matrix.
    One-dimensional inputs are treated as single-column frames.

    Raises
    ------
    InvalidInput
        If the frames differ in shape.
    """
    a = np.asarray(v, dtype=np.float64)
    b = np.asarray(w, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise InvalidInput(f"frame shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a @ a.T - b @ b.T, "fro"))


def haar_frame(p: int, k: int, seed) -> np.ndarray:
    """Draw a p x k frame whose span is Haar-distributed.

    QR-decomposes a p x p standard Gaussian matrix and normalizes the signs of
    R's diagonal to positive, which makes the Q factor exactly Haar; the first
    k columns are returned. Deterministic given ``seed`` (an int or a
    ``numpy.random.Generator``).

    Raises
    ------
    InvalidRank
        If ``k`` is outside ``1..p``.
    """
    if not 1 <= k <= p:
        raise InvalidRank(f"k must be in 1..{p}, got {k}")
    rng = as_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return (q * d)[:, :k]


def orthocomplement_frame(v, k2: int, seed, max_retries: int = 5) -> np.ndarray:
    """Draw a random p x k2 frame orthogonal to the span of ``v``.

    A Gaussian p x k2 matrix is projected by ``I - v v.T`` and orthonormalized
    by QR; a second projection-and-QR pass tightens the orthogonality to
    ``v`` against rounding. A rank-deficient projected draw (probability
    zero) is retried with a fresh Gaussian matrix.

    Raises
    ------
    InvalidRank
        If ``k + k2 > p`` or ``k2 < 1``.
    RankDeficient
        If ``max_retries`` draws in a row are rank-deficient.
    """
    base = np.asarray(v, dtype=np.float64)
    if base.ndim == 1:
        base = base[:, None]
    p, k = base.shape
    if k2 < 1 or k + k2 > p:
        raise InvalidRank(f"cannot fit {k2} complement columns: k={k}, p={p}")
    rng = as_rng(seed)
    for _ in range(max_retries):
        g = rng.standard_normal((p, k2))
        q, r = np.linalg.qr(g - base @ (base.T @ g))
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-10 * diag.max():
            continue
        q, r2 = np.linalg.qr(q - base @ (base.T @ q))
        d = np.sign(np.diag(r2))
        d[d == 0] = 1.0
        return q * d
    raise RankDeficient(f"projected Gaussian draw rank-deficient {max_retries} times in a row")
