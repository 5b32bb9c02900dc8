"""Subspace and dependence metrics used by the benchmarks and data analyses."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist, squareform


def _orthonormal_basis(B: np.ndarray, name: str) -> np.ndarray:
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.ndim != 2:
        raise ValueError(f"{name} must be a p x d matrix")
    q, r = np.linalg.qr(B)
    d = B.shape[1]
    if np.any(np.abs(np.diag(r)) < 1e-10 * max(1.0, np.abs(r).max())):
        raise ValueError(f"{name} is rank deficient")
    return q[:, :d]


def trace_correlation(B1: np.ndarray, B2: np.ndarray) -> float:
    """Trace correlation Tr(P1 P2) / d between the spans of two p x d bases.

    Equals 1 on identical spans, 0 on orthogonal spans, and is invariant to
    the basis representation.  Both bases must have the same full column
    rank d >= 1.
    """
    B1 = np.atleast_2d(np.asarray(B1, dtype=float))
    B2 = np.atleast_2d(np.asarray(B2, dtype=float))
    if B1.shape[0] != B2.shape[0]:
        raise ValueError(f"ambient dimensions differ: {B1.shape[0]} vs {B2.shape[0]}")
    if B1.shape[1] != B2.shape[1]:
        raise ValueError(f"subspace dimensions differ: {B1.shape[1]} vs {B2.shape[1]}")
    d = B1.shape[1]
    if d < 1:
        raise ValueError("need d >= 1")
    q1 = _orthonormal_basis(B1, "B1")
    q2 = _orthonormal_basis(B2, "B2")
    # Tr(P1 P2) = ||Q1^T Q2||_F^2
    return float(np.sum((q1.T @ q2) ** 2) / d)


def _double_centered_distances(u: np.ndarray) -> np.ndarray:
    d = squareform(pdist(u))
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def distance_correlation(u, v) -> float:
    """Empirical distance correlation (biased V-statistic form).

    Accepts (n,) or (n, k) samples; returns 0 when either marginal distance
    variance vanishes (e.g. a constant sample).  Requires n >= 4.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if v.ndim == 1:
        v = v[:, None]
    n = u.shape[0]
    if v.shape[0] != n:
        raise ValueError(f"sample sizes differ: {n} vs {v.shape[0]}")
    if n < 4:
        raise ValueError("need at least 4 samples")
    A = _double_centered_distances(u)
    B = _double_centered_distances(v)
    dcov2 = max((A * B).mean(), 0.0)
    dvar_u = (A * A).mean()
    dvar_v = (B * B).mean()
    if dvar_u <= 0.0 or dvar_v <= 0.0:
        return 0.0
    return float(min(np.sqrt(dcov2 / np.sqrt(dvar_u * dvar_v)), 1.0))
