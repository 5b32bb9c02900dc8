"""Kernel functions and Nadaraya-Watson conditional-moment estimators.

Everything here is a pure function of (dataset, query point, kernel spec),
so grids of query points and Monte Carlo replicates can be evaluated
concurrently.  All slice-conditional moments share one pass over the data
(:func:`conditional_moments`); the ``nw_*`` functions expose the individual
estimators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, SlicePartition
from .errors import DegenerateNeighborhood, EmptySliceAtQuery

GAUSSIAN = "gaussian"
EPANECHNIKOV = "epanechnikov"

# Total kernel mass below WEIGHT_FLOOR_FRAC * n * (peak weight) means the
# query is outside the data support; slice probabilities below PROB_FLOOR
# make the slice-conditional means unstable.  The peak-weight scaling keeps
# the floor meaningful for any bandwidth (weights scale as h^-q).
WEIGHT_FLOOR_FRAC = 1e-8
PROB_FLOOR = 1e-4


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus the single bandwidth shared by every coordinate
    of w and every matrix entry.  ``h_slices`` carries the per-slice
    bandwidths found during cross-validation, for bookkeeping only."""

    h: float
    family: str = GAUSSIAN
    h_slices: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in (GAUSSIAN, EPANECHNIKOV):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        if self.h_slices is not None:
            hs = np.asarray(self.h_slices, dtype=float)
            if np.any(~np.isfinite(hs)) or np.any(hs <= 0):
                raise ValueError("per-slice bandwidths must be positive")
            object.__setattr__(self, "h_slices", hs)


def _profile(t: np.ndarray, family: str) -> np.ndarray:
    if family == GAUSSIAN:
        return np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
    return np.where(np.abs(t) <= 1.0, 0.75 * (1.0 - t * t), 0.0)


def kernel_weight(u, spec: KernelSpec) -> float:
    """Product kernel at offset u: prod_j K(u_j / h) / h."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return float(np.prod(_profile(u / spec.h, spec.family) / spec.h))


def kernel_weights(w_rows: np.ndarray, w: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Kernel weights K_h(W_i - w) for every row of ``w_rows``."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != w_rows.shape[1]:
        raise ValueError(f"query has {w.size} coordinates, data has {w_rows.shape[1]}")
    t = (w_rows - w[None, :]) / spec.h
    return np.prod(_profile(t, spec.family) / spec.h, axis=1)


def slice_indicators(labels: np.ndarray, n_slices: int) -> np.ndarray:
    """(n, H) one-hot matrix of slice memberships from 1-based labels."""
    n = labels.size
    S = np.zeros((n, n_slices))
    S[np.arange(n), labels - 1] = 1.0
    return S


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def weighted_slice_sums(x, indicators, weights):
    """Raw weighted sums feeding every conditional-moment estimator.

    Returns ``(s0, s0_l, s1_l, s2_l)``: total weight, per-slice weight,
    per-slice weighted sums of x and of x x^T.  ``weights`` may carry any
    leading batch shape (..., n); sums broadcast accordingly.
    """
    weights = np.asarray(weights, dtype=float)
    a0 = indicators * weights[..., :, None]               # (..., n, H)
    s0 = weights.sum(axis=-1)
    s0_l = a0.sum(axis=-2)
    s1_l = np.einsum("...nl,np->...lp", a0, x)
    s2_l = np.einsum("...nl,np,nq->...lpq", a0, x, x)
    return s0, s0_l, s1_l, s2_l


@dataclass(frozen=True)
class ConditionalMoments:
    """All kernel-smoothed conditional moments at one query point.

    ``probs`` is the H-simplex of local slice probabilities; ``slice_means``
    (U) and ``slice_seconds`` (N) are normalized by the *total* kernel mass,
    while ``cond_means`` (V = U / p) and ``cond_seconds`` (R = N / p) are the
    slice-conditional versions.  ``sigma`` is the local covariance of X
    (second moment minus squared mean), the matrix the candidate methods
    standardize by; ``sigma_pooled`` is the within-slice pooled alternative
    sum_l p_l sigma_l used by the discriminant-style bandwidth criteria.
    """

    w: np.ndarray
    mean: np.ndarray                 # (p,)
    probs: np.ndarray                # (H,)
    slice_means: np.ndarray          # (H, p)   U_l
    slice_seconds: np.ndarray        # (H, p, p) N_l
    sigma: np.ndarray                # (p, p)
    sigma_pooled: np.ndarray         # (p, p)
    sigma_slices: np.ndarray         # (H, p, p)
    mean_slices: np.ndarray          # (H, p)   m_l = V_l
    weight_sum: float

    @property
    def cond_means(self) -> np.ndarray:
        return self.slice_means / self.probs[:, None]

    @property
    def cond_seconds(self) -> np.ndarray:
        return self.slice_seconds / self.probs[:, None, None]


def weight_floor(n: int, q: int, spec: KernelSpec) -> float:
    """Degeneracy threshold: a 1e-8 fraction of n points at peak weight."""
    peak = (0.75 if spec.family == EPANECHNIKOV else 1.0 / np.sqrt(2.0 * np.pi))
    return WEIGHT_FLOOR_FRAC * n * (peak / spec.h) ** q


def _total_weight_check(s0: float, n: int, q: int, spec: KernelSpec):
    if not (s0 >= weight_floor(n, q, spec)):
        raise DegenerateNeighborhood(
            f"total kernel mass {s0:.3e} below floor "
            f"{weight_floor(n, q, spec):.3e}; query point outside data "
            "support for this bandwidth"
        )


def conditional_moments(
    data: Dataset, partition: SlicePartition, w, spec: KernelSpec
) -> ConditionalMoments:
    """Single-pass NW estimate of every slice-conditional moment at ``w``."""
    k = kernel_weights(data.w, w, spec)
    H = partition.n_slices
    S = slice_indicators(partition.assign(data.y), H)
    s0, s0_l, s1_l, s2_l = weighted_slice_sums(data.x, S, k)
    _total_weight_check(s0, data.n, data.q, spec)
    probs = s0_l / s0
    low = probs < PROB_FLOOR
    if np.any(low):
        bad = np.flatnonzero(low) + 1
        raise EmptySliceAtQuery(
            f"slices {bad.tolist()} have kernel mass below {PROB_FLOOR} at this query"
        )
    U = s1_l / s0
    N = _sym(s2_l / s0)
    V = s1_l / s0_l[:, None]
    R = s2_l / s0_l[:, None, None]
    mean = U.sum(axis=0)
    sigma = _sym(N.sum(axis=0) - np.outer(mean, mean))
    sigma_slices = _sym(R - V[:, :, None] * V[:, None, :])
    sigma_pooled = _sym(np.einsum("l,lpq->pq", probs, sigma_slices))
    return ConditionalMoments(
        w=np.atleast_1d(np.asarray(w, dtype=float)),
        mean=mean,
        probs=probs,
        slice_means=U,
        slice_seconds=N,
        sigma=sigma,
        sigma_pooled=sigma_pooled,
        sigma_slices=sigma_slices,
        mean_slices=V,
        weight_sum=float(s0),
    )


def nw_mean(data: Dataset, w, spec: KernelSpec) -> np.ndarray:
    """NW regression estimate of E(X | W = w)."""
    k = kernel_weights(data.w, w, spec)
    s0 = k.sum()
    _total_weight_check(s0, data.n, data.q, spec)
    return k @ data.x / s0


def nw_slice_probs(
    data: Dataset, partition: SlicePartition, w, spec: KernelSpec
) -> np.ndarray:
    """NW estimate of the local slice probabilities p_{l,w}."""
    return conditional_moments(data, partition, w, spec).probs


def nw_slice_means(data: Dataset, partition: SlicePartition, w, spec: KernelSpec):
    """NW slice-indicator means: returns (U_l, V_l) with V_l = U_l / p_l."""
    m = conditional_moments(data, partition, w, spec)
    return m.slice_means, m.cond_means


def nw_second_moments(
    data: Dataset, partition: SlicePartition, w, spec: KernelSpec
) -> np.ndarray:
    """NW slice-indicator second moments N_l = E-hat(X X^T 1(slice=l) | w)."""
    return conditional_moments(data, partition, w, spec).slice_seconds


def nw_cov(data: Dataset, partition: SlicePartition, w, spec: KernelSpec):
    """Pooled local covariance and per-slice (mean, covariance) estimates.

    Returns ``(sigma_pooled, sigma_slices, mean_slices)`` where the pooled
    matrix is the p_l-weighted sum of the per-slice covariances, the form
    the discriminant-style bandwidth criteria are built on.
    """
    m = conditional_moments(data, partition, w, spec)
    return m.sigma_pooled, m.sigma_slices, m.mean_slices
