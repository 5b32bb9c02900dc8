"""Bandwidth selection by per-slice leave-one-out cross-validation.

Each slice gets a discriminant-style CV score over a candidate grid: the
Mahalanobis distance of each member to its leave-one-out slice mean plus the
log-determinant of the leave-one-out covariance, both evaluated at the
member's own w.  The first-moment methods pool the covariance across slices
(LDA flavour); the second-moment methods use the slice's own covariance (QDA
flavour).  The per-slice minimizers are then ranked by the local Gaussian
mixture log-likelihood and the best one is returned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Dataset, SlicePartition
from .errors import AllCellsInvalid, SingularCovariance, SliceTooSmall
from .kernels import (
    GAUSSIAN,
    PROB_FLOOR,
    KernelSpec,
    _profile,
    slice_indicators,
    weight_floor,
)

log = logging.getLogger(__name__)

POOLED = "pooled"
PER_SLICE = "per_slice"
CV_RIDGE_REL = 1e-6
ROT_FACTOR = 1.06


def rot_bandwidth(data: Dataset) -> float:
    """Rule-of-thumb bandwidth 1.06 sd(W) n^(-1/5), sd averaged over the
    coordinates of W."""
    sd = float(data.w.std(axis=0, ddof=1).mean())
    return ROT_FACTOR * sd * data.n ** (-0.2)


def default_grid(data: Dataset, size: int = 12, lo: float = 0.5, hi: float = 4.0):
    """Geometric candidate grid spanning [lo, hi] times the rule of thumb."""
    h0 = rot_bandwidth(data)
    return np.geomspace(lo * h0, hi * h0, size)


def _cross_weights(w_rows: np.ndarray, queries: np.ndarray, h: float, family: str):
    """(n, m) kernel weights K_h(W_i - w_j) for query rows w_j."""
    t = (w_rows[:, None, :] - queries[None, :, :]) / h
    return np.prod(_profile(t, family) / h, axis=2)


def _ridge(C: np.ndarray) -> np.ndarray:
    p = C.shape[-1]
    eps = CV_RIDGE_REL * np.trace(C, axis1=-2, axis2=-1) / p
    return C + eps[..., None, None] * np.eye(p)


def cv_slice(
    data: Dataset,
    partition: SlicePartition,
    slice_index: int,
    h: float,
    mode: str,
    family: str = GAUSSIAN,
) -> float:
    """Leave-one-out CV score of bandwidth ``h`` for one slice.

    Raises SliceTooSmall when the slice has fewer than p + 2 members and
    SingularCovariance when some leave-one-out covariance is unusable at
    this bandwidth (the (slice, h) cell is then invalid).
    """
    if mode not in (POOLED, PER_SLICE):
        raise ValueError(f"unknown mode {mode!r}")
    labels = partition.assign(data.y)
    members = np.flatnonzero(labels == slice_index)
    n_l = members.size
    if n_l < data.p + 2:
        raise SliceTooSmall(
            f"slice {slice_index} has {n_l} members; need at least {data.p + 2}"
        )
    H = partition.n_slices
    S = slice_indicators(labels, H)
    K = _cross_weights(data.w, data.w[members], h, family)
    K[members, np.arange(n_l)] = 0.0  # leave the query's own row out

    mass = S.T @ K                                      # (H, n_l)
    own = mass[slice_index - 1]
    if np.any(own <= 0.0):
        raise SingularCovariance(
            f"leave-one-out slice mass vanished at bandwidth {h:.4g}"
        )
    s1 = np.einsum("nl,np,nm->lpm", S, data.x, K)       # (H, p, n_l)
    s2 = np.einsum("nl,np,nq,nm->lpqm", S, data.x, data.x, K)

    mu = (s1[slice_index - 1] / own).T                  # (n_l, p)
    if mode == PER_SLICE:
        second = s2[slice_index - 1].transpose(2, 0, 1) / own[:, None, None]
        C = second - mu[:, :, None] * mu[:, None, :]
    else:
        total = mass.sum(axis=0)
        safe = np.where(mass > 0.0, mass, 1.0)
        # (H, n_l, p) slice-conditional means, zeroed where a slice has no mass
        mu_all = s1.transpose(0, 2, 1) / safe[:, :, None]
        mu_all = np.where((mass > 0.0)[:, :, None], mu_all, 0.0)
        second = s2.transpose(0, 3, 1, 2) / safe[:, :, None, None]
        cov_all = second - mu_all[:, :, :, None] * mu_all[:, :, None, :]
        probs = mass / total[None, :]
        probs = np.where(mass > 0.0, probs, 0.0)
        C = np.einsum("lm,lmpq->mpq", probs, cov_all)

    C = _ridge(C)
    sign, logdet = np.linalg.slogdet(C)
    if np.any(sign <= 0) or not np.all(np.isfinite(logdet)):
        raise SingularCovariance(
            f"leave-one-out covariance singular at bandwidth {h:.4g}"
        )
    diff = data.x[members] - mu
    sol = np.linalg.solve(C, diff[:, :, None])[:, :, 0]
    quad = np.einsum("jp,jp->j", diff, sol)
    score = float(np.mean(quad + logdet))
    if not np.isfinite(score):
        raise SingularCovariance(
            f"non-finite CV score at bandwidth {h:.4g}"
        )
    return score


def mixture_loglik(
    data: Dataset, partition: SlicePartition, h: float, family: str = GAUSSIAN
) -> float:
    """Log-likelihood of the local Gaussian mixture across slices.

    Every observation contributes log sum_l p_l(W_i) N(x_i; m_l(W_i),
    Sigma_l(W_i)) with all moments NW-estimated at its own W_i using
    bandwidth ``h``.  Observations with a degenerate neighborhood are
    dropped (with a logged count).
    """
    n, p = data.n, data.p
    labels = partition.assign(data.y)
    H = partition.n_slices
    S = slice_indicators(labels, H)
    K = _cross_weights(data.w, data.w, h, family)

    mass = S.T @ K                                      # (H, n)
    total = mass.sum(axis=0)
    keep = total >= weight_floor(n, data.q, KernelSpec(h=h, family=family))
    s1 = np.einsum("nl,np,nm->lpm", S, data.x, K)
    s2 = np.einsum("nl,np,nq,nm->lpqm", S, data.x, data.x, K)

    safe = np.where(mass > 0.0, mass, 1.0)
    mu = s1.transpose(0, 2, 1) / safe[:, :, None]       # (H, n, p)
    second = s2.transpose(0, 3, 1, 2) / safe[:, :, None, None]
    C = _ridge(second - mu[:, :, :, None] * mu[:, :, None, :])
    sign, logdet = np.linalg.slogdet(C)
    probs = np.where(mass > 0.0, mass / total[None, :], 0.0)

    usable = (sign > 0) & (probs > PROB_FLOOR)
    diff = data.x[None, :, :] - mu                      # (H, n, p)
    sol = np.linalg.solve(
        np.where(usable[:, :, None, None], C, np.eye(p)), diff[:, :, :, None]
    )[:, :, :, 0]
    quad = np.einsum("lnp,lnp->ln", diff, sol)
    log_density = -0.5 * (quad + logdet + p * np.log(2.0 * np.pi))
    log_terms = np.where(
        usable, np.log(np.where(probs > 0, probs, 1.0)) + log_density, -np.inf
    )
    point_ll = logsumexp(log_terms, axis=0)
    keep &= np.isfinite(point_ll)
    dropped = int(n - keep.sum())
    if dropped:
        log.warning("mixture log-likelihood dropped %d of %d points", dropped, n)
    if not np.any(keep):
        raise AllCellsInvalid(f"no usable observation at bandwidth {h:.4g}")
    return float(point_ll[keep].sum())


@dataclass(frozen=True)
class BandwidthSearch:
    """CV table over (slice, bandwidth) cells plus the selected bandwidth."""

    grid: np.ndarray
    cv_scores: np.ndarray       # (H, |grid|); NaN marks invalid cells
    h_slice_star: np.ndarray    # (H,) per-slice minimizers (NaN if none)
    candidates: np.ndarray
    logliks: np.ndarray
    h_opt: float


def select_bandwidth(
    data: Dataset,
    partition: SlicePartition,
    method: str,
    grid=None,
    family: str = GAUSSIAN,
) -> BandwidthSearch:
    """Pick the bandwidth for a method from per-slice CV minimizers.

    The pooled-covariance score is used for "sir", the per-slice score for
    "save" and "dr"; the winner among the per-slice minimizers is the one
    maximizing the mixture log-likelihood (ties to the smaller value).
    """
    mode = POOLED if method == "sir" else PER_SLICE
    grid = default_grid(data) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing and positive")
    H = partition.n_slices
    scores = np.full((H, grid.size), np.nan)
    for l in range(1, H + 1):
        for gi, h in enumerate(grid):
            try:
                scores[l - 1, gi] = cv_slice(data, partition, l, h, mode, family)
            except (SliceTooSmall, SingularCovariance):
                continue
    if np.all(np.isnan(scores)):
        raise AllCellsInvalid("no (slice, bandwidth) cell produced a valid CV score")
    h_star = np.full(H, np.nan)
    for l in range(H):
        if np.any(np.isfinite(scores[l])):
            h_star[l] = grid[np.nanargmin(scores[l])]
    candidates = np.unique(h_star[np.isfinite(h_star)])
    logliks = np.full(candidates.size, -np.inf)
    for i, h in enumerate(candidates):
        try:
            logliks[i] = mixture_loglik(data, partition, float(h), family)
        except AllCellsInvalid:
            continue
    if not np.any(np.isfinite(logliks)):
        raise AllCellsInvalid("mixture log-likelihood unusable at every candidate")
    h_opt = float(candidates[int(np.argmax(logliks))])
    return BandwidthSearch(
        grid=grid,
        cv_scores=scores,
        h_slice_star=h_star,
        candidates=candidates,
        logliks=logliks,
        h_opt=h_opt,
    )
