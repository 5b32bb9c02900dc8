"""Candidate matrices for the local inverse-regression methods.

Builds, at a query point w, the kernel-smoothed SIR / SAVE / DR matrix
M(w), couples it with the pooled local covariance into G(w) =
sigma_w^{-1} M(w), and extracts the estimated subspace from the SVD of G.

The ``*_from_moments`` functions accept arrays with arbitrary leading batch
shapes so bootstrap replicates can be processed in one vectorized call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, SlicePartition
from .errors import SingularCovariance
from .kernels import KernelSpec, conditional_moments, _sym

SIR = "sir"
SAVE = "save"
DR = "dr"
METHODS = (SIR, SAVE, DR)

RIDGE_REL = 1e-8


def sir_from_moments(probs, slice_means, mean) -> np.ndarray:
    """sum_l U_l U_l^T / p_l - m m^T, the between-slice covariance of the
    local conditional means."""
    M = np.einsum("...lp,...lq->...pq", slice_means / probs[..., None], slice_means)
    M = M - mean[..., :, None] * mean[..., None, :]
    return _sym(M)


def save_from_moments(probs, slice_means, slice_seconds, sigma) -> np.ndarray:
    """sum_l p_l (sigma - N_l/p_l + U_l U_l^T / p_l^2)^2."""
    V = slice_means / probs[..., None]
    R = slice_seconds / probs[..., None, None]
    E = _sym(sigma[..., None, :, :] - R + V[..., :, None] * V[..., None, :])
    M = np.einsum("...l,...lij,...ljk->...ik", probs, E, E)
    return _sym(M)


def dr_from_moments(probs, slice_means, slice_seconds, sigma) -> np.ndarray:
    """2 sum_l p_l (R_l - sigma)^2 + 2 A^2 + 2 tr(A) A with
    A = sum_l p_l V_l V_l^T."""
    V = slice_means / probs[..., None]
    R = slice_seconds / probs[..., None, None]
    D = _sym(R - sigma[..., None, :, :])
    first = 2.0 * np.einsum("...l,...lij,...ljk->...ik", probs, D, D)
    A = np.einsum("...l,...li,...lj->...ij", probs, V, V)
    scalar = np.einsum("...l,...li,...li->...", probs, V, V)
    M = first + 2.0 * A @ A + 2.0 * scalar[..., None, None] * A
    return _sym(M)


def m_sir(moments) -> np.ndarray:
    return sir_from_moments(moments.probs, moments.slice_means, moments.mean)


def m_save(moments) -> np.ndarray:
    return save_from_moments(
        moments.probs, moments.slice_means, moments.slice_seconds, moments.sigma
    )


def m_dr(moments) -> np.ndarray:
    return dr_from_moments(
        moments.probs, moments.slice_means, moments.slice_seconds, moments.sigma
    )


_FROM_MOMENTS = {SIR: m_sir, SAVE: m_save, DR: m_dr}


def ridged(sigma: np.ndarray, rel: float = RIDGE_REL) -> np.ndarray:
    """sigma + eps I with eps = rel * trace(sigma) / p; raises
    SingularCovariance when the result is still not positive definite."""
    p = sigma.shape[-1]
    eps = rel * np.trace(sigma, axis1=-2, axis2=-1) / p
    out = sigma + eps[..., None, None] * np.eye(p)
    if np.min(np.linalg.eigvalsh(out)) <= 0:
        raise SingularCovariance(
            "local covariance not positive definite after ridge regularization"
        )
    return out


@dataclass(frozen=True)
class CandidateMatrix:
    method: str
    w: np.ndarray
    M: np.ndarray       # (p, p) kernel matrix of the method
    sigma: np.ndarray   # (p, p) pooled local covariance (unridged)
    G: np.ndarray       # (p, p) ridged sigma^{-1} M


def candidate_matrix(
    data: Dataset, partition: SlicePartition, w, spec: KernelSpec, method: str
) -> CandidateMatrix:
    """Compose the NW moments at ``w`` into the method's G(w)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    mom = conditional_moments(data, partition, w, spec)
    M = _FROM_MOMENTS[method](mom)
    G = np.linalg.solve(ridged(mom.sigma), M)
    return CandidateMatrix(method=method, w=mom.w, M=M, sigma=mom.sigma, G=G)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude coordinate positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class SubspaceEstimate:
    """SVD summary of a candidate matrix: nonincreasing singular values,
    sign-fixed left singular vectors, and the chosen basis B = first d
    columns."""

    values: np.ndarray    # (p,) singular values, nonincreasing
    vectors: np.ndarray   # (p, p) left singular vectors
    d: int

    @property
    def basis(self) -> np.ndarray:
        return self.vectors[:, : self.d]


def extract_subspace(G, d: int) -> SubspaceEstimate:
    """Left singular basis of G truncated at dimension ``d``.

    ``G`` may be a CandidateMatrix or a plain square matrix.
    """
    mat = G.G if isinstance(G, CandidateMatrix) else np.asarray(G, dtype=float)
    p = mat.shape[0]
    if not 0 <= d <= p:
        raise ValueError(f"dimension {d} outside 0..{p}")
    u, s, _ = np.linalg.svd(mat)
    return SubspaceEstimate(values=s, vectors=fix_signs(u), d=int(d))
