"""Shared fixtures and independent brute-force oracles.

The classical_* functions recompute the slice-and-average SIR / SAVE / DR
matrices with plain loops over groups; they share no code with the package
and serve as the ground truth for the exact-match kernel regime.
"""

import numpy as np
import pytest

from dpsdr import Dataset, KernelSpec, make_slices

FLAT = KernelSpec(h=1e12)  # Gaussian weights all exactly equal on |u| <= O(1)


def exact_match_spec(w_values) -> KernelSpec:
    """Epanechnikov spec whose support is narrower than the smallest gap
    between distinct w values: weighting reduces to exact matching."""
    vals = np.unique(np.asarray(w_values, dtype=float).ravel())
    gap = np.min(np.diff(vals)) if vals.size > 1 else 1.0
    return KernelSpec(h=0.5 * gap, family="epanechnikov")


def classical_sir(x, labels):
    n, p = x.shape
    xbar = x.mean(axis=0)
    M = np.zeros((p, p))
    for l in np.unique(labels):
        sub = x[labels == l]
        diff = sub.mean(axis=0) - xbar
        M += (sub.shape[0] / n) * np.outer(diff, diff)
    return M


def classical_save(x, labels):
    n, p = x.shape
    xbar = x.mean(axis=0)
    sigma = x.T @ x / n - np.outer(xbar, xbar)
    M = np.zeros((p, p))
    for l in np.unique(labels):
        sub = x[labels == l]
        mu = sub.mean(axis=0)
        sigma_l = sub.T @ sub / sub.shape[0] - np.outer(mu, mu)
        E = sigma - sigma_l
        M += (sub.shape[0] / n) * (E @ E)
    return M


def classical_dr(x, labels):
    n, p = x.shape
    xbar = x.mean(axis=0)
    sigma = x.T @ x / n - np.outer(xbar, xbar)
    first = np.zeros((p, p))
    vvt = np.zeros((p, p))
    vtv = 0.0
    for l in np.unique(labels):
        sub = x[labels == l]
        pl = sub.shape[0] / n
        R = sub.T @ sub / sub.shape[0]
        V = sub.mean(axis=0)
        D = R - sigma
        first += 2.0 * pl * (D @ D)
        vvt += pl * np.outer(V, V)
        vtv += pl * float(V @ V)
    return first + 2.0 * vvt @ vvt + 2.0 * vtv * vvt


@pytest.fixture
def discrete_w_dataset():
    """50 rows with w in {0, 1}, three response slices, generic x."""
    rng = np.random.default_rng(42)
    n = 50
    w = np.repeat([0.0, 1.0], n // 2)[:, None]
    x = rng.standard_normal((n, 3))
    y = x[:, 0] + 0.5 * x[:, 1] ** 2 + w[:, 0] + 0.3 * rng.standard_normal(n)
    data = Dataset(y=y, x=x, w=w)
    partition = make_slices(data.y, 3)
    return data, partition


@pytest.fixture
def four_point_dataset():
    """The hand-checked example: W = (-1,-1,1,1), slices (1,1,2,2)."""
    y = np.array([0.0, 0.0, 10.0, 10.0])
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    w = np.array([-1.0, -1.0, 1.0, 1.0])
    data = Dataset(y=y, x=x, w=w)
    partition = make_slices(data.y, 2)
    return data, partition
