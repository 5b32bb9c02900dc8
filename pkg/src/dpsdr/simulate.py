"""Samplers for the six benchmark regression models.

Each model draws the shielded predictor W uniformly on (-1, 1) (two i.i.d.
coordinates for model VI), then X | W from a Gaussian whose mean level and
equicorrelation both move with W, then a scalar response through one or two
index directions that rotate with W.  ``true_basis`` returns those index
directions for scoring estimated subspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

MODELS = ("I", "II", "III", "IV", "V", "VI")


@dataclass(frozen=True)
class ModelSpec:
    """Benchmark model identifier plus sample size, predictor dimension and
    noise scale."""

    model: str
    n: int
    p: int
    noise: float = 0.2

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.n < 1:
            raise ValueError("n must be positive")
        min_p = 3 if self.model == "IV" else 2
        if self.p < min_p:
            raise ValueError(f"model {self.model} needs p >= {min_p}")
        if self.noise < 0:
            raise ValueError("noise scale must be nonnegative")

    @property
    def q(self) -> int:
        return 2 if self.model == "VI" else 1


def _level(model: str, W: np.ndarray) -> np.ndarray:
    """Scalar field driving both the mean (times 1_p) and the common
    correlation of X | W."""
    if model == "VI":
        return 0.5 * (np.sin(W[..., 0]) + np.cos(W[..., 1]))
    return 0.5 * np.sin(W[..., 0])


def _draw_predictors(spec: ModelSpec, W: np.ndarray, rng) -> np.ndarray:
    """Draw X | W row by row from N(m(W) 1_p, (1-rho) I + rho 1 1^T).

    Uses the analytic square root a I + b 1 1^T of the equicorrelation
    matrix.  For rho < -1/(p-1) the requested matrix is indefinite (its
    eigenvalue along the all-ones direction goes negative); the draw then
    uses the absolute value of that eigenvalue, as SVD-based multivariate
    normal samplers do, keeping the predictors full rank everywhere.
    """
    n, p = W.shape[0], spec.p
    rho = _level(spec.model, W)
    m = rho
    a = np.sqrt(1.0 - rho)
    c = np.sqrt(np.abs(1.0 + (p - 1) * rho))
    b = (c - a) / p
    z = rng.standard_normal((n, p))
    return m[:, None] + a[:, None] * z + b[:, None] * z.sum(axis=1, keepdims=True)


def sample_predictors(spec: ModelSpec, w, rng) -> np.ndarray:
    """One draw of X | W = w as a p-vector."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != spec.q:
        raise ValueError(f"model {spec.model} expects q = {spec.q} coordinates")
    return _draw_predictors(spec, w[None, :], rng)[0]


def noise_free_response(model: str, x: np.ndarray, w) -> np.ndarray:
    """The deterministic part of the response for rows of x at shielded
    value(s) w."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[0] == 1 and x.shape[0] > 1:
        w = np.broadcast_to(w, (x.shape[0], w.shape[1]))
    x1, x2 = x[:, 0], x[:, 1]
    if model == "VI":
        w1, w2 = w[:, 0], w[:, 1]
        num = x1 * (w2 + 10.0) + x2 * np.sin(w1) + 7.0
        den = x1 * np.exp(w1) + 10.0 * x2 * np.cos(w2)
        return num / den
    s = w[:, 0]
    if model == "I":
        return x1 * np.abs(s) + 3.0 * x2 * np.cos(s)
    if model == "II":
        return 2.0 * np.exp(x1 * np.exp(s) - x2 * np.cos(s) + 1.0) * np.sign(
            0.01 * x1 * np.cos(s) + 2.0 * (s + 1.0) ** 2 * x2
        )
    if model == "III":
        return (x1 * np.sin(s) + 5.0 * x2 * np.cos(s)) ** 2
    if model == "IV":
        x3 = x[:, 2]
        return np.exp((x1 * np.abs(s) + x2) ** 2) * np.log((x3 * np.cos(s)) ** 2)
    if model == "V":
        num = 10.0 * np.exp(x1 * np.sin(s) + 5.0 * x2 * s)
        den = x1 * np.exp(s) - x2 * np.cos(s)
        return num / den
    raise ValueError(f"unknown model {model!r}")


def gen_model(spec: ModelSpec, seed) -> Dataset:
    """Generate a full (y, x, w) sample; deterministic under the seed."""
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1.0, 1.0, size=(spec.n, spec.q))
    X = _draw_predictors(spec, W, rng)
    eps = rng.standard_normal(spec.n)
    y = noise_free_response(spec.model, X, W) + spec.noise * eps
    return Dataset(y=y, x=X, w=W)


@dataclass(frozen=True)
class TrueSubspace:
    w: np.ndarray
    d: int
    basis: np.ndarray  # (p, d), orthonormal


def _index_vectors(model: str, w: np.ndarray, p: int) -> list[np.ndarray]:
    def vec(*coords):
        v = np.zeros(p)
        v[: len(coords)] = coords
        return v

    s = w[0]
    if model == "I":
        return [vec(np.abs(s), 3.0 * np.cos(s))]
    if model == "II":
        return [vec(np.exp(s), -np.cos(s)), vec(0.01 * np.cos(s), 2.0 * (s + 1.0) ** 2)]
    if model == "III":
        return [vec(np.sin(s), 5.0 * np.cos(s))]
    if model == "IV":
        v2 = np.zeros(p)
        v2[2] = np.cos(s)
        return [vec(np.abs(s), 1.0), v2]
    if model == "V":
        return [vec(np.sin(s), 5.0 * s), vec(np.exp(s), -np.cos(s))]
    if model == "VI":
        w1, w2 = w
        return [vec(w2 + 10.0, np.sin(w1)), vec(np.exp(w1), 10.0 * np.cos(w2))]
    raise ValueError(f"unknown model {model!r}")


def true_basis(spec: ModelSpec, w) -> TrueSubspace:
    """Orthonormal basis of the true local subspace at w, dropping index
    directions that vanish (model V collapses to one direction at w = 0)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != spec.q:
        raise ValueError(f"model {spec.model} expects q = {spec.q} coordinates")
    if np.any(np.abs(w) > 1.0):
        raise ValueError(f"query {w} outside the model support [-1, 1]^q")
    vectors = [v for v in _index_vectors(spec.model, w, spec.p) if np.linalg.norm(v) > 0]
    B = np.column_stack(vectors)
    q, r = np.linalg.qr(B)
    keep = np.abs(np.diag(r)) > 1e-12
    return TrueSubspace(w=w, d=int(keep.sum()), basis=q[:, keep])


def true_dimension(spec: ModelSpec, w) -> int:
    return true_basis(spec, w).d
