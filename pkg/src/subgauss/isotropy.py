"""Covariance estimation, the volume-preserving isotropic map and orthogonal
complements."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DependentInput, InsufficientSamples, SingularCovariance

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class IsotropicTransform:
    """``T = (det S)^(1/2n) S^(-1/2)`` together with ``L_K = (det S)^(1/2n)``."""

    T: np.ndarray
    L_K: float
    det_check: float
    cov_residual: float
    sigma: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def apply(self, points) -> np.ndarray:
        """Map points of K to TK (T is symmetric, so row vectors use ``x @ T``)."""
        return np.asarray(points) @ self.T

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "T": self.T.tolist(),
            "L_K": self.L_K,
            "det_check": self.det_check,
            "cov_residual": self.cov_residual,
        }

    @classmethod
    def from_dict(cls, d) -> "IsotropicTransform":
        return cls(np.array(d["T"], dtype=float), float(d["L_K"]), float(d["det_check"]),
                   float(d["cov_residual"]))


@dataclass(frozen=True, eq=False)
class Subspace:
    basis: np.ndarray  # (n, d), orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _check_spd(sigma):
    w = np.linalg.eigvalsh(sigma)
    if w[-1] <= 0 or w[0] < SINGULAR_RTOL * w[-1]:
        raise SingularCovariance(f"eigenvalues span [{w[0]:.3g}, {w[-1]:.3g}]")
    return w


def estimate_covariance(batch, n_batches: int = 50, resamples: int = 200, level: float = 0.95,
                        seed: int = 0):
    """Sample covariance of a batch and a Frobenius-norm confidence radius.

    The radius is the ``level`` quantile of ``||S* - S||_F`` over ``resamples``
    batch-bootstrap replicates (the sample is split into ``n_batches`` fixed
    contiguous blocks, and blocks are resampled with replacement).
    """
    X = np.asarray(getattr(batch, "points", batch), dtype=float)
    N, n = X.shape
    if N < 2 or N < 10 * n * n:
        raise InsufficientSamples(f"need N >= max(2, 10 n^2) = {max(2, 10 * n * n)}, got {N}")
    mu = X.mean(axis=0)
    Xc = X - mu
    sigma = Xc.T @ Xc / (N - 1)
    sigma = 0.5 * (sigma + sigma.T)
    _check_spd(sigma)

    bounds = np.linspace(0, N, n_batches + 1).astype(np.int64)
    sizes = np.diff(bounds).astype(float)
    sums = np.array([X[a:b].sum(axis=0) for a, b in zip(bounds[:-1], bounds[1:])])
    outer = np.array([X[a:b].T @ X[a:b] for a, b in zip(bounds[:-1], bounds[1:])])
    g = rng.stream(seed, rng.BOOTSTRAP)
    dist = np.empty(resamples)
    for r in range(resamples):
        idx = g.integers(0, n_batches, n_batches)
        m = sizes[idx].sum()
        s1 = sums[idx].sum(axis=0)
        s2 = outer[idx].sum(axis=0)
        cov = (s2 - np.outer(s1, s1) / m) / (m - 1)
        dist[r] = np.linalg.norm(cov - sigma)
    return sigma, float(np.quantile(dist, level))


def isotropic_transform(sigma) -> IsotropicTransform:
    """Symmetric volume-preserving map taking covariance ``sigma`` to ``L_K^2 Id``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise SingularCovariance("covariance must be square")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12 * np.abs(sigma).max()):
        raise SingularCovariance("covariance must be symmetric")
    sigma = 0.5 * (sigma + sigma.T)
    n = sigma.shape[0]
    w, V = np.linalg.eigh(sigma)
    if w[-1] <= 0 or w[0] < SINGULAR_RTOL * w[-1]:
        raise SingularCovariance(f"eigenvalues span [{w[0]:.3g}, {w[-1]:.3g}]")
    log_det = float(np.log(w).sum())
    log_L = log_det / (2 * n)
    T = (V * np.exp(log_L - 0.5 * np.log(w))) @ V.T
    T = 0.5 * (T + T.T)
    L_K = math.exp(log_L)
    sign, logdet_T = np.linalg.slogdet(T)
    resid = float(np.linalg.norm(T @ sigma @ T - L_K**2 * np.eye(n)))
    return IsotropicTransform(T, L_K, float(sign * math.exp(logdet_T)), resid, sigma)


def isotropize(batch, **kw) -> tuple[IsotropicTransform, float]:
    """Estimate the covariance of ``batch`` and return ``(transform, frobenius CI)``."""
    sigma, ci = estimate_covariance(batch, **kw)
    return isotropic_transform(sigma), ci


def lk_cross_check(points_iso, n_dirs: int = 10, seed: int = 0) -> float:
    """``L_K`` as the mean L^2 norm of 10 random marginals of the transformed sample."""
    X = np.asarray(points_iso)
    z = rng.stream(seed, rng.DIRECTIONS).standard_normal((n_dirs, X.shape[1]))
    z /= np.linalg.norm(z, axis=1)[:, None]
    proj = X @ z.T
    return float(np.sqrt((proj**2).mean(axis=0)).mean())


def orth_complement(vectors, n: int | None = None, rank_tol: float = 1e-10) -> Subspace:
    """Orthonormal basis of ``{y : <y, v> = 0 for every v in vectors}``."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        if n is None:
            raise DependentInput("dimension unknown for an empty vector list")
        return Subspace(np.eye(n))
    k, dim = V.shape
    if n is not None and dim != n:
        raise DependentInput(f"vectors have dimension {dim}, expected {n}")
    U, s, Vt = np.linalg.svd(V, full_matrices=True)
    if k > dim or s[-1] <= rank_tol * s[0]:
        raise DependentInput("input vectors are linearly dependent")
    basis = Vt[k:].T.copy()
    # one re-orthogonalisation pass against the inputs keeps basis^T v ~ 1e-16
    Q, _ = np.linalg.qr(V.T)
    basis -= Q @ (Q.T @ basis)
    basis, _ = np.linalg.qr(basis)
    return Subspace(basis)
