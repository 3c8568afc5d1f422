"""Marginal L^p norms, psi_2 norms, tails and negative-moment functionals.

Two evaluation paths:

* Monte Carlo over a sample, with all power means accumulated in log space
  and a batch percentile bootstrap for the confidence interval;
* quadrature of a closed-form :class:`~subgauss.bodies.MarginalDensity`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import kernels, rng
from .bodies import MarginalDensity
from .errors import EmptyProfile, PTooLargeForBudget, QOutOfRange

N_BATCHES = 100
RESAMPLES = 200
LEVEL = 0.95


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_low: float
    ci_high: float
    stderr: float
    method: str  # "monte_carlo" | "quadrature"

    def __iter__(self):
        # unpacks as (value, (ci_low, ci_high))
        yield self.value
        yield (self.ci_low, self.ci_high)


def p_max(N: int) -> float:
    """Largest order accepted for an empirical L^p norm from N samples."""
    return math.log(N) / math.log(3.0)


# --------------------------------------------------------------------------
# log-space power means with batch bootstrap


def log_power_means(logv, exponents, seed: int = 0, n_batches: int = N_BATCHES,
                    resamples: int = RESAMPLES):
    """``log mean(v^p)`` for each p, plus a ``(resamples, len(p))`` bootstrap matrix.

    ``logv`` holds ``log v`` for nonnegative values v (``-inf`` allowed).
    """
    logv = np.asarray(logv, dtype=float)
    exps = np.atleast_1d(np.asarray(exponents, dtype=float))
    N = logv.size
    bounds = kernels.batch_bounds(N, n_batches)
    sizes = np.diff(bounds).astype(float)
    part = kernels.batch_logsumexp(logv, exps, bounds)  # (len(p), nb)
    total = special.logsumexp(part, axis=1) - math.log(N)
    nb = part.shape[1]
    boot = np.empty((resamples, exps.size))
    if resamples:
        idx = rng.stream(seed, rng.BOOTSTRAP).integers(0, nb, size=(resamples, nb))
        logsz = np.log(sizes[idx].sum(axis=1))
        for j in range(exps.size):
            boot[:, j] = special.logsumexp(part[j][idx], axis=1) - logsz
    return total, boot


def _estimates_from_logs(total, boot, exps, level=LEVEL, method="monte_carlo"):
    out = []
    a = (1 - level) / 2
    for j, p in enumerate(exps):
        v = math.exp(total[j] / p)
        b = np.exp(boot[:, j] / p)
        lo, hi = np.quantile(b, [a, 1 - a])
        lo, hi = float(min(lo, v)), float(max(hi, v))
        out.append(Estimate(v, lo, hi, float(b.std(ddof=1)), method))
    return out


def _log_abs(z):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


def _points(src):
    return np.asarray(getattr(src, "points", src), dtype=float)


def mc_lp_norms(values, ps, seed=0, check_budget=True):
    """Empirical ``(E|Z|^p)^(1/p)`` of a 1-d sample for each p."""
    values = np.asarray(values, dtype=float)
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    if check_budget and np.any(ps > p_max(values.size) + 1e-12):
        raise PTooLargeForBudget(
            f"p={ps.max():g} exceeds p_max(N={values.size})={p_max(values.size):.3g}"
        )
    total, boot = log_power_means(_log_abs(values), ps, seed)
    return _estimates_from_logs(total, boot, ps)


# --------------------------------------------------------------------------
# quadrature


def _quad_log_integral(md: MarginalDensity, logf: Callable, lo: float, hi: float):
    """``log int_lo^hi exp(logf(t)) dt`` and a relative error estimate."""
    grid = np.linspace(lo, hi, 4001)[1:-1]
    vals = logf(grid)
    k = int(np.nanargmax(vals))
    M = float(vals[k])
    peak = float(grid[k])
    pts = sorted({x for x in (*md.breakpoints, 0.0, peak) if lo < x < hi})

    def g(t):
        return math.exp(float(logf(np.array([t]))[0]) - M)

    total, err = 0.0, 0.0
    edges = [lo, *pts, hi]
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-13, limit=500)
        total += v
        err += e
    return M + math.log(total), err / total


def quad_abs_moment_log(md: MarginalDensity, p: float):
    """``log E|X|^p`` for X with density ``md`` and the relative quadrature error."""

    def logf(t):
        with np.errstate(divide="ignore"):
            return p * np.log(np.abs(t)) + md.logpdf(t)

    return _quad_log_integral(md, logf, md.lower, md.upper)


def quad_lp_norm(md: MarginalDensity, p: float) -> Estimate:
    log_m, rel = quad_abs_moment_log(md, p)
    v = math.exp(log_m / p)
    d = v * rel / p
    return Estimate(v, v - d, v + d, d, "quadrature")


def quad_mass(md: MarginalDensity) -> float:
    log_m, _ = _quad_log_integral(md, md.logpdf, md.lower, md.upper)
    return math.exp(log_m)


# --------------------------------------------------------------------------
# marginal L^p norms and profiles


def _projection(source, theta):
    theta = np.asarray(theta, dtype=float)
    return _points(source) @ theta


def marginal_lp(source, theta, p: float, seed: int = 0) -> Estimate:
    """``(E|<X, theta>|^p)^(1/p)``.

    ``source`` is a MarginalDensity (quadrature; ``theta`` is then ignored),
    a SampleBatch/array of points, or a 1-d array of already projected values
    (pass ``theta=None``).
    """
    if p < 1:
        raise PTooLargeForBudget(f"order must be >= 1, got {p}")
    if isinstance(source, MarginalDensity):
        return quad_lp_norm(source, p)
    z = np.asarray(source, dtype=float) if theta is None else _projection(source, theta)
    return mc_lp_norms(z, [p], seed)[0]


@dataclass(frozen=True)
class ProfileEntry:
    p: float
    value: float
    ci_low: float
    ci_high: float
    method: str


@dataclass
class MomentProfile:
    theta: np.ndarray
    entries: list
    n: int
    L_K: float | None = None
    truncated: bool = False

    @property
    def ps(self):
        return np.array([e.p for e in self.entries])

    @property
    def values(self):
        return np.array([e.value for e in self.entries])

    def value(self, p):
        for e in self.entries:
            if abs(e.p - p) < 1e-12:
                return e.value
        raise KeyError(p)

    def csv_rows(self, theta_id=0):
        return [(theta_id, e.p, e.value, e.ci_low, e.ci_high, e.method) for e in self.entries]

    def to_csv(self, theta_id=0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta_id", "p", "value", "ci_low", "ci_high", "method"])
        for row in self.csv_rows(theta_id):
            w.writerow([row[0], repr(float(row[1])), repr(row[2]), repr(row[3]), repr(row[4]), row[5]])
        return buf.getvalue()


def moment_profile(source, theta, ps, L_K=None, n=None, seed: int = 0) -> MomentProfile:
    """L^p norms over a grid of orders. On the Monte Carlo path orders above
    ``p_max(N)`` are dropped and the profile is marked truncated."""
    ps = sorted(float(p) for p in ps)
    theta = np.asarray(theta, dtype=float)
    if isinstance(source, MarginalDensity):
        ests = [quad_lp_norm(source, p) for p in ps]
        truncated = False
    else:
        z = _projection(source, theta)
        cap = p_max(z.size)
        kept = [p for p in ps if p <= cap + 1e-12]
        truncated = len(kept) < len(ps)
        ps = kept
        ests = mc_lp_norms(z, ps, seed) if ps else []
    entries = [ProfileEntry(p, e.value, e.ci_low, e.ci_high, e.method) for p, e in zip(ps, ests)]
    return MomentProfile(theta, entries, n if n is not None else theta.size, L_K, truncated)


def psi2_norm(profile: MomentProfile):
    """``(max_p value(p)/sqrt(p), maximising p)`` over the profile grid."""
    if not profile.entries:
        raise EmptyProfile("profile has no entries")
    r = profile.values / np.sqrt(profile.ps)
    k = int(np.argmax(r))
    return float(r[k]), float(profile.ps[k])


# --------------------------------------------------------------------------
# tails


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    if n == 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    c = (ph + z * z / (2 * n)) / den
    h = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, c - h), min(1.0, c + h)


def tail_prob(source, theta, t: float) -> Estimate:
    """``P(|<X, theta>| >= t * E|<X, theta>|)``."""
    if isinstance(source, MarginalDensity):
        m = quad_lp_norm(source, 1.0).value
        thr = t * m
        mass = 0.0
        for a, b in ((source.lower, -thr), (thr, source.upper)):
            if b > a:
                sub = [x for x in source.breakpoints if a < x < b]
                v, _ = integrate.quad(lambda u: float(source.pdf(np.array([u]))[0]), a, b,
                                      points=sub or None, epsabs=1e-13, epsrel=1e-12, limit=500)
                mass += v
        return Estimate(mass, mass, mass, 0.0, "quadrature")
    z = np.abs(np.asarray(source, dtype=float) if theta is None else _projection(source, theta))
    k = int(np.count_nonzero(z >= t * z.mean()))
    lo, hi = wilson_interval(k, z.size)
    ph = k / z.size
    return Estimate(ph, lo, hi, math.sqrt(ph * (1 - ph) / z.size), "monte_carlo")


# --------------------------------------------------------------------------
# negative moments


@dataclass(frozen=True)
class NegMomentEstimate:
    functional: str  # "W_minus_q" | "I_q" | "G_minus_q"
    q: float
    descriptor: str
    value: float
    ci_low: float
    ci_high: float
    stderr: float

    @property
    def ci(self):
        return self.ci_low, self.ci_high


def _check_q(q, n):
    if not (0 < q <= n / 2):
        raise QOutOfRange(f"q={q} outside (0, n/2] for n={n}")


def _chunked_norms(polar_norm, draw, n, N, seed, purpose, workers):
    def work(k, size):
        y = draw(rng.stream(seed, purpose, k), size)
        return np.log(np.asarray(polar_norm(y), dtype=float))

    return np.concatenate(rng.map_chunks(work, rng.chunk_sizes(N), workers))


def _neg_moment(logv, q, seed):
    total, boot = log_power_means(logv, [-q], seed)
    v = math.exp(-total[0] / q)
    b = np.exp(-boot[:, 0] / q)
    lo, hi = np.quantile(b, [(1 - LEVEL) / 2, (1 + LEVEL) / 2])
    return v, float(min(lo, v)), float(max(hi, v)), float(b.std(ddof=1))


def _sphere(g, size, n):
    z = g.standard_normal((size, n))
    return z / np.linalg.norm(z, axis=1)[:, None]


def neg_moment_sphere(polar_norm, q: float, n: int, N: int = 100_000, seed: int = 0,
                      descriptor: str = "", workers=None) -> NegMomentEstimate:
    """``W_{-q}(K) = (E_u ||u||_{K°}^{-q})^{-1/q}``, u uniform on the sphere.

    ``polar_norm`` maps an ``(m, n)`` array of directions to their K°-norms.
    """
    _check_q(q, n)
    logv = _chunked_norms(polar_norm, lambda g, s: _sphere(g, s, n), n, N, seed,
                          rng.DIRECTIONS, workers)
    return NegMomentEstimate("W_minus_q", q, descriptor, *_neg_moment(logv, q, seed))


def neg_moment_gaussian(polar_norm, q: float, n: int, N: int = 100_000, seed: int = 0,
                        descriptor: str = "", workers=None) -> NegMomentEstimate:
    """``G_{-q}(K) = (E ||Y||_{K°}^{-q})^{-1/q}`` for Y standard Gaussian."""
    _check_q(q, n)
    logv = _chunked_norms(polar_norm, lambda g, s: g.standard_normal((s, n)), n, N, seed,
                          rng.GAUSSIAN, workers)
    return NegMomentEstimate("G_minus_q", q, descriptor, *_neg_moment(logv, q, seed))


def sphere_gauss_prefactor(n: int, q: float) -> float:
    """Exact ratio ``G_{-q}(K) / W_{-q}(K) = (2^{-q/2} Gamma((n-q)/2) / Gamma(n/2))^{-1/q}``."""
    if not (0 < q < n):
        raise QOutOfRange(f"q={q} outside (0, n) for n={n}")
    if q < 1e-8:
        return math.exp(0.5 * (special.digamma(n / 2) + math.log(2.0)))
    return math.sqrt(2.0) * math.exp((special.gammaln(n / 2) - special.gammaln((n - q) / 2)) / q)


def euclid_moment(source, q: float, seed: int = 0) -> NegMomentEstimate:
    """``I_q(K) = (E|X|^q)^(1/q)`` for X uniform on a volume-one body; q may be negative."""
    X = _points(source)
    n = X.shape[1]
    if q == 0 or q <= -n:
        raise QOutOfRange(f"q={q} outside (-n, 0) U (0, inf)")
    if q < -n / 2:
        raise QOutOfRange(f"Monte Carlo path needs q >= -n/2 = {-n / 2}")
    logv = 0.5 * np.log(np.einsum("ij,ij->i", X, X))
    total, boot = log_power_means(logv, [q], seed)
    v = math.exp(total[0] / q)
    b = np.exp(boot[:, 0] / q)
    lo, hi = np.quantile(b, [(1 - LEVEL) / 2, (1 + LEVEL) / 2])
    return NegMomentEstimate("I_q", q, "", v, float(min(lo, v)), float(max(hi, v)),
                             float(b.std(ddof=1)))


# --------------------------------------------------------------------------
# polar norms


def centroid_polar_norm(points, p: float) -> Callable:
    """Norm of ``Z_p(K)°``: ``y -> (E|<X, y>|^p)^(1/p)`` over a sample of K."""
    X = np.ascontiguousarray(_points(points))
    if p == 2:
        M = X.T @ X / X.shape[0]

        def norm(Y):
            Y = np.atleast_2d(Y)
            return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", Y, M, Y), 0.0))

        return norm

    def norm(Y):
        return kernels.projected_lp_norms(X, Y, p)

    return norm


def support_polar_norm(vertices) -> Callable:
    """Norm of ``K°`` for ``K = conv(vertices)`` (0 interior): the support function of K."""
    V = np.asarray(vertices, dtype=float)

    def norm(Y):
        return (np.atleast_2d(Y) @ V.T).max(axis=1)

    return norm


def ellipsoid_polar_norm(M) -> Callable:
    """Norm of ``K°`` for ``K = M B_2^n``: ``y -> |M^T y|``."""
    M = np.asarray(M, dtype=float)

    def norm(Y):
        return np.linalg.norm(np.atleast_2d(Y) @ M, axis=1)

    return norm
