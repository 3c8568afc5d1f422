"""Numerical checks of the moment, Gaussian-measure and geometric inequalities
behind the construction, plus the cone counterexample suite.

Every check returns a :class:`CheckResult`. A result passes iff every bounded
observed value lies inside its declared interval. Checks marked
``expected="fail"`` are designed to break and count as successful when they do.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, special

from . import rng
from .bodies import (
    BodyKind,
    BodySpec,
    MarginalDensity,
    closed_form_marginal,
    make_body,
    support_radius,
)
from .construction import GridD, certify_grid, make_grid
from .errors import (
    AsymmetricInput,
    InvalidMoments,
    NoSupportFunction,
    UnresolvableMass,
)
from .exact import exact_lp_norm, supports_exact
from .isotropy import isotropize, orth_complement
from .moments import (
    NegMomentEstimate,
    _neg_moment,
    centroid_polar_norm,
    neg_moment_sphere,
    quad_lp_norm,
    wilson_interval,
)
from .sampling import sample_uniform

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"
MOMENT_COMPARISON_BOUND = 3.0
ENDPOINT_CONSTANT = 8.0
MASS_RATE_BOUND = 10.0
SLOPE_RANGE = (0.8, 1.05)
TV_BOUND = 0.02
MGF_TOL = 1e-8
NEG_MOMENT_BAND = (0.2, 5.0)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


@dataclass
class CheckResult:
    check_id: str
    scope: dict
    observed: dict
    tolerance: dict  # key -> (low, high); keys must appear in observed
    status: str = ""
    expected: str = PASS
    notes: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = self.evaluate()

    def evaluate(self) -> str:
        for key, (lo, hi) in self.tolerance.items():
            v = self.observed.get(key)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return INDETERMINATE
            vals = np.atleast_1d(np.asarray(v, dtype=float))
            if (lo is not None and np.any(vals < lo)) or (hi is not None and np.any(vals > hi)):
                return FAIL
        return PASS

    @property
    def ok(self) -> bool:
        """True when the outcome matches what was expected."""
        return self.status == self.expected

    def to_dict(self) -> dict:
        return _jsonable({
            "check_id": self.check_id,
            "scope": self.scope,
            "status": self.status,
            "expected": self.expected,
            "ok": self.ok,
            "observed": self.observed,
            "tolerance": {k: list(v) for k, v in self.tolerance.items()},
            "notes": self.notes,
        })


# --------------------------------------------------------------------------
# one-dimensional log-concave laws as densities


def _law(lower, upper, logpdf, name, bp=()):
    return MarginalDensity(np.array([1.0]), float(lower), float(upper), logpdf, "closed_form",
                           {"law": name}, tuple(bp))


def uniform_law(a: float = -0.5, b: float = 0.5) -> MarginalDensity:
    c = -math.log(b - a)
    return _law(a, b, lambda t: np.full_like(np.asarray(t, dtype=float), c), "uniform")


def exponential_law(shift: float = 0.0, cutoff: float = 400.0) -> MarginalDensity:
    """Exp(1) shifted by ``-shift``; the right tail beyond ``cutoff`` is below 1e-150."""
    return _law(-shift, cutoff - shift, lambda t: -(np.asarray(t) + shift), "exponential",
                bp=(0.0,) if shift else ())


def laplace_law(cutoff: float = 400.0) -> MarginalDensity:
    return _law(-cutoff, cutoff, lambda t: -np.abs(t) - math.log(2.0), "two_sided_exponential",
                bp=(0.0,))


def cone_axis_law(n: int) -> MarginalDensity:
    """Axis marginal of the volume-one cone over a cube, centred."""
    body = make_body("cone", n)
    th = np.zeros(n)
    th[-1] = 1.0
    return closed_form_marginal(body, th)


# --------------------------------------------------------------------------
# moment comparison


def _lp(source, p, seed=0):
    if isinstance(source, MarginalDensity):
        return quad_lp_norm(source, p).value
    z = np.abs(np.asarray(getattr(source, "points", source), dtype=float).ravel())
    m = z.max()
    if m == 0:
        return 0.0
    return float(m * np.exp(np.log(np.mean((z / m) ** p)) / p))


def moment_comparison_ratio(source, p: float, q: float) -> float:
    """``(||X||_q p) / (q ||X||_p)``."""
    return _lp(source, q) * p / (q * _lp(source, p))


def check_moment_comparison(source, p_q_pairs, bound: float = MOMENT_COMPARISON_BOUND,
                            label: str = "") -> CheckResult:
    norms = {}

    def nrm(p):
        if p not in norms:
            norms[p] = _lp(source, p)
        return norms[p]

    ratios = [nrm(q) * p / (q * nrm(p)) for p, q in p_q_pairs]
    k = int(np.argmax(ratios))
    return CheckResult(
        "moment_comparison",
        {"source": label, "pairs": [list(x) for x in p_q_pairs]},
        {"max_ratio": float(ratios[k]), "argmax_pair": list(p_q_pairs[k]), "ratios": ratios},
        {"max_ratio": (None, bound)},
    )


# --------------------------------------------------------------------------
# Gaussian correlation


def _symmetry_spot_check(member, n, seed, count=1000):
    x = rng.stream(seed, rng.VALIDATION).standard_normal((count, n)) * 1.5
    if np.any(np.asarray(member(x)) != np.asarray(member(-x))):
        raise AsymmetricInput("membership differs between x and -x")


def slab_set(normals, widths=None) -> Callable:
    """``{x : |<a_i, x>| <= w_i}`` (symmetric polytope)."""
    A = np.atleast_2d(np.asarray(normals, dtype=float))
    w = np.ones(len(A)) if widths is None else np.asarray(widths, dtype=float)

    def member(X):
        return np.all(np.abs(np.atleast_2d(X) @ A.T) <= w, axis=1)

    return member


def ellipsoid_set(M) -> Callable:
    """``{x : |M x| <= 1}``."""
    M = np.asarray(M, dtype=float)

    def member(X):
        return np.linalg.norm(np.atleast_2d(X) @ M.T, axis=1) <= 1.0

    return member


def l1_set(radius) -> Callable:
    def member(X):
        return np.abs(np.atleast_2d(X)).sum(axis=1) <= radius

    return member


def random_symmetric_set(n: int, g: np.random.Generator) -> Callable:
    """A random symmetric slab polytope or ellipsoid of moderate Gaussian mass."""
    if g.random() < 0.5:
        k = int(g.integers(n, 3 * n + 1))
        A = g.standard_normal((k, n))
        return slab_set(A, g.uniform(0.8, 2.5, k) * np.linalg.norm(A, axis=1))
    Q, _ = np.linalg.qr(g.standard_normal((n, n)))
    return ellipsoid_set((Q * g.uniform(0.3, 1.2, n)).T)


def check_gaussian_correlation(n: int, A: Callable, B: Callable, N: int = 1_000_000,
                               seed: int = 0, label: str = "", equality: bool = False,
                               workers=None) -> CheckResult:
    """Estimates ``gamma(A), gamma(B), gamma(A and B)`` from one Gaussian sample.

    Passes if ``gamma(A and B) - gamma(A) gamma(B) >= -3 sigma``; with
    ``equality=True`` (independent events) the difference must also be
    within ``3 sigma`` from above.
    """
    _symmetry_spot_check(A, n, seed)
    _symmetry_spot_check(B, n, seed + 1)

    def work(k, size):
        Y = rng.stream(seed, rng.GAUSSIAN, k).standard_normal((size, n))
        a = np.asarray(A(Y), dtype=bool)
        b = np.asarray(B(Y), dtype=bool)
        return np.array([a.sum(), b.sum(), (a & b).sum()], dtype=np.int64)

    cnt = np.sum(rng.map_chunks(work, rng.chunk_sizes(N), workers), axis=0)
    pa, pb, pab = cnt / N
    # delta method on the per-sample statistic 1_AB - pB 1_A - pA 1_B
    var = (pab * (1 - pa - pb) ** 2 + (pa - pab) * pb**2 + (pb - pab) * pa**2
           - (pab - 2 * pa * pb) ** 2)
    sigma = math.sqrt(max(var, 0.0) / N)
    diff = pab - pa * pb
    z = diff / sigma if sigma > 0 else 0.0
    tol = {"z_score": (-3.0, 3.0 if equality else None)}
    return CheckResult(
        "gaussian_correlation",
        {"n": n, "N": N, "seed": seed, "label": label, "equality": equality},
        {"gamma_A": pa, "gamma_B": pb, "gamma_AB": pab, "difference": diff, "sigma": sigma,
         "z_score": z, "ci_A": wilson_interval(int(cnt[0]), N),
         "ci_B": wilson_interval(int(cnt[1]), N), "ci_AB": wilson_interval(int(cnt[2]), N)},
        tol,
    )


# --------------------------------------------------------------------------
# Gaussian mass of A_p and anti-concentration


def _iso_sample(body, N, seed, workers=None):
    batch = sample_uniform(body, N, seed, workers=workers)
    tr, _ = isotropize(batch, seed=seed)
    return tr.apply(batch.points), tr.L_K


def check_Ap_gaussian_mass(body: BodySpec, p: float, grid: GridD | None = None, N: int = 20_000,
                           seed: int = 0, body_samples: int = 20_000, workers=None) -> CheckResult:
    """Fraction of Gaussian vectors y with ``||<., y>||_p <= C0 sqrt(n p) L_K``."""
    n = body.n
    grid = make_grid(n) if grid is None else grid
    pts, L_K = _iso_sample(body, max(body_samples, 10 * n * n), seed, workers)
    norm = centroid_polar_norm(pts, p)
    Y = rng.stream(seed, rng.GAUSSIAN).standard_normal((N, n))
    thr = grid.C0 * math.sqrt(n * p) * L_K
    k = int(np.count_nonzero(norm(Y) <= thr))
    if k == 0:
        raise UnresolvableMass(f"no Gaussian draw out of {N} landed in A_p (p={p})")
    g = k / N
    lo, hi = wilson_interval(k, N)
    rate = -math.log(g) / p
    return CheckResult(
        "Ap_gaussian_mass",
        {"body": body.kind.value, "n": n, "p": p, "C0": grid.C0, "N": N, "seed": seed},
        {"gamma": g, "ci": [lo, hi], "rate": rate, "rate_ci": [-math.log(hi) / p,
                                                               -math.log(lo) / p if lo > 0 else math.inf]},
        {"rate": (None, MASS_RATE_BOUND)},
    )


def check_paley_zygmund(a_p: float, b_p: float, p: float) -> float:
    """Lower bound ``(1/4) (b_p / a_p)^(2p)`` on ``P(N_p(Y) <= 2^(1/p) a_p)``."""
    if a_p <= 0 or b_p <= 0:
        raise InvalidMoments("negative moments must be positive")
    return 0.25 * (b_p / a_p) ** (2 * p)


def check_paley_zygmund_mc(body: BodySpec, p: float, N: int = 1_000_000, seed: int = 0,
                           body_samples: int = 20_000, workers=None) -> CheckResult:
    """``a_p = G_{-p}(Z_p)``, ``b_p = G_{-2p}(Z_p)`` and the direct probability of the
    event ``{N_p(Y) <= 2^(1/p) a_p}`` compared with the anti-concentration bound."""
    n = body.n
    pts, _ = _iso_sample(body, max(body_samples, 10 * n * n), seed, workers)
    norm = centroid_polar_norm(pts, p)
    if 2 * p > n / 2:
        raise InvalidMoments(f"order 2p={2 * p} exceeds n/2={n / 2}")

    def work(k, size):
        return norm(rng.stream(seed, rng.GAUSSIAN, k).standard_normal((size, n)))

    v = np.concatenate(rng.map_chunks(work, rng.chunk_sizes(N), workers))
    logv = np.log(v)
    a = NegMomentEstimate("G_minus_q", p, "Z_p", *_neg_moment(logv, p, seed))
    b = NegMomentEstimate("G_minus_q", 2 * p, "Z_p", *_neg_moment(logv, 2 * p, seed))
    if a.ci_high < b.ci_low:
        raise InvalidMoments(f"G_-p={a.value:.4g} below G_-2p={b.value:.4g} beyond the CI")
    bound = check_paley_zygmund(a.value, b.value, p)
    cnt = np.array([np.count_nonzero(v <= 2 ** (1 / p) * a.value),
                    np.count_nonzero(v <= 2 * a.value)])
    prob = cnt[0] / N
    lo, hi = wilson_interval(int(cnt[0]), N)
    return CheckResult(
        "paley_zygmund",
        {"body": body.kind.value, "n": n, "p": p, "N": N, "seed": seed},
        {"a_p": a.value, "b_p": b.value, "alpha": a.value / b.value, "bound": bound,
         "probability": prob, "probability_ci": [lo, hi], "probability_2a": cnt[1] / N,
         "margin": hi - bound},
        {"margin": (0.0, None)},
    )


# --------------------------------------------------------------------------
# endpoint


def _norm_n(body, theta):
    """``(||<X,theta>||_n, method)``; for odd n the exact order n-1 is returned,
    which is a lower bound and so keeps the check conservative."""
    n = body.n
    md = closed_form_marginal(body, theta)
    if md is not None:
        return quad_lp_norm(md, float(n)).value, "quadrature"
    if not supports_exact(body):
        raise NoSupportFunction(f"no exact moments for {body.kind.value}")
    k = n if n % 2 == 0 else n - 1
    return exact_lp_norm(body, theta, max(k, 2)), f"exact_order_{max(k, 2)}"


def check_endpoint(body: BodySpec, theta, quadrature: bool = True) -> CheckResult:
    """``R <= 8 ||X_theta||_n`` with R the support radius, and the sup comparison
    ``sup_{p>=1} ||.||_p/sqrt(p) <= 8 sup_{1<=p<=n} ||.||_p/sqrt(p)``."""
    n = body.n
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    if body.kind is BodyKind.POLYTOPE and body.raw_halfspaces is None:
        raise NoSupportFunction("polytope without halfspaces")
    try:
        R = support_radius(body, theta)
    except Exception as exc:  # pragma: no cover - defensive
        raise NoSupportFunction(str(exc)) from exc
    if n == 1:
        return CheckResult("endpoint", {"body": body.kind.value, "n": 1},
                           {"R": R, "norm_n": R, "ratio": 1.0}, {"ratio": (None, ENDPOINT_CONSTANT)})
    ln, method = _norm_n(body, theta)
    md = closed_form_marginal(body, theta) if quadrature else None
    if md is not None:
        grid = certify_grid(n)
        inner = max(quad_lp_norm(md, p).value / math.sqrt(p) for p in grid)
    else:
        evens = [k for k in range(2, n + 1, 2)] or [2]
        inner = max(exact_lp_norm(body, theta, k) / math.sqrt(k) for k in evens)
    # for p > n, ||.||_p / sqrt(p) <= R / sqrt(n)
    outer = max(inner, R / math.sqrt(n))
    return CheckResult(
        "endpoint",
        {"body": body.kind.value, "n": n, "method": method},
        {"R": R, "norm_n": ln, "ratio": R / ln, "sup_inner": inner, "sup_outer_bound": outer,
         "sup_ratio": outer / inner},
        {"ratio": (None, ENDPOINT_CONSTANT), "sup_ratio": (None, ENDPOINT_CONSTANT)},
    )


# --------------------------------------------------------------------------
# cone counterexample


def shifted_exponential_mgf(t: float) -> float:
    """``E exp(t X)`` for ``X = E - 1``, E ~ Exp(1); infinite for t >= 1."""
    return math.exp(-t) / (1 - t) if t < 1 else math.inf


def mgf_quadrature(t: float, upper: float = math.inf) -> float:
    """``int_{-1}^{upper} e^{t x} e^{-(x+1)} dx`` by adaptive quadrature."""
    if upper == math.inf and t >= 1:
        return math.inf
    v, _ = integrate.quad(lambda x: math.exp((t - 1) * x - 1), -1.0, upper, epsabs=0,
                          epsrel=1e-13, limit=500)
    return v


def mgf_diverges(t: float, L: float = 200.0) -> bool:
    """Truncated integrals keep growing when the upper limit doubles."""
    a = mgf_quadrature(t, L)
    b = mgf_quadrature(t, 2 * L)
    return b / a > 1.5


def _axis_slope(n):
    md = cone_axis_law(n)
    grid = certify_grid(n)
    vals = np.array([quad_lp_norm(md, p).value for p in grid])
    l2 = quad_lp_norm(md, 2.0).value
    ratio = vals / l2
    slope = float(np.polyfit(np.log(grid), np.log(ratio), 1)[0])
    return slope, grid, vals / (np.sqrt(grid) * l2)


def axis_tv_distance(n: int) -> float:
    """Total variation between the standardised cone axis marginal and ``E - 1``."""
    md = cone_axis_law(n)
    mu = 0.0
    sd = quad_lp_norm(md, 2.0).value
    lo, hi = (md.lower - mu) / sd, (md.upper - mu) / sd

    def diff(x):
        f = sd * float(md.pdf(np.array([mu + sd * x]))[0])
        g = math.exp(-(x + 1)) if x >= -1 else 0.0
        return abs(f - g)

    edges = sorted({min(lo, -1.0), -1.0, lo, 0.0, 5.0, hi, max(hi, 60.0)})
    tv = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            v, _ = integrate.quad(diff, a, b, limit=500, epsabs=1e-12)
            tv += v
    return 0.5 * tv


def check_counterexample(n_list: Iterable[int] = (100, 200), t_values=(0.25, 0.5, 0.9),
                         tv_n: int = 200) -> CheckResult:
    """Exact MGF of ``E - 1`` against quadrature, divergence for ``t >= 1``,
    near-linear growth of the cone axis moments and the exponential limit of the
    standardised axis marginal."""
    n_list = [int(n) for n in n_list]
    mgf_err = []
    mgf_vals = {}
    for t in t_values:
        exact = shifted_exponential_mgf(t)
        quad = mgf_quadrature(t)
        mgf_vals[str(t)] = {"formula": exact, "quadrature": quad}
        mgf_err.append(abs(quad - exact))
    div = {str(t): mgf_diverges(t) for t in (1.0, 1.5)}
    conv = {str(t): mgf_diverges(t) for t in t_values}
    slopes = {}
    ratio_max = {}
    for n in n_list:
        s, _, r = _axis_slope(n)
        slopes[str(n)] = s
        ratio_max[str(n)] = float(r.max())
    tv = axis_tv_distance(tv_n)
    observed = {
        "mgf": mgf_vals,
        "mgf_max_abs_error": max(mgf_err),
        "divergent_count": sum(div.values()),
        "spurious_divergence_count": sum(conv.values()),
        "slopes": list(slopes.values()),
        "slope_by_n": slopes,
        "max_subgaussian_ratio_by_n": ratio_max,
        "variance_of_limit": quad_lp_norm(exponential_law(shift=1.0), 2.0).value ** 2,
        "tv_distance": tv,
    }
    tol = {
        "mgf_max_abs_error": (0.0, MGF_TOL),
        "divergent_count": (len(div), len(div)),
        "spurious_divergence_count": (0, 0),
        "slopes": SLOPE_RANGE,
        "tv_distance": (0.0, TV_BOUND),
    }
    return CheckResult("counterexample", {"n_list": n_list, "t": list(t_values), "tv_n": tv_n},
                       observed, tol)


# --------------------------------------------------------------------------
# volume radius separation


def _radial_vrad(norms_fn, radii, dirs_F, d):
    """Volume radius of star bodies ``{y in F : N_k(y) <= r_k}`` by radial integration:
    ``vrad = (E_u rho(u)^d)^(1/d)`` with ``rho(u) = r / N(u)`` and u uniform on the sphere of F."""
    rho = radii / norms_fn(dirs_F)
    return float(np.exp((special.logsumexp(d * np.log(rho)) - math.log(len(rho))) / d)), rho


def check_volume_radius_separation(body: BodySpec, dim_F: int, grid: GridD | None = None,
                                   directions: int = 20_000, seed: int = 0,
                                   body_samples: int = 20_000, gaussian: int = 5_000,
                                   workers=None) -> CheckResult:
    """Compare ``vrad(A cap F)`` with ``max_p vrad(B_p cap F)`` for a random subspace F.

    Volumes of the star-shaped sets come from radial integration over directions
    of F (each direction gives the exact boundary distance ``r / N_p(u)``).
    A witness ``y in (A cap F) minus union B_p`` is taken on the first direction
    where the A-radius exceeds every B_p-radius.
    """
    n = body.n
    if n > 12:
        raise UnresolvableMass("volume-radius separation is resolved for n <= 12 only")
    grid = make_grid(n) if grid is None else grid
    pts, L_K = _iso_sample(body, max(body_samples, 10 * n * n), seed, workers)
    g = rng.stream(seed, rng.DIRECTIONS, 1)
    if dim_F < n:
        F = orth_complement(g.standard_normal((n - dim_F, n)), n=n).basis
    else:
        F = np.eye(n)
    u = g.standard_normal((directions, dim_F))
    u /= np.linalg.norm(u, axis=1)[:, None]
    U = u @ F.T
    D = grid.exponents
    rho_A = np.full(directions, np.inf)
    vrad_B, rho_B = {}, np.zeros(directions)
    norms_by_p = {}
    for p in D:
        nv = centroid_polar_norm(pts, p)(U)
        norms_by_p[p] = nv
        base = math.sqrt(n * p) * L_K
        rho_A = np.minimum(rho_A, grid.C0 * base / nv)
        rB = grid.eps * base / nv
        rho_B = np.maximum(rho_B, rB)
        vrad_B[str(p)] = float(np.exp((special.logsumexp(dim_F * np.log(rB))
                                       - math.log(directions)) / dim_F))
    vrad_A = float(np.exp((special.logsumexp(dim_F * np.log(rho_A)) - math.log(directions))
                          / dim_F))
    gap = rho_A - rho_B
    witness = None
    if np.any(gap > 0):
        i = int(np.argmax(gap > 0))
        y = 0.5 * (rho_A[i] + rho_B[i]) * U[i]
        inA = all(centroid_polar_norm(pts, p)(y)[0] <= grid.C0 * math.sqrt(n * p) * L_K for p in D)
        inB = any(centroid_polar_norm(pts, p)(y)[0] <= grid.eps * math.sqrt(n * p) * L_K
                  for p in D)
        if inA and not inB:
            witness = y
    # Gaussian mass of A in F versus in R^n
    Yn = rng.stream(seed, rng.GAUSSIAN, 0).standard_normal((gaussian, n))
    YF = rng.stream(seed, rng.GAUSSIAN, 1).standard_normal((gaussian, dim_F)) @ F.T
    inA_n = np.ones(gaussian, bool)
    inA_F = np.ones(gaussian, bool)
    for p in D:
        nrm = centroid_polar_norm(pts, p)
        thr = grid.C0 * math.sqrt(n * p) * L_K
        inA_n &= nrm(Yn) <= thr
        inA_F &= nrm(YF) <= thr
    sep = vrad_A / max(vrad_B.values())
    observed = {
        "vrad_A": vrad_A,
        "vrad_B": vrad_B,
        "separation": sep,
        "witness_found": 1.0 if witness is not None else 0.0,
        "witness": witness,
        "gamma_F_A": float(inA_F.mean()),
        "gamma_n_A": float(inA_n.mean()),
    }
    tol = {"separation": (1.0 + 1e-12, None), "witness_found": (1.0, 1.0)}
    expected = FAIL if grid.eps >= grid.C0 else PASS
    return CheckResult(
        "volume_radius_separation",
        {"body": body.kind.value, "n": n, "dim_F": dim_F, "C0": grid.C0, "eps": grid.eps,
         "exponents": list(D), "directions": directions, "seed": seed},
        observed, tol, expected=expected,
    )


# --------------------------------------------------------------------------
# two-sided bounds for W_{-p}(Z_p)


def check_neg_moment_bounds(body: BodySpec, grid: GridD | None = None, N: int = 20_000,
                            seed: int = 0, body_samples: int = 20_000, workers=None) -> CheckResult:
    """``W_{-p}(Z_p(K)) / (sqrt(p) L_K)`` stays within a fixed band for every p of the grid."""
    n = body.n
    grid = make_grid(n) if grid is None else grid
    pts, L_K = _iso_sample(body, max(body_samples, 10 * n * n), seed, workers)
    ratios = {}
    for p in grid.exponents:
        w = neg_moment_sphere(centroid_polar_norm(pts, p), p, n, N, seed, "Z_p", workers)
        ratios[str(p)] = w.value / (math.sqrt(p) * L_K)
    return CheckResult(
        "neg_moment_bounds",
        {"body": body.kind.value, "n": n, "exponents": list(grid.exponents), "N": N},
        {"ratios": list(ratios.values()), "ratio_by_p": ratios, "L_K": L_K},
        {"ratios": NEG_MOMENT_BAND},
    )


# --------------------------------------------------------------------------
# suites and reporting

SELECTORS = ("all", "moments", "correlation", "endpoint", "counterexample", "volume", "mass")


def _suite_moments(seed, n=None, workers=None, quick=False):
    pairs = [(p, q) for p in (1, 2, 4, 8, 16, 32) for q in (1, 2, 4, 8, 16, 32) if p < q]
    laws = [("uniform", uniform_law()), ("exponential", exponential_law()),
            ("two_sided_exponential", laplace_law()), ("cone_axis_50", cone_axis_law(50))]
    out = [check_moment_comparison(md, pairs, label=name) for name, md in laws]
    for kind in ("cube", "l1_ball"):
        for dim in ((10,) if quick else (10, 20)):
            out.append(check_neg_moment_bounds(make_body(kind, dim), seed=seed,
                                               N=5000 if quick else 20_000, workers=workers))
    return out


def _suite_correlation(seed, n=None, workers=None, quick=False):
    N = 200_000 if quick else 1_000_000
    out = [check_gaussian_correlation(2, slab_set([[1, 0]]), slab_set([[0, 1]]), N, seed,
                                      "product_slabs", equality=True, workers=workers)]
    R = np.array([[math.cos(0.6), -math.sin(0.6)], [math.sin(0.6), math.cos(0.6)]])
    out.append(check_gaussian_correlation(2, l1_set(1.5), ellipsoid_set(np.diag([1.0, 0.4]) @ R),
                                          N, seed, "l1_vs_rotated_ellipse", workers=workers))
    g = rng.stream(seed, rng.CANDIDATES, 99)
    for i in range(4 if quick else 20):
        dim = 2 + (i % 2)
        out.append(check_gaussian_correlation(dim, random_symmetric_set(dim, g),
                                              random_symmetric_set(dim, g), N, seed + i,
                                              f"random_pair_{i}", workers=workers))
    return out


def _suite_endpoint(seed, n=None, workers=None, quick=False):
    dim = n or 10
    out = []
    bodies = [make_body("cube", dim), make_body("ball", dim), make_body("l1_ball", dim),
              make_body("simplex", dim), make_body("cone", dim)]
    for body in bodies:
        dirs = rng.stream(seed, rng.DIRECTIONS, 7).standard_normal((5 if quick else 20, dim))
        for th in dirs:
            out.append(check_endpoint(body, th / np.linalg.norm(th)))
    return out


def _suite_counterexample(seed, n=None, workers=None, quick=False):
    return [check_counterexample((n,) if n else (100, 200))]


def _suite_volume(seed, n=None, workers=None, quick=False):
    body = make_body("cube", 8)
    out = [check_volume_radius_separation(body, d, seed=seed, workers=workers,
                                          directions=5000 if quick else 20_000)
           for d in (6, 7, 8)]
    g = make_grid(8)
    bad = GridD(g.n, g.c0, g.exponents, g.C0, g.C0)
    out.append(check_volume_radius_separation(body, 6, bad, seed=seed, workers=workers,
                                              directions=5000 if quick else 20_000))
    return out


def _suite_mass(seed, n=None, workers=None, quick=False):
    body = make_body("cube", n or 10)
    g = make_grid(body.n)
    out = [check_Ap_gaussian_mass(body, p, g, seed=seed, workers=workers) for p in g.exponents]
    out.append(check_paley_zygmund_mc(body, 2, N=200_000 if quick else 1_000_000, seed=seed,
                                      workers=workers))
    return out


_SUITES = {
    "moments": _suite_moments,
    "correlation": _suite_correlation,
    "endpoint": _suite_endpoint,
    "counterexample": _suite_counterexample,
    "volume": _suite_volume,
    "mass": _suite_mass,
}


def run_suite(selector: str, seed: int = 0, n: int | None = None, workers=None,
              quick: bool = False) -> list[CheckResult]:
    if selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}; choose from {', '.join(SELECTORS)}")
    names = list(_SUITES) if selector == "all" else [selector]
    out = []
    for name in names:
        out.extend(_SUITES[name](seed, n, workers, quick))
    return out


def report_json(results: list[CheckResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True)


def summary_table(results: list[CheckResult]) -> str:
    rows = [("check", "scope", "status", "expected", "ok")]
    for r in results:
        scope = ",".join(f"{k}={v}" for k, v in r.scope.items()
                         if k in ("body", "n", "p", "dim_F", "label", "source", "n_list", "eps"))
        rows.append((r.check_id, scope, r.status, r.expected, "yes" if r.ok else "NO"))
    w = [max(len(str(row[i])) for row in rows) for i in range(5)]
    return "\n".join("  ".join(str(c).ljust(w[i]) for i, c in enumerate(row)) for row in rows)


def exit_code(results: list[CheckResult]) -> int:
    return 0 if all(r.ok for r in results) else 1
