"""Greedy selection of an orthonormal family of directions with two-sided
moment bounds.

Work happens in isotropic position ``TK``. For each order p of the dyadic
grid D two sublevel sets of the marginal norm ``N_p(y) = ||<., y>||_p`` are
used::

    A_p = {y : N_p(y) <= C0 sqrt(n p) L_K}      (feasible)
    B_p = {y : N_p(y) <= eps sqrt(n p) L_K}     (too small)

Step j draws Gaussian candidates inside ``F_j = {y : <Ty, Ty_i> = 0, i <= j}``,
rescales them to length sqrt(n) and keeps the first one lying in every A_p
and in no B_p. Accepted vectors are mapped back with T and normalised, which
yields an orthonormal set in the original coordinates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .bodies import BodySpec, closed_form_marginal, support_radius
from .errors import BudgetExhausted, DimensionTooSmall, InvalidParam
from .isotropy import IsotropicTransform, isotropize, orth_complement
from .moments import (
    Estimate,
    MomentProfile,
    ProfileEntry,
    mc_lp_norms,
    p_max,
    quad_lp_norm,
)
from .sampling import sample_uniform

log = logging.getLogger(__name__)

DEFAULT_C0 = 0.25
DEFAULT_BIG_C0 = 4.0
DEFAULT_EPS = 0.05
DEFAULT_BETA = 0.9
# flag band for ||<., theta>||_p / (sqrt(p) ||<., theta>||_2)
FLAG_LOW = 0.2
FLAG_HIGH = 3.0
ENDPOINT_CONSTANT = 8.0


@dataclass(frozen=True)
class GridD:
    n: int
    c0: float
    exponents: tuple
    C0: float
    eps: float

    def to_dict(self):
        return {"n": self.n, "c0": self.c0, "exponents": list(self.exponents),
                "C0": self.C0, "eps": self.eps}


def make_grid(n: int, c0: float = DEFAULT_C0, C0: float = DEFAULT_BIG_C0,
              eps: float = DEFAULT_EPS) -> GridD:
    """Dyadic orders ``{2^j : 2^j <= c0 n}``."""
    if not (0 < c0 <= 0.25):
        raise InvalidParam(f"c0 must lie in (0, 1/4], got {c0}")
    if C0 <= 0 or eps <= 0:
        raise InvalidParam("C0 and eps must be positive")
    if c0 * n < 1:
        raise DimensionTooSmall(f"c0 * n = {c0 * n:g} < 1")
    exps = []
    p = 1
    while p <= c0 * n + 1e-12:
        exps.append(p)
        p *= 2
    return GridD(int(n), float(c0), tuple(exps), float(C0), float(eps))


# --------------------------------------------------------------------------
# evaluators of y -> ||<TX, y>||_p


class MonteCarloEvaluator:
    """Norms estimated from a sample of the isotropic body."""

    method = "monte_carlo"

    def __init__(self, body, transform: IsotropicTransform, N: int, seed: int, workers=None,
                 points=None):
        self.body = body
        self.transform = transform
        self.N = N
        self.seed = seed
        self.workers = workers
        if points is None:
            points = sample_uniform(body, N, seed, workers=workers).points
        self.points = transform.apply(points)
        self._refined = None
        self.calls = 0

    def norms(self, y, ps) -> list[Estimate]:
        self.calls += len(ps)
        return mc_lp_norms(self.points @ np.asarray(y, dtype=float), ps, self.seed,
                           check_budget=False)

    def refined(self):
        """Evaluator with twice the sample budget (built once, then reused)."""
        if self._refined is None:
            self._refined = MonteCarloEvaluator(self.body, self.transform, 2 * self.N,
                                                self.seed + 0x9E3779B9, self.workers)
        return self._refined


class QuadratureEvaluator:
    """Norms from closed-form marginals: ``N_p(y) = |Ty| ||<X, Ty/|Ty|>||_{p,K}``."""

    method = "quadrature"

    def __init__(self, body, transform: IsotropicTransform):
        self.body = body
        self.transform = transform
        self.calls = 0

    def available(self, y) -> bool:
        a = self.transform.T @ np.asarray(y, dtype=float)
        return closed_form_marginal(self.body, a / np.linalg.norm(a)) is not None

    def norms(self, y, ps) -> list[Estimate]:
        a = self.transform.T @ np.asarray(y, dtype=float)
        r = float(np.linalg.norm(a))
        md = closed_form_marginal(self.body, a / r)
        if md is None:
            raise InvalidParam("no closed-form marginal for this direction")
        self.calls += len(ps)
        out = []
        for p in ps:
            e = quad_lp_norm(md, p)
            out.append(Estimate(r * e.value, r * e.ci_low, r * e.ci_high, r * e.stderr, e.method))
        return out

    def refined(self):
        return self


class AutoEvaluator:
    """Quadrature when the direction has a closed-form marginal, else Monte Carlo."""

    method = "auto"

    def __init__(self, body, transform, N, seed, workers=None, points=None):
        self.quad = QuadratureEvaluator(body, transform)
        self._mc_args = (body, transform, N, seed, workers, points)
        self._mc = None

    @property
    def mc(self):
        if self._mc is None:
            self._mc = MonteCarloEvaluator(*self._mc_args)
        return self._mc

    @property
    def calls(self):
        return self.quad.calls + (self._mc.calls if self._mc else 0)

    def norms(self, y, ps):
        if self.quad.available(y):
            return self.quad.norms(y, ps)
        return self.mc.norms(y, ps)

    def refined(self):
        r = AutoEvaluator.__new__(AutoEvaluator)
        r.quad = self.quad
        r._mc_args = self._mc_args
        r._mc = self.mc.refined()
        return r


def make_evaluator(kind: str, body, transform, N, seed, workers=None, points=None):
    if kind in ("mc", "monte_carlo"):
        return MonteCarloEvaluator(body, transform, N, seed, workers, points)
    if kind in ("quad", "quadrature"):
        return QuadratureEvaluator(body, transform)
    if kind == "auto":
        return AutoEvaluator(body, transform, N, seed, workers, points)
    raise InvalidParam(f"unknown evaluator {kind!r}")


# --------------------------------------------------------------------------
# membership


def _decide(est: Estimate, thr: float):
    if est.ci_high <= thr:
        return True
    if est.ci_low > thr:
        return False
    return None


def _membership(y, p, threshold, evaluator, when_unsure):
    est = evaluator.norms(y, [p])[0]
    d = _decide(est, threshold)
    if d is None:
        d = _decide(evaluator.refined().norms(y, [p])[0], threshold)
    return when_unsure if d is None else d


def in_Ap(y, p, grid: GridD, L_K: float, evaluator) -> bool:
    """``N_p(y) <= C0 sqrt(n p) L_K``; an undecided CI after one budget doubling counts as outside."""
    if not np.any(y):
        return True
    return _membership(y, p, grid.C0 * math.sqrt(grid.n * p) * L_K, evaluator, False)


def in_Bp(y, p, grid: GridD, L_K: float, evaluator) -> bool:
    """``N_p(y) <= eps sqrt(n p) L_K``; an undecided CI after one budget doubling counts as inside."""
    if not np.any(y):
        return True
    return _membership(y, p, grid.eps * math.sqrt(grid.n * p) * L_K, evaluator, True)


def candidate_ok(y, grid: GridD, L_K: float, evaluator):
    """``y`` in every A_p and in no B_p; returns ``(ok, max_p N_p(y)/(sqrt(p) L_K |y|))``."""
    ests = evaluator.norms(y, grid.exponents)
    scale = math.sqrt(grid.n) * L_K
    ok = True
    for p, est in zip(grid.exponents, ests):
        hi_thr = grid.C0 * scale * math.sqrt(p)
        lo_thr = grid.eps * scale * math.sqrt(p)
        a = _decide(est, hi_thr)
        if a is None:
            a = in_Ap(y, p, grid, L_K, evaluator)
        if not a:
            ok = False
            break
        b = _decide(est, lo_thr)
        if b is None:
            b = in_Bp(y, p, grid, L_K, evaluator)
        if b:
            ok = False
            break
    ynorm = float(np.linalg.norm(y))
    worst = max(e.value / (math.sqrt(p) * L_K * ynorm) for p, e in zip(grid.exponents, ests))
    return ok, worst


# --------------------------------------------------------------------------
# direction sets


@dataclass
class DirectionSet:
    thetas: np.ndarray  # (m, n) rows, orthonormal in the original frame
    profiles: list
    flags: list
    target_m: int
    grid: GridD
    L_K: float
    transform: IsotropicTransform | None = None
    iso_vectors: np.ndarray | None = None
    stats: dict = field(default_factory=dict)
    flag_band: tuple = (FLAG_LOW, FLAG_HIGH)

    @property
    def size(self) -> int:
        return len(self.thetas)

    @property
    def complete(self) -> bool:
        return self.size >= self.target_m

    def orthonormality_error(self) -> float:
        if self.size == 0:
            return 0.0
        G = self.thetas @ self.thetas.T
        return float(np.abs(G - np.eye(self.size)).max())

    def to_dict(self) -> dict:
        return {
            "constants": {**self.grid.to_dict(), "flag_low": self.flag_band[0],
                          "flag_high": self.flag_band[1]},
            "target_m": self.target_m,
            "count": self.size,
            "L_K": self.L_K,
            "thetas": self.thetas.tolist(),
            "flags": [bool(f) for f in self.flags],
            "stats": self.stats,
        }


def target_size(n: int, beta: float = DEFAULT_BETA) -> int:
    return int(math.ceil(beta * n - 1e-9))


def _profile(body, theta, ps, points=None, seed=0):
    md = closed_form_marginal(body, theta)
    if md is not None:
        ests = [quad_lp_norm(md, p) for p in ps]
        truncated = False
    else:
        z = points @ theta
        cap = p_max(z.size)
        kept = [p for p in ps if p <= cap + 1e-12]
        truncated = len(kept) < len(ps)
        ps = kept
        ests = mc_lp_norms(z, ps, seed)
    entries = [ProfileEntry(float(p), e.value, e.ci_low, e.ci_high, e.method)
               for p, e in zip(ps, ests)]
    return MomentProfile(np.asarray(theta), entries, body.n, None, truncated)


def _ratios(profile: MomentProfile):
    l2 = profile.value(2.0)
    return profile.values / (np.sqrt(profile.ps) * l2)


def _flag(profile, band):
    r = _ratios(profile)
    return bool(r.min() >= band[0] and r.max() <= band[1])


def _descend(u0, basis, grid, L_K, evaluator, iters=200):
    """Projected coordinate descent of ``max_p N_p(u)/(sqrt(p) L_K)`` over unit u in span(basis)."""
    n = basis.shape[0]

    def objective(c):
        u = basis @ c
        u = u / np.linalg.norm(u)
        ests = evaluator.norms(u, grid.exponents)
        return max(e.value / (math.sqrt(p) * L_K) for p, e in zip(grid.exponents, ests))

    c = basis.T @ u0
    c /= np.linalg.norm(c)
    best = objective(c)
    step = 0.5
    d = basis.shape[1]
    stale = 0
    for it in range(iters):
        k = it % d
        improved = False
        for sgn in (1.0, -1.0):
            trial = c.copy()
            trial[k] += sgn * step
            if not np.any(trial):
                continue
            trial /= np.linalg.norm(trial)
            f = objective(trial)
            if f < best:
                best, c, improved = f, trial, True
                break
        stale = 0 if improved else stale + 1
        if stale >= d:
            step *= 0.5
            stale = 0
            if step < 1e-4:
                break
    u = basis @ c
    return math.sqrt(n) * u / np.linalg.norm(u), best


def find_directions(
    body: BodySpec,
    grid: GridD | None = None,
    budget: int | None = None,
    seed: int = 0,
    beta: float = DEFAULT_BETA,
    samples: int = 200_000,
    evaluator: str = "auto",
    workers=None,
    flag_band=(FLAG_LOW, FLAG_HIGH),
) -> DirectionSet:
    """Greedy construction of ``ceil(beta n)`` orthonormal directions.

    ``budget`` bounds the number of L^p evaluations (default 200 candidates
    per step). When a step exhausts its share of the budget without an
    accepted candidate, projected coordinate descent from the best rejected
    candidate is tried once; if that also fails, ``BudgetExhausted`` is raised
    with the partial DirectionSet attached.
    """
    n = body.n
    grid = make_grid(n) if grid is None else grid
    if grid.n != n:
        raise InvalidParam("grid dimension does not match the body")
    m = target_size(n, beta)
    D = grid.exponents
    if budget is None:
        budget = 200 * len(D) * m
    per_step = max(1, budget // (m * len(D)))

    batch = sample_uniform(body, max(samples, 10 * n * n), seed, workers=workers)
    tr, cov_ci = isotropize(batch, seed=seed)
    L_K = tr.L_K
    ev = make_evaluator(evaluator, body, tr, batch.N, seed, workers, points=batch.points)
    T2 = tr.T @ tr.T

    accepted = []
    step_stats = []
    used = 0

    def partial():
        return _assemble(body, accepted, tr, grid, m, L_K, batch.points, seed,
                         {"steps": step_stats, "cov_ci": cov_ci, "evaluations": used}, flag_band)

    for j in range(m):
        basis = orth_complement([T2 @ y for y in accepted], n=n).basis if accepted else np.eye(n)
        g = rng.stream(seed, rng.CANDIDATES, j)
        best = None
        found = None
        tried = 0
        for _ in range(per_step):
            if used + len(D) > budget:
                break
            c = g.standard_normal(basis.shape[1])
            y = basis @ c
            y *= math.sqrt(n) / np.linalg.norm(y)
            ok, worst = candidate_ok(y, grid, L_K, ev)
            tried += 1
            used += len(D)
            if ok:
                found = y
                break
            if best is None or worst < best[1]:
                best = (y, worst)
        fallback = False
        if found is None and best is not None:
            fallback = True
            y, _ = _descend(best[0], basis, grid, L_K, ev)
            ok, _ = candidate_ok(y, grid, L_K, ev)
            if ok:
                found = y
        step_stats.append({"step": j, "candidates": tried, "fallback": fallback,
                           "accepted": found is not None})
        if found is None:
            raise BudgetExhausted(f"no acceptable candidate at step {j} of {m}", partial())
        accepted.append(found)
    ds = partial()
    ds.stats["evaluations"] = used
    return ds


def _assemble(body, ys, tr, grid, m, L_K, points, seed, stats, band):
    n = body.n
    if ys:
        Y = np.array(ys)
        A = Y @ tr.T  # rows T y_i
        thetas = A / np.linalg.norm(A, axis=1)[:, None]
    else:
        Y = np.zeros((0, n))
        thetas = np.zeros((0, n))
    profiles, flags = [], []
    for th in thetas:
        prof = _profile(body, th, [float(p) for p in sorted(set(grid.exponents) | {2})],
                        points, seed)
        profiles.append(prof)
        flags.append(_flag(prof, band))
    return DirectionSet(thetas, profiles, flags, m, grid, L_K, tr, Y, stats, tuple(band))


# --------------------------------------------------------------------------
# certification


def certify_grid(n: int) -> list:
    """Orders ``2^(j/2) <= n`` together with n itself."""
    out = []
    j = 0
    while 2 ** (j / 2) <= n + 1e-12:
        out.append(2 ** (j / 2))
        j += 1
    if abs(out[-1] - n) > 1e-12:
        out.append(float(n))
    return out


@dataclass
class Certification:
    directions: list
    sup_ratio: float
    inf_ratio: float
    all_pass: bool
    band: tuple

    def to_dict(self):
        return {"sup_ratio": self.sup_ratio, "inf_ratio": self.inf_ratio,
                "all_pass": self.all_pass, "band": list(self.band), "directions": self.directions}


def certify(
    direction_set: DirectionSet | np.ndarray,
    body: BodySpec,
    full_grid_up_to_n: bool = True,
    samples: int = 1_000_000,
    seed: int = 1,
    band=(FLAG_LOW, FLAG_HIGH),
    workers=None,
) -> Certification:
    """Re-estimate every direction on the grid ``2^(j/2) <= n`` and check
    ``band[0] <= ||.||_q / (sqrt(q) ||.||_2) <= band[1]``.

    Directions with a closed-form marginal use quadrature on the full grid (and
    the endpoint check ``R <= 8 ||.||_n``); the rest use a fresh Monte Carlo
    sample with the grid capped at ``p_max``.
    """
    thetas = direction_set.thetas if isinstance(direction_set, DirectionSet) else np.atleast_2d(
        direction_set)
    n = body.n
    grid = certify_grid(n) if full_grid_up_to_n else [1.0, 2.0]
    if 2.0 not in grid:
        grid = sorted(set(grid) | {2.0})
    pts = None
    out = []
    for i, th in enumerate(thetas):
        th = th / np.linalg.norm(th)
        md = closed_form_marginal(body, th)
        if md is None and pts is None:
            pts = sample_uniform(body, samples, seed, workers=workers).points
        prof = _profile(body, th, grid, pts, seed)
        r = _ratios(prof)
        rec = {
            "index": i,
            "method": prof.entries[0].method,
            "truncated": prof.truncated,
            "p_max_tested": float(prof.ps.max()),
            "sup_ratio": float(r.max()),
            "argsup_p": float(prof.ps[int(np.argmax(r))]),
            "inf_ratio": float(r.min()),
            "pass": bool(r.min() >= band[0] and r.max() <= band[1]),
        }
        if md is not None:
            R = support_radius(body, th)
            ln = quad_lp_norm(md, float(n)).value
            rec["support_radius"] = R
            rec["norm_n"] = ln
            rec["endpoint_pass"] = bool(R <= ENDPOINT_CONSTANT * ln)
            rec["pass"] = rec["pass"] and rec["endpoint_pass"]
        lp = np.log(prof.ps)
        if len(lp) > 1:
            rec["loglog_slope"] = float(np.polyfit(lp, np.log(prof.values), 1)[0])
        out.append(rec)
    sups = [d["sup_ratio"] for d in out]
    infs = [d["inf_ratio"] for d in out]
    return Certification(
        out,
        float(max(sups)) if sups else float("nan"),
        float(min(infs)) if infs else float("nan"),
        all(d["pass"] for d in out),
        tuple(band),
    )
