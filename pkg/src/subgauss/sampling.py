"""Uniform samplers for catalog bodies and a standard Gaussian sampler.

Points are produced chunk by chunk; chunk ``k`` reads only from its own
counter-based substream, so a batch is bit-identical for any worker count.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import kernels, rng
from .bodies import BodyKind, BodySpec, contains, euclid_reach, from_raw, halfspaces_of
from .errors import BadBurnIn, DimensionMismatch, InvalidParam, NoInteriorPoint

_BLOCK = 4096  # hit-and-run steps per generated random block


@dataclass(frozen=True)
class GaussianSource:
    n: int


@dataclass(frozen=True)
class Method:
    name: str  # "direct" | "hit_and_run"
    burn_in: int = 0
    thinning: int = 1

    def to_dict(self):
        return {"name": self.name, "burn_in": self.burn_in, "thinning": self.thinning}


DIRECT = Method("direct")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    source: BodySpec | GaussianSource
    seed: int
    method: Method = DIRECT
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# direct samplers


def _direct(body: BodySpec, g: np.random.Generator, m: int) -> np.ndarray:
    n = body.n
    kind = body.kind
    if kind is BodyKind.CUBE:
        y = g.uniform(-1.0, 1.0, size=(m, n))
    elif kind is BodyKind.BALL:
        z = g.standard_normal((m, n))
        r = g.random(m) ** (1.0 / n)
        y = z * (r / np.linalg.norm(z, axis=1))[:, None]
    elif kind is BodyKind.LP_BALL:
        p = body.params["p"]
        mag = g.standard_gamma(1.0 / p, size=(m, n))
        sign = np.where(g.random((m, n)) < 0.5, -1.0, 1.0)
        w = g.standard_exponential(m)
        y = sign * mag ** (1.0 / p) / ((mag.sum(axis=1) + w) ** (1.0 / p))[:, None]
    elif kind is BodyKind.SIMPLEX:
        e = g.standard_exponential((m, n + 1))
        y = e[:, :n] / e.sum(axis=1)[:, None]
    elif kind is BodyKind.CONE:
        h = body.params["height"]
        shrink = g.random(m) ** (1.0 / n)  # 1 - S/h ~ Beta(n, 1)
        base_pts = _direct(body.base, g, m)
        y = np.empty((m, n))
        y[:, :-1] = shrink[:, None] * base_pts
        y[:, -1] = h * (1.0 - shrink)
    else:
        raise InvalidParam(f"no direct sampler for {kind.value}; use hit_and_run")
    return from_raw(body, y)


def has_direct_sampler(body: BodySpec) -> bool:
    if body.kind is BodyKind.CONE:
        return has_direct_sampler(body.base)
    return body.kind is not BodyKind.POLYTOPE


# --------------------------------------------------------------------------
# hit-and-run


def _har_chain(body: BodySpec, g, m, burn_in, thinning):
    n = body.n
    steps = burn_in + m * thinning
    hs = halfspaces_of(body)
    x = np.zeros(n)
    out = []
    done = 0
    lp = None
    if hs is None and body.kind in (BodyKind.BALL, BodyKind.LP_BALL):
        lp = 2.0 if body.kind is BodyKind.BALL else body.params["p"]
        reach = 2.0 * euclid_reach(body) + 1.0
    while done < steps:
        blk = min(_BLOCK * thinning, steps - done)
        dirs = g.standard_normal((blk, n))
        us = g.random(blk)
        # keep thinning aligned with absolute step index after burn-in
        if hs is not None:
            pts, x = kernels.har_polytope(hs[0], hs[1], x, dirs, us, 1)
        elif lp is not None:
            pts, x = kernels.har_lpball(lp, body.scale, x, dirs, us, 1, reach)
        else:
            pts, x = _har_bisect(body, x, dirs, us)
        idx = np.arange(done, done + blk)
        keep = (idx >= burn_in) & ((idx - burn_in + 1) % thinning == 0)
        out.append(pts[keep])
        done += blk
    return np.concatenate(out)[:m]


def _har_bisect(body, x, dirs, us, tol=1e-12):
    """Generic hit-and-run step with chord endpoints found by bisection on ``contains``."""
    reach = 2.0 * euclid_reach(body) + 1.0
    x = x.copy()
    pts = np.empty_like(dirs)
    for s in range(len(us)):
        d = dirs[s] / np.linalg.norm(dirs[s])
        ends = []
        for sign in (1.0, -1.0):
            lo, hi = 0.0, reach
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if contains(body, x + sign * mid * d, tol=0.0):
                    lo = mid
                else:
                    hi = mid
            ends.append(sign * lo)
        x = x + (ends[1] + us[s] * (ends[0] - ends[1])) * d
        pts[s] = x
    return pts, x


def default_burn_in(n: int) -> int:
    return max(10 * n, 1000)


# --------------------------------------------------------------------------
# public samplers


def sample_uniform(
    body: BodySpec,
    N: int,
    seed: int = 0,
    method: str | Method = "auto",
    burn_in: int | None = None,
    thinning: int | None = None,
    workers: int | None = None,
) -> SampleBatch:
    """Draw ``N`` uniform points from ``body``.

    ``method`` is ``"direct"``, ``"hit_and_run"`` or ``"auto"`` (direct when the
    body has an exact sampler). Hit-and-run runs one chain per chunk, each
    started at the centroid with its own burn-in.
    """
    if N < 1:
        raise InvalidParam("N must be >= 1")
    if isinstance(method, Method):
        name = method.name
        burn_in = method.burn_in if burn_in is None else burn_in
        thinning = method.thinning if thinning is None else thinning
    else:
        name = method
    if name == "auto":
        name = "direct" if has_direct_sampler(body) else "hit_and_run"
    if name == "direct":
        if not has_direct_sampler(body):
            raise InvalidParam(f"no direct sampler for {body.kind.value}")
        meth = DIRECT

        def work(k, size):
            return _direct(body, rng.stream(seed, rng.SAMPLE, k), size)

    elif name in ("hit_and_run", "har"):
        burn_in = default_burn_in(body.n) if burn_in is None else int(burn_in)
        thinning = body.n if thinning is None else int(thinning)
        if burn_in < 10 * body.n:
            raise BadBurnIn(f"burn_in={burn_in} below minimum 10*n={10 * body.n}")
        if thinning < 1:
            raise InvalidParam("thinning must be >= 1")
        if not contains(body, np.zeros(body.n), tol=0.0):
            raise NoInteriorPoint("origin is not inside the (centered) body")
        meth = Method("hit_and_run", burn_in, thinning)

        def work(k, size):
            return _har_chain(body, rng.stream(seed, rng.SAMPLE, k), size, burn_in, thinning)

    else:
        raise InvalidParam(f"unknown sampling method {method!r}")

    parts = rng.map_chunks(work, rng.chunk_sizes(N), workers)
    return SampleBatch(_frozen(np.concatenate(parts)), body, int(seed), meth)


def sample_gaussian(n: int, N: int, seed: int = 0, workers: int | None = None) -> SampleBatch:
    """``N`` i.i.d. standard Gaussian vectors in R^n."""
    if n < 1 or N < 1:
        raise InvalidParam("n and N must be >= 1")

    def work(k, size):
        return rng.stream(seed, rng.GAUSSIAN, k).standard_normal((size, n))

    parts = rng.map_chunks(work, rng.chunk_sizes(N), workers)
    return SampleBatch(_frozen(np.concatenate(parts)), GaussianSource(n), int(seed), DIRECT)


def random_unit_vectors(n: int, count: int, seed: int, purpose: int = rng.DIRECTIONS) -> np.ndarray:
    z = rng.stream(seed, purpose).standard_normal((count, n))
    return z / np.linalg.norm(z, axis=1)[:, None]


# --------------------------------------------------------------------------
# validation


def effective_sample_size(x) -> float:
    """Geyer initial-positive-sequence ESS of a 1-d chain (N for i.i.d. data)."""
    x = np.asarray(x, dtype=float)
    N = x.size
    if N < 4:
        return float(N)
    x = x - x.mean()
    f = np.fft.rfft(x, 2 * N)
    acf = np.fft.irfft(f * np.conj(f))[:N]
    if acf[0] <= 0:
        return float(N)
    rho = acf / acf[0]
    tau = -1.0
    for k in range(0, N - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(min(N, N / max(tau, 1e-12)))


@dataclass
class ValidationReport:
    ks_statistics: np.ndarray
    ks_critical: np.ndarray
    ks_pvalues: np.ndarray
    mean_z: np.ndarray
    second_moment_z: np.ndarray
    z_critical: float
    flagged: list = field(default_factory=list)
    ess_reference: np.ndarray | None = None
    ess_trial: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return not self.flagged


def validate_sampler(
    body: BodySpec,
    reference: SampleBatch,
    trial: SampleBatch,
    n_directions: int = 20,
    alpha: float = 0.01,
    seed: int = 0,
) -> ValidationReport:
    """Compare two batches along random directions (two-sample KS plus first and
    second moment z-scores).

    ``alpha`` is the family-wise level: each of the ``n_directions`` tests runs
    at ``alpha / n_directions``. Hit-and-run batches are autocorrelated, so
    critical values and standard errors use each batch's effective sample size
    along the direction instead of its raw length.
    """
    if reference.n != body.n or trial.n != body.n:
        raise DimensionMismatch("batches and body must share the dimension")
    dirs = random_unit_vectors(body.n, n_directions, seed, rng.VALIDATION)
    a = reference.points @ dirs.T
    b = trial.points @ dirs.T
    level = alpha / n_directions
    c_alpha = math.sqrt(-math.log(level / 2.0) / 2.0)
    zcrit = float(stats.norm.isf(level / 2.0))

    def ess(batch, col):
        if batch.method.name == "direct":
            return float(len(col))
        return effective_sample_size(col)

    ks, pv, mz, sz, crit, ea, eb, flagged = [], [], [], [], [], [], [], []
    for j in range(n_directions):
        na, nb = ess(reference, a[:, j]), ess(trial, b[:, j])
        res = stats.ks_2samp(a[:, j], b[:, j])
        c = c_alpha * math.sqrt((na + nb) / (na * nb))
        m1 = (a[:, j].mean() - b[:, j].mean()) / math.sqrt(a[:, j].var() / na + b[:, j].var() / nb)
        a2, b2 = a[:, j] ** 2, b[:, j] ** 2
        nb2 = ess(trial, b2) if trial.method.name != "direct" else nb
        na2 = ess(reference, a2) if reference.method.name != "direct" else na
        m2 = (a2.mean() - b2.mean()) / math.sqrt(a2.var() / na2 + b2.var() / nb2)
        ks.append(res.statistic)
        pv.append(res.pvalue)
        crit.append(c)
        ea.append(na)
        eb.append(nb)
        mz.append(m1)
        sz.append(m2)
        if res.statistic > c:
            flagged.append(("ks", j, float(res.statistic)))
        if abs(m1) > zcrit:
            flagged.append(("mean", j, float(m1)))
        if abs(m2) > zcrit:
            flagged.append(("second_moment", j, float(m2)))
    return ValidationReport(np.array(ks), np.array(crit), np.array(pv), np.array(mz),
                            np.array(sz), zcrit, flagged, np.array(ea), np.array(eb))


# --------------------------------------------------------------------------
# export

_HEADER = struct.Struct("<II")


def write_batch(batch: SampleBatch | np.ndarray, path, fmt: str = "bin") -> None:
    """Write points as ``bin`` (8-byte little-endian header ``(N, n)`` as two
    uint32, then row-major little-endian float64) or ``csv``."""
    pts = batch.points if isinstance(batch, SampleBatch) else np.asarray(batch)
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(*pts.shape))
            fh.write(np.ascontiguousarray(pts, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(pts.shape[1])])
            for row in pts:
                w.writerow([repr(float(v)) for v in row])
    else:
        raise InvalidParam(f"unknown batch format {fmt!r}")


def read_batch(path, fmt: str = "bin") -> np.ndarray:
    if fmt == "bin":
        with open(path, "rb") as fh:
            N, n = _HEADER.unpack(fh.read(_HEADER.size))
            return np.frombuffer(fh.read(), dtype="<f8").reshape(N, n).copy()
    if fmt == "csv":
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    raise InvalidParam(f"unknown batch format {fmt!r}")
