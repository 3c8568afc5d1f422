"""Hot numeric loops.

Kernels exist twice: a numba-compiled loop and a vectorised numpy version.
``subgauss._accel`` decides whether numba is active; the dispatchers below
then pick the compiled loop except where the benchmark showed numpy to be
faster. The numpy versions are always importable under ``*_numpy`` so tests
and the benchmark can compare the two paths directly.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit


def batch_bounds(n_items: int, n_batches: int) -> np.ndarray:
    """Fixed batch boundaries ``[0, ..., n_items]`` (independent of worker count)."""
    n_batches = max(1, min(n_batches, n_items))
    return (np.arange(n_batches + 1, dtype=np.int64) * n_items) // n_batches


# --------------------------------------------------------------------------
# log-space power sums


def batch_logsumexp_numpy(logv, exponents, bounds):
    logv = np.asarray(logv, dtype=np.float64)
    exponents = np.asarray(exponents, dtype=np.float64)
    nb = len(bounds) - 1
    out = np.empty((exponents.size, nb))
    for j, p in enumerate(exponents):
        w = p * logv
        for b in range(nb):
            seg = w[bounds[b]:bounds[b + 1]]
            m = seg.max()
            if not np.isfinite(m):
                out[j, b] = m
                continue
            out[j, b] = m + np.log(np.exp(seg - m).sum())
    return out


def batch_logsumexp(logv, exponents, bounds):
    """``out[j, b] = log sum_{i in batch b} exp(exponents[j] * logv[i])``.

    Max-subtracted per batch, so orders up to several hundred (and negative
    orders) never overflow. Only a numpy version exists: its vectorised exp
    beat a compiled scalar loop by about 2x in the benchmark.
    """
    return batch_logsumexp_numpy(logv, np.atleast_1d(exponents), bounds)


# --------------------------------------------------------------------------
# hit-and-run on {x : A x <= b}


def har_polytope_numpy(A, b, x, dirs, us, thin):
    x = np.array(x, dtype=np.float64)
    steps, n = dirs.shape
    out = np.empty((steps // thin, n))
    slack = b - A @ x
    k = 0
    for s in range(steps):
        d = dirs[s] / np.sqrt(dirs[s] @ dirs[s])
        ad = A @ d
        with np.errstate(divide="ignore"):
            ratio = slack / ad
        pos = ad > 0
        neg = ad < 0
        tmax = ratio[pos].min() if pos.any() else 0.0
        tmin = ratio[neg].max() if neg.any() else 0.0
        t = tmin + us[s] * (tmax - tmin)
        x += t * d
        slack -= t * ad
        if (s + 1) % 64 == 0:
            slack = b - A @ x
        if (s + 1) % thin == 0:
            out[k] = x
            k += 1
    return out, x


@njit
def _har_polytope_jit(A, b, x0, dirs, us, thin):
    m, n = A.shape
    steps = dirs.shape[0]
    out = np.empty((steps // thin, n))
    x = x0.copy()
    slack = b - A @ x
    d = np.empty(n)
    ad = np.empty(m)
    k = 0
    for s in range(steps):
        nrm = 0.0
        for i in range(n):
            nrm += dirs[s, i] * dirs[s, i]
        nrm = math.sqrt(nrm)
        for i in range(n):
            d[i] = dirs[s, i] / nrm
        tmax = np.inf
        tmin = -np.inf
        for r in range(m):
            acc = 0.0
            for i in range(n):
                acc += A[r, i] * d[i]
            ad[r] = acc
            if acc > 0.0:
                q = slack[r] / acc
                if q < tmax:
                    tmax = q
            elif acc < 0.0:
                q = slack[r] / acc
                if q > tmin:
                    tmin = q
        if not np.isfinite(tmax):
            tmax = 0.0
        if not np.isfinite(tmin):
            tmin = 0.0
        t = tmin + us[s] * (tmax - tmin)
        for i in range(n):
            x[i] += t * d[i]
        if (s + 1) % 64 == 0:
            for r in range(m):
                acc = 0.0
                for i in range(n):
                    acc += A[r, i] * x[i]
                slack[r] = b[r] - acc
        else:
            for r in range(m):
                slack[r] -= t * ad[r]
        if (s + 1) % thin == 0:
            out[k] = x
            k += 1
    return out, x


def har_polytope(A, b, x, dirs, us, thin):
    """Run ``len(us)`` hit-and-run steps in a halfspace polytope.

    ``dirs`` are unnormalised Gaussian rows, ``us`` uniforms on [0, 1). Returns
    every ``thin``-th state and the final state.
    """
    args = (
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(dirs, dtype=np.float64),
        np.ascontiguousarray(us, dtype=np.float64),
        int(thin),
    )
    if HAVE_NUMBA:
        return _har_polytope_jit(*args)
    return har_polytope_numpy(*args)


# --------------------------------------------------------------------------
# hit-and-run on r * B_p^n (chord by bisection, Euclidean ball closed form)


def _lp_inside(y, p, r):
    if p == 2.0:
        return (y @ y) <= r * r
    return (np.abs(y / r) ** p).sum() <= 1.0


def har_lpball_numpy(p, r, x, dirs, us, thin, reach, tol):
    x = np.array(x, dtype=np.float64)
    steps, n = dirs.shape
    out = np.empty((steps // thin, n))
    k = 0
    for s in range(steps):
        d = dirs[s] / np.sqrt(dirs[s] @ dirs[s])
        if p == 2.0:
            xd = x @ d
            disc = math.sqrt(max(xd * xd - (x @ x - r * r), 0.0))
            tmax, tmin = -xd + disc, -xd - disc
        else:
            ends = []
            for sign in (1.0, -1.0):
                lo, hi = 0.0, reach
                while hi - lo > tol:
                    mid = 0.5 * (lo + hi)
                    if _lp_inside(x + sign * mid * d, p, r):
                        lo = mid
                    else:
                        hi = mid
                ends.append(sign * lo)
            tmax, tmin = ends
        x += (tmin + us[s] * (tmax - tmin)) * d
        if (s + 1) % thin == 0:
            out[k] = x
            k += 1
    return out, x


@njit
def _lp_inside_jit(x, d, t, p, r):
    n = x.shape[0]
    acc = 0.0
    if p == 2.0:
        for i in range(n):
            y = x[i] + t * d[i]
            acc += y * y
        return acc <= r * r
    for i in range(n):
        acc += abs((x[i] + t * d[i]) / r) ** p
    return acc <= 1.0


@njit
def _har_lpball_jit(p, r, x0, dirs, us, thin, reach, tol):
    steps, n = dirs.shape
    out = np.empty((steps // thin, n))
    x = x0.copy()
    d = np.empty(n)
    k = 0
    for s in range(steps):
        nrm = 0.0
        for i in range(n):
            nrm += dirs[s, i] * dirs[s, i]
        nrm = math.sqrt(nrm)
        for i in range(n):
            d[i] = dirs[s, i] / nrm
        if p == 2.0:
            xd = 0.0
            xx = 0.0
            for i in range(n):
                xd += x[i] * d[i]
                xx += x[i] * x[i]
            disc = math.sqrt(max(xd * xd - (xx - r * r), 0.0))
            tmax = -xd + disc
            tmin = -xd - disc
        else:
            lo = 0.0
            hi = reach
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _lp_inside_jit(x, d, mid, p, r):
                    lo = mid
                else:
                    hi = mid
            tmax = lo
            lo = 0.0
            hi = reach
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _lp_inside_jit(x, d, -mid, p, r):
                    lo = mid
                else:
                    hi = mid
            tmin = -lo
        t = tmin + us[s] * (tmax - tmin)
        for i in range(n):
            x[i] += t * d[i]
        if (s + 1) % thin == 0:
            out[k] = x
            k += 1
    return out, x


def har_lpball(p, r, x, dirs, us, thin, reach, tol=1e-12):
    """Hit-and-run in ``r * B_p^n``; ``reach`` must exceed the Euclidean diameter."""
    args = (
        float(p),
        float(r),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(dirs, dtype=np.float64),
        np.ascontiguousarray(us, dtype=np.float64),
        int(thin),
        float(reach),
        float(tol),
    )
    if HAVE_NUMBA:
        return _har_lpball_jit(*args)
    return har_lpball_numpy(*args)


# --------------------------------------------------------------------------
# marginal L^p norms for many directions over one sample


def projected_lp_norms_numpy(X, Y, p, block=256):
    X = np.asarray(X, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    out = np.empty(len(Y))
    for a in range(0, len(Y), block):
        A = np.abs(X @ Y[a:a + block].T)
        m = A.max(axis=0)
        m[m == 0] = 1.0
        A /= m
        with np.errstate(divide="ignore"):
            P = np.exp(p * np.log(A))
        out[a:a + block] = m * P.mean(axis=0) ** (1.0 / p)
    return out


@njit
def _projected_lp_norms_jit(X, Y, p):
    N, n = X.shape
    k = Y.shape[0]
    out = np.empty(k)
    ip = int(p)
    integer = ip == p and ip <= 64
    for j in range(k):
        m = 0.0
        s = 0.0
        for i in range(N):
            z = 0.0
            for c in range(n):
                z += X[i, c] * Y[j, c]
            z = abs(z)
            if z > m:
                # rescale the running sum to the new maximum
                if m > 0.0:
                    r = m / z
                    s *= r**ip if integer else r**p
                m = z
                s += 1.0
            elif z > 0.0:
                r = z / m
                s += r**ip if integer else r**p
        out[j] = m * (s / N) ** (1.0 / p) if m > 0.0 else 0.0
    return out


def projected_lp_norms(X, Y, p):
    """``(mean_i |<X_i, y>|^p)^(1/p)`` for every row y of ``Y``, overflow-safe."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(np.atleast_2d(Y), dtype=np.float64)
    p = float(p)
    # the compiled loop wins for integer orders; fractional powers vectorise better in numpy
    if HAVE_NUMBA and p.is_integer():
        return _projected_lp_norms_jit(X, Y, p)
    return projected_lp_norms_numpy(X, Y, p)
