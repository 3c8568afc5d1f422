"""Catalog of convex bodies: membership, normalization, support functions and
closed-form one-dimensional marginals.

Every body is stored as an affine image of a *raw* reference body::

    x = scale * (y - center_shift),    y in the raw body

Raw references: cube ``[-1, 1]^n``, Euclidean ball ``B_2^n``, ``B_p^n``, the
corner simplex ``conv(0, e_1, ..., e_n)``, the cone
``{(y, s): 0 <= s <= h, y in (1 - s/h) L}`` over an (n-1)-dimensional body L,
and a polytope ``{y : A y <= b}``. ``make_body`` always centers; with
``normalization="volume_one"`` it then scales to unit volume.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np
from scipy.special import gammaln

from . import rng
from .errors import DimensionMismatch, InvalidParam, Unsupported


class BodyKind(str, Enum):
    CUBE = "cube"
    BALL = "ball"
    LP_BALL = "lp_ball"
    SIMPLEX = "simplex"
    CONE = "cone"
    POLYTOPE = "polytope"


class Normalization(str, Enum):
    VOLUME_ONE = "volume_one"
    RAW = "raw"


_ALIASES = {
    "cube": BodyKind.CUBE,
    "ball": BodyKind.BALL,
    "euclidean_ball": BodyKind.BALL,
    "euclideanball": BodyKind.BALL,
    "lp_ball": BodyKind.LP_BALL,
    "lpball": BodyKind.LP_BALL,
    "l1_ball": BodyKind.LP_BALL,
    "simplex": BodyKind.SIMPLEX,
    "cone": BodyKind.CONE,
    "polytope": BodyKind.POLYTOPE,
    "oracle_polytope": BodyKind.POLYTOPE,
    "oraclepolytope": BodyKind.POLYTOPE,
}

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BodySpec:
    """Immutable description of a centered convex body."""

    kind: BodyKind
    n: int
    params: dict = field(default_factory=dict)
    normalization: Normalization = Normalization.VOLUME_ONE
    center_shift: np.ndarray = field(default=None, repr=False)
    scale: float = 1.0
    volume: float = 1.0
    base: "BodySpec | None" = None
    raw_halfspaces: tuple | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        params = dict(self.params)
        if self.kind is BodyKind.CONE:
            params["base"] = self.base.to_dict()
        if self.kind is BodyKind.POLYTOPE:
            A, b = self.raw_halfspaces
            params["halfspaces"] = [
                {"normal": [float(v) for v in a], "offset": float(o)} for a, o in zip(A, b)
            ]
        params.pop("_meta", None)
        return {
            "kind": self.kind.value,
            "n": self.n,
            "params": params,
            "normalization": self.normalization.value,
        }

    @property
    def meta(self) -> dict:
        return self.params.get("_meta", {})

    @property
    def height(self) -> float:
        """Cone height in body coordinates."""
        return self.scale * self.params["height"]

    def __repr__(self):
        extra = {k: v for k, v in self.params.items() if k not in ("_meta", "halfspaces")}
        return f"BodySpec({self.kind.value}, n={self.n}, {extra}, scale={self.scale:.6g})"


# --------------------------------------------------------------------------
# construction


def _log_ball_volume(n: int) -> float:
    return 0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0)


def _log_lp_volume(n: int, p: float) -> float:
    if p == 2.0:
        return _log_ball_volume(n)
    return n * math.log(2.0 * math.exp(gammaln(1.0 + 1.0 / p))) - gammaln(1.0 + n / p)


def body_from_dict(doc: dict) -> BodySpec:
    """Inverse of :meth:`BodySpec.to_dict` (also the CLI body-file schema)."""
    if not isinstance(doc, dict) or "kind" not in doc or "n" not in doc:
        raise InvalidParam("body document needs 'kind' and 'n'")
    params = dict(doc.get("params", {}))
    return make_body(
        doc["kind"], int(doc["n"]), params, normalization=doc.get("normalization", "volume_one")
    )


def load_body(path) -> BodySpec:
    with open(path) as fh:
        return body_from_dict(json.load(fh))


def make_body(kind, n: int, params: dict | None = None, normalization="volume_one", **kw) -> BodySpec:
    """Build a centered body of the given kind.

    ``params`` per kind: ``lp_ball`` needs ``p`` (>= 1, ``inf`` gives the cube);
    ``cone`` takes ``base`` (BodySpec or body dict of dimension n-1, default
    the cube) and optional ``height`` (default: raw volume one);
    ``polytope`` takes ``halfspaces`` as a list of ``{"normal", "offset"}`` or
    ``(normal, offset)`` plus optional ``samples``/``seed`` for the Monte Carlo
    volume and centroid.
    """
    params = dict(params or {})
    params.update(kw)
    if isinstance(kind, BodyKind):
        kind_e = kind
    else:
        key = str(kind).lower().replace("-", "_")
        if key not in _ALIASES:
            raise InvalidParam(f"unknown body kind {kind!r}")
        kind_e = _ALIASES[key]
    if isinstance(kind, str) and kind.lower() == "l1_ball":
        params.setdefault("p", 1.0)
    norm = Normalization(normalization)
    n = int(n)
    if n < 1:
        raise InvalidParam("dimension must be >= 1")

    base = None
    halfspaces = None
    center = np.zeros(n)
    meta: dict[str, Any] = {}

    if kind_e is BodyKind.LP_BALL:
        p = float(params.get("p", 2.0))
        if not p >= 1.0:
            raise InvalidParam(f"lp_ball needs p >= 1, got {p}")
        if math.isinf(p):
            kind_e = BodyKind.CUBE
            params = {}
        elif p == 2.0:
            kind_e = BodyKind.BALL
            params = {}
        else:
            params = {"p": p}

    if kind_e is BodyKind.CUBE:
        params = {}
        log_vol = n * math.log(2.0)
        halfspaces = (np.vstack([np.eye(n), -np.eye(n)]), np.ones(2 * n))
    elif kind_e is BodyKind.BALL:
        params = {}
        log_vol = _log_ball_volume(n)
    elif kind_e is BodyKind.LP_BALL:
        log_vol = _log_lp_volume(n, params["p"])
    elif kind_e is BodyKind.SIMPLEX:
        params = {}
        log_vol = -gammaln(n + 1.0)
        center = np.full(n, 1.0 / (n + 1))
        halfspaces = (np.vstack([-np.eye(n), np.ones((1, n))]), np.r_[np.zeros(n), 1.0])
    elif kind_e is BodyKind.CONE:
        if n < 2:
            raise InvalidParam("cone needs n >= 2")
        b = params.get("base")
        if b is None:
            base = make_body("cube", n - 1)
        elif isinstance(b, BodySpec):
            base = b
        else:
            base = body_from_dict(b)
        if base.n != n - 1:
            raise InvalidParam(f"cone base must have dimension {n - 1}, got {base.n}")
        h = params.get("height")
        h = float(n / base.volume) if h is None else float(h)
        if not h > 0:
            raise InvalidParam("cone height must be > 0")
        params = {"height": h}
        log_vol = math.log(h * base.volume / n)
        center = np.zeros(n)
        center[-1] = h / (n + 1)
        bh = halfspaces_of(base)
        if bh is not None:
            Ab, bb = bh
            A = np.zeros((Ab.shape[0] + 2, n))
            A[: Ab.shape[0], : n - 1] = Ab
            A[: Ab.shape[0], -1] = bb / h
            A[-2, -1] = -1.0
            A[-1, -1] = 1.0
            halfspaces = (A, np.r_[bb, 0.0, h])
    elif kind_e is BodyKind.POLYTOPE:
        A, b = _parse_halfspaces(params.get("halfspaces"), n)
        log_vol, center, meta = _polytope_volume_centroid(
            A, b, int(params.get("samples", 200_000)), int(params.get("seed", 0))
        )
        params = {k: v for k, v in params.items() if k in ("samples", "seed")}
        halfspaces = (A, b)
    else:  # pragma: no cover
        raise InvalidParam(str(kind_e))

    if norm is Normalization.VOLUME_ONE:
        scale = math.exp(-log_vol / n)
        volume = 1.0
    else:
        scale = 1.0
        volume = math.exp(log_vol)
    if meta:
        params["_meta"] = meta
    center.setflags(write=False)
    return BodySpec(
        kind=kind_e,
        n=n,
        params=params,
        normalization=norm,
        center_shift=center,
        scale=scale,
        volume=volume,
        base=base,
        raw_halfspaces=halfspaces,
    )


def _parse_halfspaces(hs, n):
    if not hs:
        raise InvalidParam("polytope needs at least one halfspace")
    normals, offsets = [], []
    for h in hs:
        if isinstance(h, dict):
            a, o = h["normal"], h["offset"]
        else:
            a, o = h
        a = np.asarray(a, dtype=float)
        if a.shape != (n,):
            raise DimensionMismatch(f"halfspace normal has shape {a.shape}, expected ({n},)")
        normals.append(a)
        offsets.append(float(o))
    return np.array(normals), np.array(offsets)


def _bounding_box(A, b):
    from scipy.optimize import linprog

    n = A.shape[1]
    lo, hi = np.empty(n), np.empty(n)
    for i in range(n):
        for sign, store in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(n)
            c[i] = sign
            res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
            if res.status == 2:
                raise InvalidParam("empty polytope")
            if res.status == 3:
                raise InvalidParam("unbounded polytope")
            if not res.success:
                raise InvalidParam(f"bounding-box LP failed: {res.message}")
            store[i] = sign * res.fun
    if np.any(hi - lo <= 0):
        raise InvalidParam("polytope has empty interior")
    return lo, hi


def _polytope_volume_centroid(A, b, samples, seed):
    lo, hi = _bounding_box(A, b)
    n = A.shape[1]
    inside_sum = np.zeros(n)
    count = 0
    for k, size in enumerate(rng.chunk_sizes(samples)):
        g = rng.stream(seed, rng.VOLUME, k)
        y = lo + (hi - lo) * g.random((size, n))
        ok = np.all(y @ A.T <= b, axis=1)
        count += int(ok.sum())
        inside_sum += y[ok].sum(axis=0)
    if count == 0:
        raise InvalidParam("polytope volume unresolvable (no Monte Carlo hits)")
    frac = count / samples
    box = float(np.prod(hi - lo))
    meta = {
        "volume_mc": frac * box,
        "volume_rel_se": math.sqrt((1 - frac) / (frac * samples)),
        "box_lo": lo.tolist(),
        "box_hi": hi.tolist(),
        "samples": samples,
    }
    return math.log(frac * box), inside_sum / count, meta


# --------------------------------------------------------------------------
# membership and geometry


def to_raw(body: BodySpec, x) -> np.ndarray:
    return np.asarray(x, dtype=float) / body.scale + body.center_shift


def from_raw(body: BodySpec, y) -> np.ndarray:
    return body.scale * (np.asarray(y, dtype=float) - body.center_shift)


def halfspaces_of(body: BodySpec):
    """``(A, b)`` with ``K = {x : A x <= b}`` in body coordinates, or None."""
    if body.raw_halfspaces is None:
        return None
    A, b = body.raw_halfspaces
    return A.copy(), body.scale * (b - A @ body.center_shift)


def _contains_raw(body: BodySpec, y: np.ndarray, tol: float) -> np.ndarray:
    kind = body.kind
    if kind is BodyKind.CUBE:
        return np.all(np.abs(y) <= 1.0 + tol, axis=1)
    if kind is BodyKind.BALL:
        return np.einsum("ij,ij->i", y, y) <= 1.0 + tol
    if kind is BodyKind.LP_BALL:
        return (np.abs(y) ** body.params["p"]).sum(axis=1) <= 1.0 + tol
    if kind in (BodyKind.SIMPLEX, BodyKind.POLYTOPE):
        A, b = body.raw_halfspaces
        return np.all(y @ A.T <= b + tol, axis=1)
    if kind is BodyKind.CONE:
        h = body.params["height"]
        s = y[:, -1]
        shrink = 1.0 - s / h
        ok = (s >= -tol * h) & (s <= h * (1 + tol))
        inner = np.zeros(len(y), dtype=bool)
        pos = ok & (shrink > 1e-300)
        if pos.any():
            base_pts = y[pos, :-1] / shrink[pos, None]
            inner[pos] = contains(body.base, base_pts, tol=tol / max(shrink[pos].min(), 1e-6))
        apex = ok & ~pos
        inner[apex] = np.all(np.abs(y[apex, :-1]) <= tol, axis=1)
        return inner
    raise Unsupported(kind)  # pragma: no cover


def contains(body: BodySpec, x, tol: float = MEMBERSHIP_TOL):
    """Membership test. ``x`` of shape ``(n,)`` gives a bool, ``(N, n)`` a bool array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != body.n:
        raise DimensionMismatch(f"point has dimension {pts.shape[-1]}, body has {body.n}")
    res = _contains_raw(body, to_raw(body, pts), tol)
    return bool(res[0]) if single else res


def _support_raw(body: BodySpec, theta: np.ndarray) -> float:
    kind = body.kind
    if kind is BodyKind.CUBE:
        return float(np.abs(theta).sum())
    if kind is BodyKind.BALL:
        return float(np.linalg.norm(theta))
    if kind is BodyKind.LP_BALL:
        p = body.params["p"]
        if p == 1.0:
            return float(np.abs(theta).max())
        q = p / (p - 1.0)
        return float((np.abs(theta) ** q).sum() ** (1.0 / q))
    if kind is BodyKind.SIMPLEX:
        return float(max(0.0, theta.max()))
    if kind is BodyKind.CONE:
        h = body.params["height"]
        return max(support(body.base, theta[:-1]), theta[-1] * h)
    if kind is BodyKind.POLYTOPE:
        from scipy.optimize import linprog

        A, b = body.raw_halfspaces
        res = linprog(-theta, A_ub=A, b_ub=b, bounds=[(None, None)] * body.n, method="highs")
        return float(-res.fun)
    raise Unsupported(kind)  # pragma: no cover


def support(body: BodySpec, theta) -> float:
    """Support function ``h_K(theta) = max_{x in K} <x, theta>``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (body.n,):
        raise DimensionMismatch(f"direction has shape {theta.shape}, body has n={body.n}")
    return body.scale * (_support_raw(body, theta) - float(theta @ body.center_shift))


def support_radius(body: BodySpec, theta) -> float:
    """``max_{x in K} |<x, theta>|``."""
    theta = np.asarray(theta, dtype=float)
    return max(support(body, theta), support(body, -theta))


def euclid_reach(body: BodySpec) -> float:
    """An upper bound on ``max_{x in K} |x|`` (used as the bisection bracket)."""
    kind = body.kind
    n = body.n
    c = float(np.linalg.norm(body.center_shift))
    if kind is BodyKind.CUBE:
        r = math.sqrt(n)
    elif kind is BodyKind.BALL:
        r = 1.0
    elif kind is BodyKind.LP_BALL:
        p = body.params["p"]
        r = max(1.0, n ** (0.5 - 1.0 / p))
    elif kind is BodyKind.SIMPLEX:
        r = 1.0
    elif kind is BodyKind.CONE:
        rb = euclid_reach(body.base)
        r = math.hypot(rb, body.params["height"])
    else:
        lo = np.array(body.meta["box_lo"])
        hi = np.array(body.meta["box_hi"])
        r = float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
    return body.scale * (r + c)


# --------------------------------------------------------------------------
# marginals


@dataclass(frozen=True, eq=False)
class MarginalDensity:
    """Density of ``<X, theta>`` for X uniform on a body, supported on ``[lower, upper]``."""

    direction: np.ndarray
    lower: float
    upper: float
    logpdf: Callable[[np.ndarray], np.ndarray]
    form: str  # "closed_form" | "numerical_projection"
    meta: dict = field(default_factory=dict)
    # interior points where the density is non-smooth or peaked (quadrature hints)
    breakpoints: tuple = ()

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = (t >= self.lower) & (t <= self.upper)
        if np.any(inside):
            out[inside] = np.exp(self.logpdf(t[inside]))
        return out

    @property
    def closed_form(self) -> bool:
        return self.form == "closed_form"


def _coordinate_index(theta, tol=1e-12):
    """``(i, sign)`` when theta is +-e_i, else None."""
    i = int(np.argmax(np.abs(theta)))
    if abs(abs(theta[i]) - 1.0) <= tol and np.all(np.abs(np.delete(theta, i)) <= tol):
        return i, float(np.sign(theta[i]))
    return None


def _affine_density(theta, a, b, logpdf_raw, scale, shift, sign, form="closed_form", bp=()):
    """Density of ``sign * scale * (U - shift)`` where U has log-density ``logpdf_raw`` on [a, b]."""
    lo, hi = sign * scale * (a - shift), sign * scale * (b - shift)
    if lo > hi:
        lo, hi = hi, lo
    log_jac = math.log(scale)

    def logpdf(t):
        u = sign * np.asarray(t, dtype=float) / scale + shift
        return logpdf_raw(u) - log_jac

    bps = tuple(sorted(sign * scale * (x - shift) for x in bp))
    return MarginalDensity(np.array(theta), lo, hi, logpdf, form, {}, bps)


def _beta_like(n):
    """log-density of ``n (1 - u)^(n-1)`` on [0, 1]."""

    def f(u):
        u = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return math.log(n) + (n - 1) * np.log1p(-u)

    return f


def closed_form_marginal(body: BodySpec, theta) -> MarginalDensity | None:
    """Closed-form marginal density or None when the pair has none."""
    theta = np.asarray(theta, dtype=float)
    n = body.n
    kind = body.kind
    coord = _coordinate_index(theta)
    s = body.scale
    log_raw_vol = math.log(body.volume) - n * math.log(s)

    if kind is BodyKind.BALL or (kind is BodyKind.LP_BALL and coord is not None):
        p = 2.0 if kind is BodyKind.BALL else body.params["p"]
        log_section = _log_lp_volume(n - 1, p) if n > 1 else 0.0

        def raw(u):
            u = np.abs(np.asarray(u, dtype=float))
            with np.errstate(divide="ignore", invalid="ignore"):
                inner = np.maximum(1.0 - u**p, 0.0)
                body_part = ((n - 1) / p) * np.log(inner) if n > 1 else 0.0 * u
                return log_section + body_part - log_raw_vol

        sign = coord[1] if coord is not None else 1.0
        return _affine_density(theta, -1.0, 1.0, raw, s, 0.0, sign)

    if kind is BodyKind.CUBE and coord is not None:

        def raw(u):
            return np.full(np.shape(u), -math.log(2.0))

        return _affine_density(theta, -1.0, 1.0, raw, s, 0.0, 1.0)

    if kind is BodyKind.SIMPLEX:
        c = 1.0 / (n + 1)
        if coord is not None:
            return _affine_density(theta, 0.0, 1.0, _beta_like(n), s, c, coord[1], bp=(c,))
        ones = np.full(n, 1.0 / math.sqrt(n))
        for sign in (1.0, -1.0):
            if np.allclose(theta, sign * ones, atol=1e-12, rtol=0):
                # <y, 1/sqrt(n)> = u / sqrt(n) with u = sum(y) of density n u^(n-1)
                def raw(v, _n=n):
                    u = np.clip(np.asarray(v) * math.sqrt(_n), 0.0, 1.0)
                    with np.errstate(divide="ignore"):
                        return math.log(_n) + (_n - 1) * np.log(u) + 0.5 * math.log(_n)

                return _affine_density(
                    theta, 0.0, 1.0 / math.sqrt(n), raw, s, n * c / math.sqrt(n), sign,
                    bp=(n * c / math.sqrt(n),),
                )
        return None

    if kind is BodyKind.CONE and coord is not None and coord[0] == n - 1:
        h = body.params["height"]
        c = h / (n + 1)
        f01 = _beta_like(n)

        def raw(sv):
            return f01(np.asarray(sv) / h) - math.log(h)

        return _affine_density(theta, 0.0, h, raw, s, c, coord[1], bp=(c,))
    return None


def marginal_density(
    body: BodySpec, theta, samples: int = 50_000, seed: int = 0, allow_numerical: bool = True
) -> MarginalDensity:
    """Marginal of the uniform measure on ``body`` along the unit vector ``theta``.

    Closed forms: any direction of the ball, coordinate directions of the cube
    and of l_p balls, coordinate and diagonal directions of the simplex, the
    cone axis. Otherwise a Gaussian kernel density estimate from a uniform
    sample (Silverman bandwidth, recorded in ``meta``).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (body.n,):
        raise DimensionMismatch(f"direction has shape {theta.shape}, body has n={body.n}")
    nrm = np.linalg.norm(theta)
    if not abs(nrm - 1.0) < 1e-9:
        raise InvalidParam("direction must be a unit vector")
    md = closed_form_marginal(body, theta)
    if md is not None:
        return md
    if not allow_numerical:
        raise Unsupported(f"no closed-form marginal for {body.kind.value} along this direction")
    from scipy.stats import gaussian_kde

    from .sampling import sample_uniform

    z = sample_uniform(body, samples, seed).points @ theta
    kde = gaussian_kde(z, bw_method="silverman")
    bw = float(np.sqrt(kde.covariance[0, 0]))
    lo, hi = float(z.min() - 8 * bw), float(z.max() + 8 * bw)

    def logpdf(t):
        return kde.logpdf(np.atleast_1d(t))

    return MarginalDensity(
        theta, lo, hi, logpdf, "numerical_projection",
        {"bandwidth": bw, "bandwidth_rule": "silverman", "samples": samples, "seed": seed},
    )
