"""Exact integer moments of ``<X, theta>`` for X uniform on a catalog body.

Each body is written as a ratio or mixture of independent pieces whose
moments are known in closed form:

* cube: a sum of independent uniforms;
* l_p ball: ``g / Z^(1/p)`` with g having density ``exp(-|t|^p)`` coordinatewise,
  independent of ``Z ~ Gamma(n/p + 1)``;
* simplex: ``(E_1..E_n) / S`` with i.i.d. exponentials, independent of
  ``S ~ Gamma(n + 1)``;
* cone: ``(V * B, h (1 - V))`` with ``V ~ Beta(n, 1)`` independent of B
  uniform on the base.

Sums of independent variables are handled by binomial convolution of moment
sequences in mpmath at 60 digits, so the even moments come out exact to
double precision for every direction, not only for coordinate ones.
"""
from __future__ import annotations

import mpmath as mp
import numpy as np

from .bodies import BodyKind, BodySpec
from .errors import Unsupported

_DPS = 60


def _convolve(ma, mb, kmax):
    out = []
    for k in range(kmax + 1):
        acc = mp.mpf(0)
        for j in range(k + 1):
            if ma[j] and mb[k - j]:
                acc += mp.binomial(k, j) * ma[j] * mb[k - j]
        out.append(acc)
    return out


def _scaled(m, c):
    c = mp.mpf(c)
    return [mk * c**k for k, mk in enumerate(m)]


def _sum_of_independent(coeffs, unit_moments, kmax):
    """Moments of ``sum_i c_i U_i`` where U_i are i.i.d. with moments ``unit_moments``."""
    acc = [mp.mpf(1)] + [mp.mpf(0)] * kmax
    for c in coeffs:
        if c == 0:
            continue
        acc = _convolve(acc, _scaled(unit_moments, c), kmax)
    return acc


def _shift(m, a, kmax):
    """Moments of ``U - a`` from moments of U."""
    a = mp.mpf(a)
    out = []
    for k in range(kmax + 1):
        out.append(mp.fsum(mp.binomial(k, j) * m[j] * (-a) ** (k - j) for j in range(k + 1)))
    return out


def _raw_moments(body: BodySpec, theta, kmax):
    n = body.n
    th = [mp.mpf(float(t)) for t in theta]
    kind = body.kind
    if kind is BodyKind.CUBE:
        unit = [mp.mpf(1) / (j + 1) if j % 2 == 0 else mp.mpf(0) for j in range(kmax + 1)]
        return _sum_of_independent(th, unit, kmax)
    if kind in (BodyKind.BALL, BodyKind.LP_BALL):
        p = mp.mpf(2) if kind is BodyKind.BALL else mp.mpf(body.params["p"])
        unit = [mp.gamma((j + 1) / p) / mp.gamma(1 / p) if j % 2 == 0 else mp.mpf(0)
                for j in range(kmax + 1)]
        num = _sum_of_independent(th, unit, kmax)
        a = n / p + 1
        return [num[k] * mp.gamma(a) / mp.gamma(a + k / p) for k in range(kmax + 1)]
    if kind is BodyKind.SIMPLEX:
        unit = [mp.factorial(j) for j in range(kmax + 1)]
        num = _sum_of_independent(th, unit, kmax)
        return [num[k] * mp.gamma(n + 1) / mp.gamma(n + 1 + k) for k in range(kmax + 1)]
    if kind is BodyKind.CONE:
        h = mp.mpf(body.params["height"])
        base_m = body_moments(body.base, np.asarray(theta[:-1], dtype=float), kmax, _mp=True)
        tau = th[-1]
        out = []
        for k in range(kmax + 1):
            acc = mp.mpf(0)
            for j in range(k + 1):
                if not base_m[j]:
                    continue
                b = k - j
                # E[V^j (tau h (1 - V))^b], V ~ Beta(n, 1)
                ev = (n * mp.gamma(n + j) * mp.gamma(b + 1) / mp.gamma(n + j + b + 1)) * (tau * h) ** b
                acc += mp.binomial(k, j) * base_m[j] * ev
            out.append(acc)
        return out
    raise Unsupported(f"no exact moments for {kind.value}")


def body_moments(body: BodySpec, theta, kmax: int, _mp: bool = False):
    """``[E <X, theta>^k for k = 0..kmax]`` for X uniform on ``body``."""
    with mp.workdps(_DPS):
        theta = np.asarray(theta, dtype=float)
        raw = _raw_moments(body, theta, kmax)
        a = float(theta @ body.center_shift)
        m = _scaled(_shift(raw, a, kmax), body.scale)
        if _mp:
            return m
        return [float(v) for v in m]


def exact_lp_norm(body: BodySpec, theta, k: int) -> float:
    """``(E|<X, theta>|^k)^(1/k)`` for an even integer k."""
    if k % 2 or k < 2:
        raise ValueError("exact moments are available for even integer orders only")
    with mp.workdps(_DPS):
        m = body_moments(body, theta, k, _mp=True)[k]
        return float(m ** (mp.mpf(1) / k))


def supports_exact(body: BodySpec) -> bool:
    if body.kind is BodyKind.CONE:
        return supports_exact(body.base)
    return body.kind is not BodyKind.POLYTOPE
