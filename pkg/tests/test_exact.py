import math

import numpy as np
import pytest
from scipy import integrate

from subgauss.bodies import closed_form_marginal, make_body
from subgauss.exact import body_moments, exact_lp_norm, supports_exact
from subgauss.moments import quad_lp_norm
from subgauss.sampling import sample_uniform


@pytest.mark.parametrize("k", [2, 4, 6, 8])
def test_cube_coordinate(k):
    b = make_body("cube", 4)
    assert exact_lp_norm(b, np.eye(4)[0], k) == pytest.approx(0.5 * (k + 1) ** (-1 / k), rel=1e-14)


def test_cube_diagonal_fourth_moment():
    # sum of n uniforms / sqrt(n): E S^4 = n mu4 + 3 n (n-1) sigma^4
    n = 5
    th = np.ones(n) / math.sqrt(n)
    m4 = (n / 80 + 3 * n * (n - 1) / 144) / n**2
    assert body_moments(make_body("cube", n), th, 4)[4] == pytest.approx(m4, rel=1e-14)


@pytest.mark.parametrize("kind,params", [("ball", {}), ("lp_ball", {"p": 1.0}), ("lp_ball", {"p": 3.0}),
                                         ("simplex", {}), ("cone", {})])
@pytest.mark.parametrize("k", [2, 6])
def test_matches_quadrature_on_coordinates(kind, params, k):
    n = 6
    b = make_body(kind, n, params)
    for th in (np.eye(n)[0], np.eye(n)[n - 1]):
        md = closed_form_marginal(b, th)
        if md is None:
            # cone base directions: compare with a large sample instead
            X = sample_uniform(b, 400_000, seed=k).points @ th
            z = np.abs(X) ** k
            se = z.std() / np.sqrt(z.size)
            assert abs(exact_lp_norm(b, th, k) ** k - z.mean()) < 4 * se
            continue
        assert exact_lp_norm(b, th, k) == pytest.approx(quad_lp_norm(md, k).value, rel=1e-8)


def test_first_moment_vanishes_for_centered_bodies():
    g = np.random.default_rng(0)
    for kind in ("cube", "ball", "simplex", "cone"):
        b = make_body(kind, 5)
        th = g.standard_normal(5)
        th /= np.linalg.norm(th)
        m = body_moments(b, th, 2)
        assert m[0] == pytest.approx(1.0, abs=1e-15)
        assert abs(m[1]) < 1e-14


def test_two_dimensional_ball_by_integration():
    b = make_body("ball", 2)
    r = 1 / math.sqrt(math.pi)
    th = np.array([0.6, 0.8])
    # marginal of the disc of radius r: density (2/pi r^2) sqrt(r^2 - t^2)
    m4, _ = integrate.quad(lambda t: t**4 * 2 / (math.pi * r * r) * math.sqrt(r * r - t * t), -r, r)
    assert body_moments(b, th, 4)[4] == pytest.approx(m4, rel=1e-10)


def test_odd_orders_rejected_and_polytope_unsupported():
    with pytest.raises(ValueError):
        exact_lp_norm(make_body("cube", 3), np.eye(3)[0], 3)
    assert supports_exact(make_body("cone", 3))
    hs = [{"normal": [1, 0], "offset": 1}, {"normal": [-1, 0], "offset": 1},
          {"normal": [0, 1], "offset": 1}, {"normal": [0, -1], "offset": 1}]
    assert not supports_exact(make_body("polytope", 2, {"halfspaces": hs}))


def test_high_order_stays_finite():
    n = 60
    v = exact_lp_norm(make_body("cube", n), np.ones(n) / math.sqrt(n), n)
    assert np.isfinite(v) and 0.288 < v < 0.5 * math.sqrt(n)
