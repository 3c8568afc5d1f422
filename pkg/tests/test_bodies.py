import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from subgauss.bodies import (
    BodyKind,
    body_from_dict,
    closed_form_marginal,
    contains,
    load_body,
    make_body,
    marginal_density,
    support,
    support_radius,
)
from subgauss.errors import DimensionMismatch, InvalidParam, Unsupported
from subgauss.moments import quad_lp_norm, quad_mass
from subgauss.sampling import sample_uniform

CLOSED_KINDS = [("cube", {}), ("ball", {}), ("lp_ball", {"p": 1.0}), ("lp_ball", {"p": 3.0}),
                ("simplex", {}), ("cone", {})]


def test_cube_edge_one():
    b = make_body("cube", 3)
    assert contains(b, np.array([0.49, -0.49, 0.49]))
    assert not contains(b, np.array([0.51, 0.0, 0.0]))
    assert support_radius(b, np.array([1.0, 0, 0])) == pytest.approx(0.5, abs=1e-15)


def test_ball_radius_two_d():
    b = make_body("ball", 2)
    r = 1 / math.sqrt(math.pi)
    assert support_radius(b, np.array([0.6, 0.8])) == pytest.approx(r, rel=1e-14)


def test_cone_height_three_over_unit_square():
    c = make_body("cone", 3)
    assert c.base.kind is BodyKind.CUBE
    assert c.height == pytest.approx(3.0, rel=1e-14)


def test_cone_volume_by_membership_integration():
    c = make_body("cone", 3)
    g = np.random.default_rng(11)
    lo = np.array([-1.0, -1.0, -1.0])
    hi = np.array([1.0, 1.0, 3.0])
    x = lo + (hi - lo) * g.random((400_000, 3))
    frac = contains(c, x).mean()
    vol = frac * np.prod(hi - lo)
    se = np.prod(hi - lo) * math.sqrt(frac * (1 - frac) / len(x))
    assert abs(vol - 1.0) <= 4 * se + 1e-12


def test_contains_examples():
    cube = make_body("cube", 2)
    assert contains(cube, np.zeros(2))
    assert not contains(cube, np.array([0.6, 0.0]))
    ball = make_body("ball", 2)
    assert 0.5**2 + 0.2**2 < 1 / math.pi
    assert contains(ball, np.array([0.5, 0.2]))
    with pytest.raises(DimensionMismatch):
        contains(cube, np.zeros(3))


@pytest.mark.parametrize("kind,params", [("lp_ball", {"p": 0.5}), ("cone", {"height": -1.0})])
def test_invalid_params(kind, params):
    with pytest.raises(InvalidParam):
        make_body(kind, 3, params)


def test_empty_polytope_rejected():
    hs = [{"normal": [1, 0], "offset": -1}, {"normal": [-1, 0], "offset": -1},
          {"normal": [0, 1], "offset": 1}, {"normal": [0, -1], "offset": 1}]
    with pytest.raises(InvalidParam):
        make_body("polytope", 2, {"halfspaces": hs})


def test_polytope_rectangle_centered_and_unit_volume():
    # raw body [-1,1] x [0,2]: volume 4, centroid (0, 1)
    hs = [{"normal": [1, 0], "offset": 1}, {"normal": [-1, 0], "offset": 1},
          {"normal": [0, 1], "offset": 2}, {"normal": [0, -1], "offset": 0}]
    p = make_body("polytope", 2, {"halfspaces": hs})
    assert p.meta["volume_mc"] == pytest.approx(4.0, rel=1e-2)
    assert p.scale == pytest.approx(0.5, rel=1e-2)
    assert np.allclose(p.center_shift, [0.0, 1.0], atol=1e-2)


@pytest.mark.parametrize("kind,params", CLOSED_KINDS)
def test_volume_one_by_monte_carlo(kind, params):
    n = 3
    b = make_body(kind, n, params)
    R = max(support_radius(b, e) for e in np.vstack([np.eye(n), -np.eye(n)]))
    g = np.random.default_rng(3)
    x = g.uniform(-R, R, (400_000, n))
    frac = contains(b, x).mean()
    vol = frac * (2 * R) ** n
    se = (2 * R) ** n * math.sqrt(frac * (1 - frac) / len(x))
    assert abs(vol - 1.0) <= 4 * se + 1e-12


@pytest.mark.parametrize("kind,params", CLOSED_KINDS)
def test_centered(kind, params):
    b = make_body(kind, 4, params)
    pts = sample_uniform(b, 200_000, seed=5).points
    se = pts.std(axis=0) / math.sqrt(len(pts))
    assert np.all(np.abs(pts.mean(axis=0)) < 4.5 * se)


def test_lp_volume_log_space_large_n():
    b = make_body("lp_ball", 400, {"p": 1.5})
    assert np.isfinite(b.scale) and b.scale > 0


def test_cube_marginal_is_uniform():
    md = marginal_density(make_body("cube", 5), np.eye(5)[0])
    assert md.closed_form
    assert (md.lower, md.upper) == (-0.5, 0.5)
    assert np.allclose(md.pdf(np.array([-0.3, 0.0, 0.4])), 1.0)


@pytest.mark.parametrize("p", [1, 2, 4, 8])
def test_cube_coordinate_norm_quadrature(p):
    md = closed_form_marginal(make_body("cube", 7), np.eye(7)[2])
    assert quad_lp_norm(md, p).value == pytest.approx(0.5 * (p + 1) ** (-1 / p), abs=1e-8)


@pytest.mark.parametrize("kind,params", CLOSED_KINDS)
def test_closed_form_marginals_integrate_to_one(kind, params):
    n = 6
    b = make_body(kind, n, params)
    dirs = [np.eye(n)[0], -np.eye(n)[n - 1]]
    if kind == "ball":
        dirs.append(np.ones(n) / math.sqrt(n))
    if kind == "simplex":
        dirs.append(np.ones(n) / math.sqrt(n))
    for th in dirs:
        md = closed_form_marginal(b, th)
        if md is None:
            continue
        assert quad_mass(md) == pytest.approx(1.0, abs=1e-8)


def test_cone_axis_density_uncentered():
    n, c = 6, make_body("cone", 6)
    h = c.height
    md = closed_form_marginal(c, np.eye(n)[n - 1])
    shift = h / (n + 1)
    s = np.array([0.1, 0.7, 2.0, 5.0])
    expected = (n / h) * (1 - s / h) ** (n - 1)
    assert np.allclose(md.pdf(s - shift), expected, rtol=1e-12)


def test_cone_axis_rescaled_limit_pointwise():
    n = 200
    c = make_body("cone", n)
    h = c.height
    md = closed_form_marginal(c, np.eye(n)[n - 1])
    x = np.array([-0.5, 0.0, 1.0])
    # X = (n/h) S - n/(n+1): density (h/n) f_S(h(x + n/(n+1))/n)
    t = (h / n) * (x + n / (n + 1)) - h / (n + 1)
    f = (h / n) * md.pdf(t)
    assert np.allclose(f, np.exp(-(x + 1)), rtol=0.02)


def test_concavity_of_root_density():
    for kind in ("cone", "ball"):
        n = 7
        b = make_body(kind, n)
        md = closed_form_marginal(b, np.eye(n)[n - 1])
        g = np.random.default_rng(0)
        a = g.uniform(md.lower, md.upper, (500, 2))
        lam = g.random(500)
        m = lam * a[:, 0] + (1 - lam) * a[:, 1]
        root = lambda t: md.pdf(t) ** (1 / (n - 1))
        lhs = root(m)
        rhs = lam * root(a[:, 0]) + (1 - lam) * root(a[:, 1])
        assert np.all(lhs >= rhs - 1e-12)


def test_numerical_projection_records_bandwidth():
    b = make_body("cube", 3)
    th = np.ones(3) / math.sqrt(3)
    md = marginal_density(b, th, samples=20_000, seed=1)
    assert md.form == "numerical_projection"
    assert md.meta["bandwidth"] > 0
    assert quad_mass(md) == pytest.approx(1.0, abs=2e-3)
    with pytest.raises(Unsupported):
        marginal_density(b, th, allow_numerical=False)


def test_non_unit_direction_rejected():
    with pytest.raises(InvalidParam):
        marginal_density(make_body("cube", 3), np.array([1.0, 1.0, 0.0]))


@pytest.mark.parametrize("kind,params", CLOSED_KINDS)
def test_support_matches_sample_max(kind, params):
    b = make_body(kind, 4, params)
    pts = sample_uniform(b, 100_000, seed=2).points
    g = np.random.default_rng(9)
    for _ in range(5):
        th = g.standard_normal(4)
        th /= np.linalg.norm(th)
        h = support(b, th)
        proj = pts @ th
        assert proj.max() <= h + 1e-12
        assert proj.max() > h - 0.35 * (h - proj.min())


def test_json_round_trip(tmp_path):
    c = make_body("cone", 4, {"base": {"kind": "ball", "n": 3}})
    doc = c.to_dict()
    path = tmp_path / "b.json"
    path.write_text(json.dumps(doc))
    c2 = load_body(path)
    assert c2.to_dict() == doc
    assert c2.base.kind is BodyKind.BALL
    assert body_from_dict({"kind": "l1_ball", "n": 3}).params["p"] == 1.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 8), scale=st.floats(0.1, 0.99))
def test_scaled_interior_points_are_inside(n, scale):
    b = make_body("ball", n)
    g = np.random.default_rng(n)
    z = g.standard_normal((20, n))
    z /= np.linalg.norm(z, axis=1)[:, None]
    r = support_radius(b, z[0])
    assert np.all(contains(b, scale * r * z))
    assert not np.any(contains(b, 1.01 * r * z))


def test_ball_volume_formula():
    for n in (1, 2, 3, 10):
        b = make_body("ball", n)
        r = support_radius(b, np.eye(n)[0])
        logvol = n / 2 * math.log(math.pi) - special.gammaln(n / 2 + 1) + n * math.log(r)
        assert logvol == pytest.approx(0.0, abs=1e-12)


def test_simplex_coordinate_marginal_beta():
    n = 5
    b = make_body("simplex", n)
    md = closed_form_marginal(b, np.eye(n)[0])
    # raw coordinate of the standard simplex ~ Beta(1, n); mean 1/(n+1)
    v, _ = integrate.quad(lambda t: t * float(md.pdf(np.array([t]))[0]), md.lower, md.upper)
    assert abs(v) < 1e-10
