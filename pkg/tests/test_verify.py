import json
import math

import numpy as np
import pytest

from subgauss.bodies import make_body
from subgauss.construction import GridD, make_grid
from subgauss.errors import AsymmetricInput, InvalidMoments, UnresolvableMass
from subgauss.verify import (
    FAIL,
    PASS,
    CheckResult,
    axis_tv_distance,
    check_Ap_gaussian_mass,
    check_counterexample,
    check_endpoint,
    check_gaussian_correlation,
    check_moment_comparison,
    check_neg_moment_bounds,
    check_paley_zygmund,
    check_paley_zygmund_mc,
    check_volume_radius_separation,
    cone_axis_law,
    ellipsoid_set,
    exit_code,
    exponential_law,
    l1_set,
    laplace_law,
    mgf_diverges,
    mgf_quadrature,
    moment_comparison_ratio,
    report_json,
    run_suite,
    shifted_exponential_mgf,
    slab_set,
    summary_table,
    uniform_law,
)


def test_check_result_status_rules():
    r = CheckResult("x", {}, {"a": 1.0, "b": [0.5, 0.7]}, {"a": (0, 2), "b": (None, 0.8)})
    assert r.status == PASS and r.ok
    r = CheckResult("x", {}, {"a": 3.0}, {"a": (0, 2)}, expected=FAIL)
    assert r.status == FAIL and r.ok
    r = CheckResult("x", {}, {"a": float("nan")}, {"a": (0, 2)})
    assert r.status == "indeterminate" and not r.ok
    assert exit_code([r]) == 1
    assert json.loads(report_json([r]))[0]["check_id"] == "x"


def test_moment_comparison_examples():
    assert moment_comparison_ratio(uniform_law(), 1, 2) == pytest.approx(0.288675 / 0.25 / 2, rel=1e-5)
    assert moment_comparison_ratio(uniform_law(), 4, 4) == pytest.approx(1.0, rel=1e-14)
    assert moment_comparison_ratio(exponential_law(), 1, 4) == pytest.approx(24 ** 0.25 / 4, rel=1e-9)
    assert 24 ** 0.25 / 4 == pytest.approx(0.553, abs=1e-3)


def test_moment_comparison_on_sample_matches_quadrature():
    x = np.random.default_rng(0).uniform(-0.5, 0.5, 400_000)
    assert moment_comparison_ratio(x, 1, 2) == pytest.approx(moment_comparison_ratio(uniform_law(), 1, 2),
                                                             rel=5e-3)


def test_moment_comparison_log_concave_laws_below_three():
    pairs = [(p, q) for p in (1, 2, 4, 8, 16, 32) for q in (1, 2, 4, 8, 16, 32) if p < q]
    for law in (uniform_law(), exponential_law(), laplace_law(), cone_axis_law(50)):
        r = check_moment_comparison(law, pairs)
        assert r.ok and r.observed["max_ratio"] <= 3


def test_correlation_equal_sets():
    A = ellipsoid_set(np.diag([1.0, 0.7]))
    r = check_gaussian_correlation(2, A, A, N=100_000, seed=1)
    assert r.ok and r.observed["gamma_AB"] >= r.observed["gamma_A"] ** 2


def test_correlation_product_slabs_equality():
    r = check_gaussian_correlation(2, slab_set([[1, 0]]), slab_set([[0, 1]]), N=1_000_000, seed=2,
                                   equality=True)
    assert r.ok
    assert abs(r.observed["z_score"]) < 3


def test_correlation_l1_vs_rotated_ellipse():
    c, s = math.cos(0.6), math.sin(0.6)
    B = ellipsoid_set(np.diag([1.0, 0.4]) @ np.array([[c, -s], [s, c]]))
    r = check_gaussian_correlation(2, l1_set(1.5), B, N=1_000_000, seed=3)
    assert r.ok and r.observed["difference"] > 0


def test_correlation_rejects_asymmetric_set():
    def half_plane(X):
        return np.atleast_2d(X)[:, 0] >= 0

    with pytest.raises(AsymmetricInput):
        check_gaussian_correlation(2, half_plane, l1_set(1.0), N=1000)


def test_correlation_worker_invariance():
    A, B = l1_set(1.2), slab_set([[1.0, 2.0]])
    a = check_gaussian_correlation(2, A, B, N=50_000, seed=4, workers=1)
    b = check_gaussian_correlation(2, A, B, N=50_000, seed=4, workers=4)
    assert a.observed == b.observed


def test_paley_zygmund_arithmetic():
    assert check_paley_zygmund(1.0, 1.0, 1) == pytest.approx(0.25)
    assert check_paley_zygmund(2.0, 1.0, 1) == pytest.approx(1 / 16)
    with pytest.raises(InvalidMoments):
        check_paley_zygmund(0.0, 1.0, 1)


def test_paley_zygmund_cube_ten():
    r = check_paley_zygmund_mc(make_body("cube", 10), 2, N=400_000, seed=5)
    assert r.ok
    assert r.observed["probability"] >= r.observed["bound"]
    assert r.observed["a_p"] >= r.observed["b_p"]


def test_ap_mass_profile_and_limits():
    body = make_body("cube", 10)
    rates = [check_Ap_gaussian_mass(body, p, seed=6).observed["rate"] for p in (1, 2)]
    assert all(r <= 10 for r in rates)
    big = make_grid(10, C0=50.0)
    assert check_Ap_gaussian_mass(make_body("ball", 10), 1, big, seed=6).observed["gamma"] == 1.0
    tiny = make_grid(10, C0=1e-3)
    with pytest.raises(UnresolvableMass):
        check_Ap_gaussian_mass(body, 1, tiny, seed=6)


def test_endpoint_cube_three():
    r = check_endpoint(make_body("cube", 3), np.array([1.0, 0, 0]))
    assert r.observed["R"] == pytest.approx(0.5)
    assert r.observed["norm_n"] == pytest.approx(0.5 * 4 ** (-1 / 3), rel=1e-9)
    assert r.ok


def test_endpoint_interval():
    r = check_endpoint(make_body("cube", 1), np.array([1.0]))
    assert r.observed["ratio"] == 1.0 and r.ok


def test_endpoint_ball_five():
    g = np.random.default_rng(7)
    th = g.standard_normal(5)
    r = check_endpoint(make_body("ball", 5), th)
    assert r.ok and r.observed["norm_n"] < r.observed["R"]


@pytest.mark.parametrize("kind", ["cube", "ball", "l1_ball", "simplex", "cone"])
def test_endpoint_random_directions(kind):
    n = 9
    g = np.random.default_rng(8)
    body = make_body(kind, n)
    for th in g.standard_normal((4, n)):
        assert check_endpoint(body, th).ok


def test_mgf_values():
    assert shifted_exponential_mgf(0.5) == pytest.approx(1.21306, abs=1e-5)
    assert shifted_exponential_mgf(0.0) == 1.0
    for t in (0.25, 0.5, 0.9):
        assert abs(mgf_quadrature(t) - shifted_exponential_mgf(t)) < 1e-8
    assert mgf_diverges(1.0) and not mgf_diverges(0.5)
    assert shifted_exponential_mgf(1.0) == math.inf


def test_shifted_exponential_has_unit_variance():
    from subgauss.moments import quad_lp_norm

    assert quad_lp_norm(exponential_law(shift=1.0), 2.0).value == pytest.approx(1.0, rel=1e-10)


def test_axis_tv_small_at_200():
    assert axis_tv_distance(200) < 0.02
    assert axis_tv_distance(200) < axis_tv_distance(50)


def test_counterexample_default():
    r = check_counterexample()
    assert r.ok
    s = r.observed["slope_by_n"]
    assert s["100"] < s["200"] < 1.05


def test_volume_radius_separation_cube_eight():
    body = make_body("cube", 8)
    r = check_volume_radius_separation(body, 6, directions=5000, seed=9)
    assert r.ok and r.status == PASS
    w = np.asarray(r.observed["witness"])
    assert w.shape == (8,)


def test_volume_radius_expected_failure():
    g = make_grid(8)
    bad = GridD(8, g.c0, g.exponents, g.C0, g.C0)
    r = check_volume_radius_separation(make_body("cube", 8), 6, bad, directions=2000, seed=9)
    assert r.expected == FAIL and r.status == FAIL and r.ok
    assert r.observed["witness"] is None


def test_volume_radius_ball_full_space():
    r = check_volume_radius_separation(make_body("ball", 8), 8, directions=2000, seed=10)
    assert r.ok
    C0, eps = make_grid(8).C0, make_grid(8).eps
    assert r.observed["separation"] > 0.5 * C0 / eps


def test_volume_radius_dimension_guard():
    with pytest.raises(UnresolvableMass):
        check_volume_radius_separation(make_body("cube", 13), 10)


def test_neg_moment_bounds_band():
    r = check_neg_moment_bounds(make_body("l1_ball", 10), N=5000, seed=11)
    assert r.ok


def test_suite_quick_endpoint_and_table():
    res = run_suite("endpoint", seed=0, n=6, quick=True)
    assert len(res) == 25 and exit_code(res) == 0
    tab = summary_table(res)
    assert tab.splitlines()[0].split()[:3] == ["check", "scope", "status"]
    with pytest.raises(ValueError):
        run_suite("bogus")


def test_reports_reproducible():
    a = report_json(run_suite("correlation", seed=3, quick=True))
    b = report_json(run_suite("correlation", seed=3, quick=True))
    assert a == b
