import math

import numpy as np
import pytest
from scipy import special, stats

from subgauss.bodies import MarginalDensity, closed_form_marginal, make_body, support_radius
from subgauss.errors import EmptyProfile, PTooLargeForBudget, QOutOfRange
from subgauss.moments import (
    MomentProfile,
    centroid_polar_norm,
    ellipsoid_polar_norm,
    euclid_moment,
    sphere_gauss_prefactor,
    log_power_means,
    marginal_lp,
    mc_lp_norms,
    moment_profile,
    neg_moment_gaussian,
    neg_moment_sphere,
    p_max,
    psi2_norm,
    support_polar_norm,
    tail_prob,
)
from subgauss.sampling import sample_gaussian, sample_uniform
from subgauss.verify import exponential_law, uniform_law


def normal_law(cut=40.0):
    c = -0.5 * math.log(2 * math.pi)
    return MarginalDensity(np.array([1.0]), -cut, cut, lambda t: c - 0.5 * np.asarray(t) ** 2,
                           "closed_form", {"law": "normal"}, (0.0,))


@pytest.fixture(scope="module")
def cube_batch():
    return sample_uniform(make_body("cube", 3), 1_000_000, seed=21)


def test_cube_coordinate_p1_p2(cube_batch):
    md = closed_form_marginal(make_body("cube", 3), np.eye(3)[0])
    assert marginal_lp(md, None, 1).value == pytest.approx(0.25, abs=1e-10)
    assert marginal_lp(md, None, 2).value == pytest.approx(1 / math.sqrt(12), abs=1e-10)
    e = marginal_lp(cube_batch, np.eye(3)[0], 2)
    assert abs(e.value - 1 / math.sqrt(12)) < 3 * e.stderr
    assert e.method == "monte_carlo"


@pytest.mark.parametrize("p", [1, 2, 3, 4, 6, 8])
def test_cube_mc_matches_closed_form(cube_batch, p):
    e = marginal_lp(cube_batch, np.eye(3)[1], p)
    exact = 0.5 * (p + 1) ** (-1 / p)
    assert abs(e.value - exact) < 3 * e.stderr
    assert e.ci_low <= e.value <= e.ci_high


def test_gaussian_fourth_moment():
    z = sample_gaussian(1, 1_000_000, seed=22)
    e = marginal_lp(z, np.array([1.0]), 4)
    assert abs(e.value - 3 ** 0.25) < 3 * e.stderr
    assert marginal_lp(normal_law(), None, 4).value == pytest.approx(3 ** 0.25, rel=1e-9)


def test_p_max_guard():
    assert p_max(3**5) == pytest.approx(5.0)
    vals = np.random.default_rng(0).uniform(-0.5, 0.5, 1000)
    with pytest.raises(PTooLargeForBudget):
        mc_lp_norms(vals, [7.0])
    assert len(mc_lp_norms(vals, [6.0])) == 1
    with pytest.raises(PTooLargeForBudget):
        marginal_lp(vals, None, 0.5)


def test_log_space_avoids_overflow():
    logv = np.array([800.0, 800.0, 799.0])
    total, _ = log_power_means(logv, [1.0, 2.0], resamples=0, n_batches=3)
    expect = special.logsumexp([800, 800, 799]) - math.log(3)
    assert total[0] == pytest.approx(expect, rel=1e-14)
    assert np.isfinite(total).all()


def test_profile_truncated_on_mc_path():
    vals = np.random.default_rng(1).uniform(-0.5, 0.5, (5000, 1))
    prof = moment_profile(vals, np.array([1.0]), [1, 2, 4, 8, 16])
    assert prof.truncated
    assert prof.ps.max() <= p_max(5000)


def test_profile_monotone_in_p():
    md = closed_form_marginal(make_body("simplex", 6), np.eye(6)[2])
    prof = moment_profile(md, np.eye(6)[2], [1, 2, 4, 6, 8, 16])
    assert np.all(np.diff(prof.values) > 0)
    X = sample_uniform(make_body("lp_ball", 5, {"p": 1.0}), 200_000, seed=3)
    prof = moment_profile(X, np.eye(5)[0], [1, 2, 4, 8])
    for a, b in zip(prof.entries, prof.entries[1:]):
        assert a.value <= b.ci_high


def test_profile_value_two_is_lk_for_isotropic_cube(cube_batch):
    prof = moment_profile(cube_batch, np.ones(3) / math.sqrt(3), [1, 2, 4], L_K=1 / math.sqrt(12))
    e = prof.entries[1]
    assert e.ci_low <= prof.L_K <= e.ci_high


def test_profile_csv_layout():
    prof = moment_profile(uniform_law(), np.array([1.0]), [1, 2])
    lines = prof.to_csv(theta_id=3).strip().splitlines()
    assert lines[0] == "theta_id,p,value,ci_low,ci_high,method"
    assert lines[1].startswith("3,1.0,0.25")
    assert lines[1].endswith("quadrature")


def test_psi2_uniform_peaks_at_p1():
    grid = [1, 2, 4, 8, 16, 32]
    prof = moment_profile(uniform_law(), np.array([1.0]), grid)
    oracle = [0.5 * (p + 1) ** (-1 / p) / math.sqrt(p) for p in grid]
    v, p = psi2_norm(prof)
    assert p == 1.0
    assert v == pytest.approx(max(oracle), abs=1e-9)
    assert v == pytest.approx(0.25, abs=1e-9)


def test_psi2_normal_matches_gamma_oracle():
    grid = [1, 2, 4, 8, 16, 32, 64]
    prof = moment_profile(normal_law(), np.array([1.0]), grid)
    exact = [math.sqrt(2) * math.exp((special.gammaln((p + 1) / 2) - 0.5 * math.log(math.pi)) / p)
             for p in grid]
    assert np.allclose(prof.values, exact, rtol=1e-9)
    v, p = psi2_norm(prof)
    assert (v, p) == (pytest.approx(math.sqrt(2 / math.pi), rel=1e-9), 1.0)
    # ratio decreases to exp(-1/2): bounded, so subgaussian
    last = prof.values[-1] / math.sqrt(grid[-1])
    assert last == pytest.approx(math.exp(-0.5), rel=0.05)


def test_psi2_shifted_exponential_grows():
    grid = [1, 2, 4, 8, 16, 32]
    prof = moment_profile(exponential_law(shift=1.0), np.array([1.0]), grid)
    r = prof.values / np.sqrt(prof.ps)
    _, p = psi2_norm(prof)
    assert p == grid[-1]
    assert np.all(np.diff(r[2:]) > 0)


def test_psi2_empty():
    with pytest.raises(EmptyProfile):
        psi2_norm(MomentProfile(np.array([1.0]), [], 1))


def test_tail_uniform_examples():
    assert tail_prob(uniform_law(), None, 1.0).value == pytest.approx(0.5, abs=1e-10)
    assert tail_prob(uniform_law(), None, 2.0).value == pytest.approx(0.0, abs=1e-12)


def test_tail_normal_example():
    exact = 2 * stats.norm.sf(2 * math.sqrt(2 / math.pi))
    assert exact == pytest.approx(0.1105, abs=1e-4)
    assert tail_prob(normal_law(), None, 2.0).value == pytest.approx(exact, abs=1e-10)
    z = sample_gaussian(1, 400_000, seed=9)
    e = tail_prob(z, np.array([1.0]), 2.0)
    assert e.ci_low <= exact <= e.ci_high


def test_sphere_moment_of_balls():
    for r in (1.0, 2.5):
        e = neg_moment_sphere(ellipsoid_polar_norm(r * np.eye(6)), 2.0, 6, N=20_000)
        assert e.value == pytest.approx(r, rel=1e-12)


def test_gaussian_moment_of_ball_n4():
    e = neg_moment_gaussian(ellipsoid_polar_norm(np.eye(4)), 2.0, 4, N=400_000, seed=3)
    assert abs(e.value - math.sqrt(2)) < 3 * e.stderr


def test_gaussian_moment_homogeneity():
    pn = ellipsoid_polar_norm(np.diag([1.0, 2.0, 3.0, 0.5, 1.0, 1.0]))
    pn3 = ellipsoid_polar_norm(3 * np.diag([1.0, 2.0, 3.0, 0.5, 1.0, 1.0]))
    a = neg_moment_gaussian(pn, 2.0, 6, N=50_000, seed=4)
    b = neg_moment_gaussian(pn3, 2.0, 6, N=50_000, seed=4)
    assert b.value == pytest.approx(3 * a.value, rel=1e-12)


def test_q_range_enforced():
    pn = ellipsoid_polar_norm(np.eye(4))
    with pytest.raises(QOutOfRange):
        neg_moment_sphere(pn, 3.0, 4)
    with pytest.raises(QOutOfRange):
        neg_moment_gaussian(pn, 0.0, 4)
    with pytest.raises(QOutOfRange):
        sphere_gauss_prefactor(4, 4.0)


def test_prefactor_values():
    assert sphere_gauss_prefactor(4, 2.0) == pytest.approx(math.sqrt(2), rel=1e-14)
    limit = math.exp(0.5 * (special.digamma(5) + math.log(2)))
    assert sphere_gauss_prefactor(10, 1e-10) == pytest.approx(limit, rel=1e-12)
    assert sphere_gauss_prefactor(10, 1e-5) == pytest.approx(limit, rel=1e-4)
    for n in (20, 50, 100):
        for q in np.linspace(0.5, n / 2, 12):
            assert 0.5 <= sphere_gauss_prefactor(n, float(q)) / math.sqrt(n) <= 1.5


def test_sphere_gauss_identity_centroid_of_cube():
    X = sample_uniform(make_body("cube", 10), 100_000, seed=5).points
    pn = centroid_polar_norm(X, 2.0)
    w = neg_moment_sphere(pn, 2.0, 10, N=200_000, seed=6)
    gq = neg_moment_gaussian(pn, 2.0, 10, N=200_000, seed=7)
    assert gq.value == pytest.approx(sphere_gauss_prefactor(10, 2.0) * w.value, rel=0.05)


def test_sphere_gauss_identity_random_polytope():
    g = np.random.default_rng(8)
    V = g.standard_normal((60, 10))
    pn = support_polar_norm(V)
    w = neg_moment_sphere(pn, 5.0, 10, N=200_000, seed=9)
    gq = neg_moment_gaussian(pn, 5.0, 10, N=200_000, seed=10)
    pred = sphere_gauss_prefactor(10, 5.0) * w.value
    se = math.hypot(gq.stderr, sphere_gauss_prefactor(10, 5.0) * w.stderr)
    assert abs(gq.value - pred) < 3 * se


def test_sphere_moment_decreasing_in_q():
    X = sample_uniform(make_body("cube", 8), 5_000, seed=11).points
    pn = centroid_polar_norm(X, 1.0)
    vals = [neg_moment_sphere(pn, q, 8, N=20_000, seed=12) for q in (0.5, 1.0, 2.0, 4.0)]
    for a, b in zip(vals, vals[1:]):
        assert b.value <= a.ci_high


def test_euclid_second_moment_isotropic_cube():
    n = 5
    X = sample_uniform(make_body("cube", n), 400_000, seed=13)
    e = euclid_moment(X, 2.0)
    assert abs(e.value - math.sqrt(n / 12)) < 3 * e.stderr
    neg = euclid_moment(X, -2.0)
    assert neg.value <= e.value


def test_euclid_second_moment_ball():
    n = 3
    b = make_body("ball", n)
    r = support_radius(b, np.eye(n)[0])
    e = euclid_moment(sample_uniform(b, 400_000, seed=14), 2.0)
    assert abs(e.value - r * math.sqrt(n / (n + 2))) < 3 * e.stderr


def test_euclid_q_range():
    X = sample_uniform(make_body("cube", 1), 1000, seed=0)
    with pytest.raises(QOutOfRange):
        euclid_moment(X, -1.0)
    with pytest.raises(QOutOfRange):
        euclid_moment(X, 0.0)
