import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thintorsion import fields as F
from thintorsion.expansion import (DomainError, build_expansion, closed_form_u, eval_u,
                                   geometric_sum, pde_residual)
from thintorsion.geometry import CrossSection, builtin, load_profile, make_profile

from conftest import X_FOLIUM, interior_samples

x = F.coordinate(0)
I11 = CrossSection.interval(-1.0, 1.0)


def skew_profile():
    return load_profile({"name": "skew", "omega": [-1, 1],
                         "h_plus": {"poly": [1, 0.2, -1, -0.2]},
                         "h_minus": {"poly": [0.5, 0, -0.5]}})


def slope(eps, vals):
    return np.polyfit(np.log(eps), np.log(vals), 1)[0]


def test_first_term_is_explicit(folium):
    s = build_expansion(skew_profile(), 1)
    pr = s.profile
    pts, xi = interior_samples(pr, 50)
    expected = -xi ** 2 + xi * pr.d(pts) + pr.p(pts)
    assert np.allclose(s.term(1)(pts, xi), expected, atol=1e-15)
    assert s.alpha(2, 1)(0.3) == -1.0


def test_constant_p_zero_d_kills_higher_terms():
    pr = make_profile(I11, F.Constant(0.5), F.Constant(0.5))  # boundary warning is expected
    s = build_expansion(pr, 3)
    t = np.linspace(-0.9, 0.9, 7)
    for j in (2, 3):
        for i in range(2 * j):
            assert np.all(s.alpha(i, j)(t) == 0)


def test_folium_second_term_structure(folium):
    s = build_expansion(folium, 2)
    t = np.linspace(0.05, 0.95, 19)
    assert np.all(s.alpha(3, 2)(t) == 0)
    # p'' of (x^2 - x^3)/(3x + 1) by the quotient rule
    N, N1, N2 = t * t - t ** 3, 2 * t - 3 * t * t, 2 - 6 * t
    D = 3 * t + 1
    p2 = N2 / D - 6 * N1 / D ** 2 + 18 * N / D ** 3
    assert np.allclose(s.alpha(2, 2)(t), -p2 / 2, rtol=1e-12)


def test_folium_value_at_peak(folium):
    s = build_expansion(folium, 1)
    assert eval_u(s, X_FOLIUM, 0.0, 1.0) == pytest.approx((2 * math.sqrt(3) - 3) / 9, abs=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_zero_on_upper_boundary(folium, order):
    s = build_expansion(folium, order)
    t = np.linspace(0.05, 0.95, 10)
    assert np.max(np.abs(eval_u(s, t, folium.h_plus(t), 0.7))) < 1e-12


def test_lemniscate_matches_printed_expansion(lemniscate):
    s = build_expansion(lemniscate, 3)
    rng = np.random.default_rng(3)
    t = rng.uniform(0.05, 0.95, 20)
    S = np.sqrt(1 + 8 * t ** 2)
    xi = rng.uniform(-1, 1, 20) * np.sqrt(-0.5 - t ** 2 + 0.5 * S)
    eps = 0.3
    u2 = -0.5 - t ** 2 + 0.5 * S - xi ** 2
    u4 = (S ** 3 - 2) * (1 + 2 * t ** 2 - S + 2 * xi ** 2) / (2 * S ** 3)
    p2 = S * (512 * t ** 6 + 192 * t ** 4 + 152 * t ** 2 - 5) - 128 * t ** 4 - 268 * t ** 2 + 6
    u6 = (4 * xi ** 4 * (32 * t ** 2 - 1) / S ** 7
          + xi ** 2 * ((-512 * t ** 6 - 192 * t ** 4 - 216 * t ** 2 + 7) * S
                       + 256 * t ** 4 + 328 * t ** 2 - 8) / S ** 7
          - (1 + 2 * t ** 2 - S) * p2 / (2 * S ** 7))
    expected = u2 * eps ** 2 + u4 * eps ** 4 + u6 * eps ** 6
    assert np.allclose(eval_u(s, t, xi, eps), expected, atol=1e-14)


def test_folium_matches_printed_expansion(folium):
    # the printed eps^4 denominator reads 3(1+3x^4); 3(1+3x)^4 is what agrees
    s = build_expansion(folium, 3)
    rng = np.random.default_rng(4)
    t = rng.uniform(0.05, 0.95, 20)
    xi = rng.uniform(-1, 1, 20) * folium.h_plus(t)
    q = (t - 1) * t ** 2 + (3 * t + 1) * xi ** 2
    u4 = ((3 * t + 1) ** 3 - 4) * q / (3 * (1 + 3 * t) ** 4)
    p1 = (1 - 30 * t + 51 * t ** 2 + 48 * t ** 3 + 135 * t ** 4 + 162 * t ** 5 + 81 * t ** 6
          - 12 * xi ** 2 - 36 * t * xi ** 2)
    u6 = -q * p1 / (3 * t + 1) ** 7
    assert np.allclose(s.term(2)(t, xi), u4, atol=1e-15)
    assert np.allclose(s.term(3)(t, xi), u6, atol=1e-15)


def test_outside_points_are_rejected(folium):
    s = build_expansion(folium, 2)
    with pytest.raises(DomainError):
        eval_u(s, 0.5, 1.0, 0.1)
    with pytest.raises(DomainError):
        eval_u(s, 1.5, 0.0, 0.1)


@pytest.mark.parametrize("name", ["folium", "lemniscate", "parabolic-lens", "disc"])
@pytest.mark.parametrize("j", [1, 2, 3])
def test_recursion_equals_closed_form(name, j):
    pr = builtin(name)
    s = build_expansion(pr, j)
    pts, xi = interior_samples(pr, 100, seed=j)
    diff = s.term(j)(pts, xi) - closed_form_u(pr, j)(pts, xi)
    assert np.max(np.abs(diff)) <= (1e-8 if j <= 2 else 1e-6)


def test_recursion_equals_closed_form_asymmetric():
    pr = skew_profile()
    s = build_expansion(pr, 3)
    pts, xi = interior_samples(pr, 100)
    for j in (1, 2, 3):
        assert np.max(np.abs(s.term(j)(pts, xi) - closed_form_u(pr, j)(pts, xi))) < 1e-12


def test_boundary_vanishing_all_terms():
    for pr in (builtin("folium"), builtin("lemniscate"), skew_profile()):
        s = build_expansion(pr, 3)
        pts = pr.omega.sample_interior(500, rng=2, margin=1e-3)
        for j in (1, 2, 3):
            u = s.term(j)
            assert np.max(np.abs(u(pts, pr.h_plus(pts)))) < 1e-9
            assert np.max(np.abs(u(pts, -pr.h_minus(pts)))) < 1e-9


def test_odd_coefficients_vanish_when_symmetric(lemniscate, folium):
    for pr in (lemniscate, folium):
        s = build_expansion(pr, 3)
        pts = pr.omega.sample_interior(200, rng=9, margin=1e-3)
        for j in (1, 2, 3):
            for i in range(1, 2 * j, 2):
                assert np.max(np.abs(s.alpha(i, j)(pts))) < 1e-10


def test_affine_d_and_p_have_zero_residual():
    # constant heights: d and p are constant, hence affine
    pr = make_profile(CrossSection.interval(0.0, 1.0), F.Constant(0.3), F.Constant(0.7))
    s = build_expansion(pr, 1)
    pts, xi = interior_samples(pr, 30)
    assert pde_residual(s, 0.5, (pts, xi)) == 0.0


@pytest.mark.parametrize("order", [1, 2, 3])
def test_residual_order_lemniscate(lemniscate, order):
    s = build_expansion(lemniscate, order)
    samples = interior_samples(lemniscate, 200, seed=11)
    eps = [0.4, 0.2, 0.1]
    res = [pde_residual(s, e, samples) for e in eps]
    assert abs(slope(eps, res) - (2 * order + 2)) <= 0.3


def test_residual_order_folium(folium):
    s = build_expansion(folium, 2)
    samples = list(zip(*interior_samples(folium, 50, seed=2)))
    eps = [0.4, 0.2, 0.1]
    assert abs(slope(eps, [pde_residual(s, e, samples) for e in eps]) - 6) <= 0.3


def test_even_in_epsilon(folium):
    s = build_expansion(folium, 3)
    pts, xi = interior_samples(folium, 20)
    assert np.array_equal(eval_u(s, pts, xi, 0.37), eval_u(s, pts, xi, -0.37))


def test_geometric_sum_guard():
    hp, hm = 0.5 * (1 - x ** 2), 0.5 * (1 - x ** 2)
    H = hp + hm
    g = geometric_sum(hp, hm, H, 4)
    t = np.array([-0.5, 0.0, 0.5, 1.0])
    lit = sum(hp(t) ** m * (-hm(t)) ** (3 - m) for m in range(4))
    assert np.allclose(g(t), lit, atol=1e-15)
    assert np.isfinite(g(1.0))


def test_tabulated_high_order_needs_force(folium):
    xs = np.linspace(0, 1, 60)
    ys = folium.h_plus(xs)
    table = {"table": {"x": xs.tolist(), "y": ys.tolist()}}
    pr = load_profile({"omega": [0, 1], "h_plus": table, "h_minus": table})
    with pytest.warns(RuntimeWarning, match="tabulated"):
        build_expansion(pr, 3)
    with pytest.raises(ValueError, match="force"):
        build_expansion(pr, 4)


def test_order_must_be_positive(folium):
    with pytest.raises(ValueError):
        build_expansion(folium, 0)


asym = st.tuples(st.floats(0.3, 2.0), st.floats(-0.3, 0.3), st.floats(0.3, 2.0), st.floats(-0.3, 0.3))


@given(asym, st.integers(0, 2 ** 16))
def test_boundary_conditions_hold_for_random_polynomial_profiles(h, seed):
    a, b, c, e = h
    pr = make_profile(I11, c * (1 - x ** 2) * (1 + e * x), a * (1 - x ** 2) * (1 + b * x))
    s = build_expansion(pr, 3)
    pts = pr.omega.sample_interior(20, rng=seed, margin=0.01)
    for j in (1, 2, 3):
        u = s.term(j)
        scale = 1 + np.max(np.abs(u.coefficient_values(pts)[0]))
        assert np.max(np.abs(u(pts, pr.h_plus(pts)))) < 1e-12 * scale
        assert np.max(np.abs(u(pts, -pr.h_minus(pts)))) < 1e-12 * scale


@given(st.floats(0.2, 2.0), st.floats(-0.3, 0.3))
def test_symmetric_random_profiles_have_even_terms(a, b):
    h = a * (1 - x ** 2) * (1 + b * x * x)
    s = build_expansion(make_profile(I11, h, h), 3)
    t = np.linspace(-0.9, 0.9, 9)
    for j in (2, 3):
        for i in range(1, 2 * j, 2):
            assert np.max(np.abs(s.alpha(i, j)(t))) < 1e-10
