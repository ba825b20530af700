import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thintorsion import fields as F
from thintorsion.expansion import build_expansion
from thintorsion.extrema import (HypothesisError, ellipsoid_max_error, find_peak, max_series,
                                 numeric_max, peak_jet)
from thintorsion.geometry import CrossSection, builtin, load_profile, make_profile

from conftest import X_FOLIUM, X_LEMNISCATE

SQ3 = math.sqrt(3)
x = F.coordinate(0)


def skew_profile():
    return load_profile({"name": "skew", "omega": [-1, 1],
                         "h_plus": {"poly": [1, 0.2, -1, -0.2]},
                         "h_minus": {"poly": [0.5, 0, -0.5]}})


def slope(eps, vals):
    return np.polyfit(np.log(eps), np.log(vals), 1)[0]


def test_peak_locations(folium, lemniscate):
    assert find_peak(folium)[0] == pytest.approx(X_FOLIUM, abs=1e-12)
    assert find_peak(lemniscate)[0] == pytest.approx(X_LEMNISCATE, abs=1e-12)
    assert np.allclose(find_peak(builtin("ellipsoid", axes=(1.0, 2.0), a_n=0.5)), 0, atol=1e-12)


def test_peak_gradient_is_tiny(builtins):
    for pr in builtins.values():
        xb = find_peak(pr)
        assert np.linalg.norm(F.gradient(pr.H, xb)) < 1e-10


def test_lemniscate_jet(lemniscate):
    jet = peak_jet(lemniscate)
    assert jet.H0 == pytest.approx(math.sqrt(2) / 2, abs=1e-14)
    assert jet.d0 == 0 and np.trace(jet.D2) == 0
    assert 2 * np.trace(jet.P2) == pytest.approx(-1.5, abs=1e-12)


def test_folium_jet(folium):
    jet = peak_jet(folium)
    assert jet.H0 == pytest.approx(2 / 3 * math.sqrt(2 * SQ3 - 3), abs=1e-14)
    assert jet.d0 == 0


def test_lens_jet(lens):
    jet = peak_jet(lens)
    assert jet.H0 == pytest.approx(1.0)
    assert np.trace(jet.P2) == pytest.approx(-0.5)


def test_max_series_examples(lemniscate, folium, lens):
    ms = max_series(lemniscate)
    assert (ms.c2, ms.c4) == (pytest.approx(1 / 8, abs=1e-12), pytest.approx(-3 / 32, abs=1e-12))
    ms = max_series(folium)
    assert ms.c2 == pytest.approx((2 * SQ3 - 3) / 9, abs=1e-12)
    assert ms.c4 == pytest.approx((12 - 7 * SQ3) / 9, abs=1e-12)
    ms = max_series(lens)
    assert (ms.c2, ms.c4) == (pytest.approx(0.25), pytest.approx(-0.125))
    ms = max_series(builtin("ellipsoid", axes=(1.0, 2.0), a_n=0.5))
    assert np.all(ms.xm2 == 0) and ms.c2 > 0


def test_symmetric_profiles_keep_the_midplane(builtins):
    for pr in builtins.values():
        ms = max_series(pr)
        assert ms.maximizer(0.3)[1] == 0 and ms.c2 > 0


@pytest.mark.parametrize("name", ["folium", "lemniscate", "parabolic-lens", "disc", "ellipsoid-2d"])
def test_jet_identities(builtins, name):
    jet = peak_jet(builtins[name])
    assert np.max(np.abs(jet.matrix_identity_residual())) <= 1e-8
    assert np.max(np.abs(jet.gradient_identity_residual())) <= 1e-8
    assert jet.H0 ** 2 == pytest.approx(jet.d0 ** 2 + 4 * jet.p0, abs=1e-12)
    assert np.all(np.linalg.eigvalsh(jet.H2) < 0)


def test_jet_identities_asymmetric():
    jet = peak_jet(skew_profile())
    assert jet.d0 != 0 and np.any(jet.d1 != 0)
    assert np.max(np.abs(jet.matrix_identity_residual())) <= 1e-8
    assert np.max(np.abs(jet.gradient_identity_residual())) <= 1e-8


def test_numeric_max_value_order_lemniscate(lemniscate):
    s = build_expansion(lemniscate, 2)
    ms = max_series(lemniscate)
    eps = [0.2, 0.1, 0.05]
    gaps = [abs(numeric_max(s, e)[2] - ms.value(e)) for e in eps]
    assert slope(eps, gaps) >= 5


def test_numeric_max_symmetric_midplane(lemniscate):
    _, xi, _ = numeric_max(build_expansion(lemniscate, 3), 0.3)
    assert abs(xi) < 1e-10


def test_maximizer_folium_is_third_order(folium):
    s = build_expansion(folium, 2)
    ms = max_series(folium)
    eps = [0.2, 0.1, 0.05]
    gaps = [abs(numeric_max(s, e)[0][0] - ms.maximizer(e)[0][0]) for e in eps]
    assert slope(eps, gaps) >= 2.7
    assert gaps[1] < 1e-3


def test_maximizer_and_maximum_asymmetric():
    pr = skew_profile()
    ms = max_series(pr)
    s = build_expansion(pr, 3)
    eps = [0.2, 0.1, 0.05]
    xs, xis, vals = zip(*(numeric_max(s, e) for e in eps))
    dx = [abs(a[0] - ms.maximizer(e)[0][0]) for a, e in zip(xs, eps)]
    dxi = [abs(a - ms.maximizer(e)[1]) for a, e in zip(xis, eps)]
    dv = [abs(v - ms.value(e)) for v, e in zip(vals, eps)]
    assert slope(eps, dx) >= 2.7
    assert slope(eps, dxi) >= 2.7
    assert slope(eps, dv) >= 4.7


def test_max_of_leading_term(builtins):
    # first-order series at eps = 1 is exactly u_2
    for name in ("folium", "lemniscate", "ellipsoid-2d"):
        pr = builtins[name]
        jet = peak_jet(pr)
        xs, xi, val = numeric_max(build_expansion(pr, 1), 1.0)
        assert val == pytest.approx(jet.H0 ** 2 / 4, abs=1e-12)
        assert np.allclose(xs, jet.x_bar, atol=1e-7) and xi == pytest.approx(jet.d0 / 2, abs=1e-9)


def test_two_equal_peaks_are_rejected():
    bump = (1 - x ** 2) * (0.2 + x ** 2)
    pr = make_profile(CrossSection.interval(-1.0, 1.0), bump, bump)
    with pytest.raises(HypothesisError, match="several points"):
        find_peak(pr)


def test_degenerate_peak_is_rejected():
    flat = 1 - x ** 4
    pr = make_profile(CrossSection.interval(-1.0, 1.0), flat, flat)
    with pytest.raises(HypothesisError, match="H2"):
        find_peak(pr)


def test_disc_max_error_is_eps4():
    for eps in (0.1, 0.5, 0.9):
        assert ellipsoid_max_error((1.0,), 1.0, eps) == pytest.approx(eps ** 4, rel=1e-10)


@given(st.lists(st.floats(0.6, 3.0), min_size=1, max_size=2), st.floats(0.05, 1.0), st.floats(0.1, 1.0))
def test_ellipsoid_max_bound(axes, ratio, eps):
    a_n = ratio * min(axes)
    n = len(axes) + 1
    err = ellipsoid_max_error(tuple(axes), a_n, eps)
    assert -1e-14 <= err <= eps ** 4 * (n - 1) ** 2 * (1 + 1e-12)
