import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thintorsion import fields as F
from thintorsion.geometry import (CrossSection, ProfileError, ThinDomain, builtin, load_profile,
                                  make_profile, save_profile)

x = F.coordinate(0)
I11 = CrossSection.interval(-1.0, 1.0)
T = np.linspace(-0.95, 0.95, 41)


def test_symmetric_lens_from_make_profile():
    h = 0.5 * (1 - x ** 2)
    pr = make_profile(I11, h, h)
    assert np.all(pr.d(T) == 0)
    assert np.allclose(pr.p(T), (1 - T ** 2) ** 2 / 4, atol=1e-15)
    assert np.allclose(pr.H(T), 1 - T ** 2, atol=1e-15)


def test_asymmetric_heights():
    pr = make_profile(I11, 1 - x ** 2, 2 * (1 - x ** 2))
    assert np.allclose(pr.d(T), 1 - T ** 2)
    assert np.allclose(pr.p(T), 2 * (1 - T ** 2) ** 2)
    assert np.allclose(pr.H(T), 3 * (1 - T ** 2))


def test_folium_thickness(folium):
    t = np.linspace(0.01, 0.99, 50)
    assert np.allclose(folium.H(t), 2 * t * np.sqrt((1 - t) / (1 + 3 * t)), atol=1e-15)
    assert folium.omega.lower == (0.0,) and folium.omega.upper == (1.0,)
    assert np.allclose(folium.p(t), (1 - t) * t ** 2 / (3 * t + 1), atol=1e-15)


def test_lemniscate_p(lemniscate):
    t = np.linspace(0.01, 0.99, 50)
    assert np.allclose(lemniscate.p(t), -0.5 - t ** 2 + 0.5 * np.sqrt(1 + 8 * t ** 2), atol=1e-15)


def test_disc_heights():
    pr = builtin("ellipsoid", axes=(1.0,), a_n=1.0)
    t = np.linspace(-0.99, 0.99, 21)
    assert np.allclose(pr.h_plus(t), np.sqrt(1 - t ** 2))
    assert np.allclose(pr.h_minus(t), np.sqrt(1 - t ** 2))


def test_builtin_errors():
    with pytest.raises(ProfileError, match="unknown builtin"):
        builtin("cardioid")
    with pytest.raises(ProfileError, match="positive"):
        builtin("ellipsoid", axes=(1.0, -1.0), a_n=1.0)


def test_dimension_mismatch():
    with pytest.raises(ProfileError, match="dimension"):
        make_profile(I11, 1 - x ** 2, F.Constant(1.0, 2))


def test_negative_thickness_is_fatal():
    with pytest.raises(ProfileError, match="H < 0"):
        make_profile(I11, -(1 - x ** 2), 0.5 * (1 - x ** 2))


def test_nonvanishing_boundary_is_a_warning():
    pr = make_profile(I11, F.Constant(1.0), F.Constant(1.0))
    assert any("boundary" in w for w in pr.warnings)


@pytest.mark.parametrize("name", ["folium", "lemniscate", "parabolic-lens", "disc"])
def test_builtin_identity_d2_plus_4p(name):
    pr = builtin(name)
    pts = pr.omega.sample_interior(1000, rng=5)
    assert np.max(np.abs(pr.d(pts) ** 2 + 4 * pr.p(pts) - pr.H(pts) ** 2)) < 1e-12


def test_ellipsoid_in_three_dimensions():
    pr = builtin("ellipsoid", axes=(1.0, 2.0), a_n=0.5)
    pts = pr.omega.sample_interior(500, rng=3)
    q = 1 - pts[:, 0] ** 2 - pts[:, 1] ** 2 / 4
    assert np.allclose(pr.H(pts), 2 * 0.5 * np.sqrt(q))
    assert pr.omega.classify([0.0, 1.999]) == "interior"
    assert pr.omega.classify([0.9, 1.9]) == "exterior"


def test_thin_domain_membership(disc):
    dom = disc.at(0.5)
    assert isinstance(dom, ThinDomain)
    assert dom.contains([[0.0, 0.49], [0.0, 0.51], [0.99, 0.0]]).tolist() == [True, False, True]
    with pytest.raises(ProfileError):
        disc.at(0.0)


def test_polynomial_document_is_the_lens(lens):
    doc = {"omega": [-1, 1], "h_plus": {"poly": [0.5, 0, -0.5]}, "h_minus": {"poly": [0.5, 0, -0.5]}}
    pr = load_profile(doc)
    assert np.allclose(pr.H(T), lens.H(T), atol=1e-15)
    assert np.allclose(pr.p.laplacian()(T), lens.p.laplacian()(T), atol=1e-13)


def test_document_from_text_and_file(tmp_path):
    doc = {"name": "lens", "omega": [[-1, 1]], "h_plus": {"poly": [0.5, 0, -0.5]},
           "h_minus": {"poly": [0.5, 0, -0.5]}}
    path = tmp_path / "lens.json"
    path.write_text(json.dumps(doc))
    assert load_profile(path).name == "lens"
    assert load_profile(json.dumps(doc)).name == "lens"


def test_tabulated_folium_matches_builtin(folium):
    xs = np.linspace(0, 1, 200)
    ys = folium.h_plus(xs)
    ys[[0, -1]] = 0.0
    table = {"table": {"x": xs.tolist(), "y": ys.tolist()}}
    pr = load_profile({"omega": [0, 1], "h_plus": table, "h_minus": table})
    assert pr.tabulated
    t = np.linspace(0.05, 0.95, 2001)
    assert np.max(np.abs(pr.H(t) - folium.H(t))) < 1e-6


@pytest.mark.parametrize("doc, msg", [
    ({}, "non-empty"),
    ({"omega": [0, 1], "h_plus": {"poly": [1]}}, "lacks"),
    ({"omega": [0, 1], "h_plus": {"poly": [1]}, "h_minus": {"poly": [1]}, "colour": 1}, "unknown"),
    ({"omega": [0, 1], "h_plus": {"poly": [1, float("nan")]}, "h_minus": {"poly": [1]}}, "non-finite"),
    ({"omega": [0, 1], "h_plus": {"table": {"x": [0, 1, 2, 3], "y": [0, 1, float("inf"), 0]}},
      "h_minus": {"poly": [1]}}, "non-finite"),
    ({"omega": [[0, 1], [0, 1]], "h_plus": {"poly": [1]}, "h_minus": {"poly": [1]}}, "one-dimensional"),
])
def test_schema_errors(doc, msg):
    with pytest.raises(ProfileError, match=msg):
        load_profile(doc)


def test_invalid_json_text():
    with pytest.raises(ProfileError, match="JSON"):
        load_profile("{not json")


def test_save_round_trip(tmp_path):
    doc = {"name": "skew", "omega": [-1, 1], "h_plus": {"poly": [1, 0.2, -1, -0.2]},
           "h_minus": {"poly": [0.5, 0, -0.5]}}
    pr = load_profile(doc)
    again = load_profile(save_profile(pr, tmp_path / "skew.json"))
    assert np.max(np.abs(again.H(T) - pr.H(T))) <= 1e-10
    assert np.max(np.abs(again.d.laplacian()(T) - pr.d.laplacian()(T))) <= 1e-10
    with pytest.raises(ProfileError):
        save_profile(builtin("folium"))


def test_folium_thickness_peak_location(folium):
    t = np.linspace(0.01, 0.99, 9801)
    assert t[np.argmax(folium.H(t))] == pytest.approx(1 / math.sqrt(3), abs=1e-4)


heights = st.tuples(st.floats(0.2, 2.0), st.floats(-0.4, 0.4), st.floats(0.2, 2.0), st.floats(-0.4, 0.4))


@given(heights)
def test_derived_fields_identity(h):
    a, b, c, e = h
    hp = a * (1 - x ** 2) * (1 + b * x)
    hm = c * (1 - x ** 2) * (1 + e * x)
    pr = make_profile(I11, hm, hp)
    assert np.allclose(pr.d(T) ** 2 + 4 * pr.p(T), pr.H(T) ** 2, atol=1e-12)
    assert np.allclose(pr.d(T), hp(T) - hm(T))


@given(st.floats(0.2, 3.0))
def test_symmetric_profiles_have_zero_d(a):
    h = a * (1 - x ** 2)
    pr = make_profile(I11, h, h)
    assert np.all(pr.d(T) == 0)
    assert np.allclose(pr.p(T), pr.H(T) ** 2 / 4)
