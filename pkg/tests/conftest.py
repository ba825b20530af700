import math

import numpy as np
import pytest
from hypothesis import settings

from thintorsion import builtin

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

SQ3 = math.sqrt(3.0)
X_FOLIUM = 1.0 / SQ3
X_LEMNISCATE = SQ3 / (2.0 * math.sqrt(2.0))


@pytest.fixture(scope="session")
def folium():
    return builtin("folium")


@pytest.fixture(scope="session")
def lemniscate():
    return builtin("lemniscate")


@pytest.fixture(scope="session")
def lens():
    return builtin("parabolic-lens")


@pytest.fixture(scope="session")
def disc():
    return builtin("disc")


@pytest.fixture(scope="session")
def builtins(folium, lemniscate, lens, disc):
    return {"folium": folium, "lemniscate": lemniscate, "parabolic-lens": lens, "disc": disc,
            "ellipsoid-2d": builtin("ellipsoid", axes=(1.0, 0.6), a_n=0.4)}


def interior_samples(profile, count, seed=0, margin=0.02):
    """Random (x', xi) pairs strictly inside the rescaled domain."""
    rng = np.random.default_rng(seed)
    pts = profile.omega.sample_interior(count, rng=rng, margin=margin)
    hm, hp = profile.h_minus(pts), profile.h_plus(pts)
    xi = -hm + (hm + hp) * rng.uniform(0.02, 0.98, count)
    return pts, xi


# acceptance summary: one line per criterion --------------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
