"""Thin-domain profiles.

A profile is a cross-section ``omega`` together with the lower and upper
heights ``h_minus`` and ``h_plus``.  The thin domain of thickness
parameter ``eps`` is ``{(x', y): x' in omega, -eps h_minus(x') < y <
eps h_plus(x')}``.  The derived fields are ``d = h_plus - h_minus``,
``p = h_plus * h_minus`` and the local thickness ``H = h_plus + h_minus``.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import fields as F

__all__ = [
    "CrossSection",
    "DomainProfile",
    "ThinDomain",
    "ProfileError",
    "make_profile",
    "builtin",
    "BUILTINS",
    "load_profile",
    "save_profile",
]

log = logging.getLogger(__name__)


class ProfileError(ValueError):
    """Invalid profile geometry or configuration document."""


@dataclass(frozen=True)
class CrossSection:
    """Cross-section ``omega``: an axis-aligned box, optionally cut down by
    a membership predicate (e.g. the ellipse under an ellipsoid).

    ``membership`` maps ``(m, dim)`` points to a signed level value that is
    positive inside, zero on the boundary and negative outside.
    """

    lower: tuple
    upper: tuple
    membership: object = None

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ProfileError("cross-section bounds must have matching, non-zero length")
        if not all(np.isfinite(lo + hi)) or any(a >= b for a, b in zip(lo, hi)):
            raise ProfileError(f"invalid cross-section bounds {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def interval(cls, lo, hi):
        return cls((lo,), (hi,))

    @property
    def dim(self):
        return len(self.lower)

    @property
    def diameter(self):
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def level(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo, hi = np.array(self.lower), np.array(self.upper)
        box = np.min(np.minimum(x - lo, hi - x) / (hi - lo), axis=1)
        if self.membership is None:
            return box
        return np.minimum(box, np.asarray(self.membership(x), dtype=float))

    def contains(self, x):
        """Strict interior test for a batch of points."""
        return self.level(x) > 0

    def classify(self, x, tol=1e-12):
        """``'interior'``, ``'boundary'`` or ``'exterior'`` for one point."""
        lv = float(self.level(np.reshape(x, (1, self.dim)))[0])
        if lv > tol:
            return "interior"
        return "boundary" if lv >= -tol else "exterior"

    def sample_interior(self, count, rng=None, margin=0.0):
        """Uniform random interior points, at relative depth > ``margin``."""
        rng = np.random.default_rng(rng)
        lo, hi = np.array(self.lower), np.array(self.upper)
        out = []
        while sum(len(o) for o in out) < count:
            pts = lo + (hi - lo) * rng.random((2 * count + 8, self.dim))
            out.append(pts[self.level(pts) > margin])
        return np.concatenate(out)[:count]


@dataclass(frozen=True)
class DomainProfile:
    omega: CrossSection
    h_minus: F.ScalarField
    h_plus: F.ScalarField
    d: F.ScalarField
    p: F.ScalarField
    H: F.ScalarField
    name: str = "custom"
    tabulated: bool = False
    tol_boundary: float = 1e-8
    warnings: tuple = ()
    source: dict = field(default=None, compare=False)
    # optional lower bound on the distance to the thin-domain boundary,
    # called as distance(points, eps) for physical points of shape (m, n)
    distance: object = field(default=None, compare=False)

    @property
    def dim(self):
        """Dimension of the cross-section (n - 1)."""
        return self.omega.dim

    def heights(self, x):
        return self.h_minus(x), self.h_plus(x)

    def contains(self, x, xi):
        """Whether ``(x', xi)`` lies strictly inside the rescaled domain."""
        pts = np.atleast_2d(np.asarray(x, dtype=float).reshape(-1, self.dim))
        xi = np.asarray(xi, dtype=float).reshape(-1)
        inside = self.omega.contains(pts)
        out = np.zeros(pts.shape[0], dtype=bool)
        if inside.any():
            hm = self.h_minus(pts[inside])
            hp = self.h_plus(pts[inside])
            out[inside] = (xi[inside] > -hm) & (xi[inside] < hp)
        return out

    def at(self, epsilon):
        return ThinDomain(self, epsilon)


@dataclass(frozen=True)
class ThinDomain:
    profile: DomainProfile
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ProfileError("epsilon must be positive")

    def contains(self, points):
        """Strict membership for physical points of shape ``(m, n)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.profile.contains(pts[:, :-1], pts[:, -1] / self.epsilon)


def _validate(omega, h_minus, h_plus, d, p, H, tol_boundary, samples=400, check_identity=False):
    """Sampled sanity checks; returns warnings, raises on negative thickness."""
    notes = []
    pts = omega.sample_interior(samples, rng=12345, margin=1e-6)
    with np.errstate(invalid="ignore"):
        Hv = H(pts)
    if np.any(~np.isfinite(Hv)):
        raise ProfileError("thickness H is not finite at interior samples")
    if np.any(Hv < 0):
        bad = pts[np.argmin(Hv)]
        raise ProfileError(f"thickness H < 0 at interior point {bad.tolist()}")
    if np.any(Hv <= tol_boundary):
        notes.append(f"H is nearly zero at {int(np.sum(Hv <= tol_boundary))} interior samples")
    if check_identity:
        resid = d(pts) ** 2 + 4 * p(pts) - Hv ** 2
        scale = max(1.0, float(np.max(Hv ** 2)))
        if np.max(np.abs(resid)) > 1e-10 * scale:
            raise ProfileError("d^2 + 4p differs from H^2; inconsistent profile fields")
    # boundary: endpoints of intervals / faces of boxes
    if omega.membership is None:
        bpts = _box_boundary_samples(omega)
        with np.errstate(invalid="ignore"):
            Hb = H(bpts)
        if np.any(np.abs(Hb) > tol_boundary):
            notes.append(f"H does not vanish on the cross-section boundary (max {np.nanmax(np.abs(Hb)):.3g})")
    for n in notes:
        log.warning(n)
    return tuple(notes)


def _box_boundary_samples(omega, per_face=16):
    lo, hi = np.array(omega.lower), np.array(omega.upper)
    if omega.dim == 1:
        return np.array([[lo[0]], [hi[0]]])
    rng = np.random.default_rng(0)
    out = []
    for k in range(omega.dim):
        for v in (lo[k], hi[k]):
            pts = lo + (hi - lo) * rng.random((per_face, omega.dim))
            pts[:, k] = v
            out.append(pts)
    return np.concatenate(out)


def make_profile(omega, h_minus, h_plus, name="custom", tol_boundary=1e-8, tabulated=False,
                 source=None):
    """Build a profile from the two heights; ``d``, ``p`` and ``H`` are derived."""
    if not (omega.dim == h_minus.dim == h_plus.dim):
        raise ProfileError(
            f"dimension mismatch: omega {omega.dim}, h_minus {h_minus.dim}, h_plus {h_plus.dim}")
    d = (h_plus - h_minus).relabel("d")
    p = (h_plus * h_minus).relabel("p")
    H = (h_plus + h_minus).relabel("H")
    notes = _validate(omega, h_minus, h_plus, d, p, H, tol_boundary)
    return DomainProfile(omega, h_minus, h_plus, d, p, H, name=name, tabulated=tabulated,
                         tol_boundary=tol_boundary, warnings=notes, source=source)


# builtin profiles -------------------------------------------------------------

def _symmetric(omega, h, p, name, distance=None, source=None):
    dim = omega.dim
    H = (2.0 * h).relabel("H")
    d = F.Constant(0.0, dim, label="d")
    notes = _validate(omega, h, h, d, p, H, 1e-8, check_identity=True)
    return DomainProfile(omega, h, h, d, p.relabel("p"), H, name=name, warnings=notes,
                         source=source, distance=distance)


def _folium():
    x = F.coordinate(0)
    p = (1.0 - x) * x ** 2 / (3.0 * x + 1.0)
    h = x * ((1.0 - x) / (1.0 + 3.0 * x)).sqrt()
    return _symmetric(CrossSection.interval(0.0, 1.0), h.relabel("h"), p, "folium")


def _lemniscate():
    x = F.coordinate(0)
    p = -0.5 - x ** 2 + 0.5 * (1.0 + 8.0 * x ** 2).sqrt()
    return _symmetric(CrossSection.interval(0.0, 1.0), p.sqrt().relabel("h"), p, "lemniscate")


def _parabolic_lens():
    x = F.coordinate(0)
    h = 0.5 * (1.0 - x ** 2)
    return _symmetric(CrossSection.interval(-1.0, 1.0), h.relabel("h"), h * h, "parabolic-lens")


def _ellipsoid(axes=(1.0,), a_n=1.0):
    axes = tuple(float(a) for a in np.atleast_1d(axes))
    if not axes or any(a <= 0 for a in axes) or a_n <= 0:
        raise ProfileError("ellipsoid semi-axes must be positive")
    dim = len(axes)
    q = F.Constant(0.0, dim)
    for k, a in enumerate(axes):
        q = q + (F.coordinate(k, dim) / a) ** 2
    s = 1.0 - q
    p = a_n ** 2 * s
    h = (a_n * s.sqrt()).relabel("h")
    inv = np.array(axes)

    def membership(x):
        return 1.0 - np.sum((x / inv) ** 2, axis=1)

    def distance(points, eps):
        # |x|_A is Lipschitz with constant 1/min(a); exact for balls
        semi = np.append(inv, a_n * eps)
        g = np.sqrt(np.sum((points / semi) ** 2, axis=1))
        return np.maximum(1.0 - g, 0.0) * semi.min()

    omega = CrossSection(tuple(-inv), tuple(inv), membership)
    return _symmetric(omega, h, p, "ellipsoid", distance=distance,
                      source={"builtin": "ellipsoid", "axes": list(axes), "a_n": a_n})


BUILTINS = {
    "folium": _folium,
    "lemniscate": _lemniscate,
    "ellipsoid": _ellipsoid,
    "parabolic-lens": _parabolic_lens,
}


def builtin(name, **params):
    """One of the builtin profiles.

    ``ellipsoid`` takes ``axes`` (the cross-section semi-axes
    ``a_1..a_{n-1}``) and ``a_n`` (the semi-axis along the thin direction).
    ``disc`` is shorthand for the ellipsoid with ``axes=(1,)``, ``a_n=1``.
    """
    if name == "disc":
        return _ellipsoid((1.0,), 1.0)
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ProfileError(f"unknown builtin profile {name!r}; "
                           f"choose from {sorted(BUILTINS) + ['disc']}") from None
    return factory(**params)


# config documents --------------------------------------------------------------

_TOP_KEYS = {"name", "omega", "h_plus", "h_minus", "tol_boundary"}


def _spline_field(xs, ys, label):
    spl = CubicSpline(xs, ys, bc_type="natural", extrapolate=True)
    d1, d2 = spl.derivative(1), spl.derivative(2)
    return F.from_callable(lambda x: spl(x[:, 0]), 1,
                           grad=lambda x: d1(x[:, 0])[:, None],
                           hess=lambda x: d2(x[:, 0])[:, None, None],
                           lap=lambda x: d2(x[:, 0]), label=label)


def _height_from_doc(entry, key):
    if not isinstance(entry, dict) or len(entry) != 1 or next(iter(entry)) not in ("poly", "table"):
        raise ProfileError(f"{key} must be an object with exactly one of 'poly' or 'table'")
    if "poly" in entry:
        coeffs = entry["poly"]
        if not isinstance(coeffs, list) or not coeffs:
            raise ProfileError(f"{key}.poly must be a non-empty list of numbers")
        c = np.asarray(coeffs, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ProfileError(f"{key}.poly has non-finite coefficients")
        return F.polynomial(c.tolist()).relabel(key), False
    table = entry["table"]
    if not isinstance(table, dict) or set(table) != {"x", "y"}:
        raise ProfileError(f"{key}.table must have exactly the keys 'x' and 'y'")
    xs = np.asarray(table["x"], dtype=float)
    ys = np.asarray(table["y"], dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 4:
        raise ProfileError(f"{key}.table needs matching x/y lists with at least 4 samples")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise ProfileError(f"{key}.table has non-finite samples")
    if np.any(np.diff(xs) <= 0):
        raise ProfileError(f"{key}.table x values must be strictly increasing")
    return _spline_field(xs, ys, key), True


def load_profile(document):
    """Build a profile from a config document.

    ``document`` is a mapping, a JSON string, or a path to a JSON file::

        {"name": "lens",
         "omega": [-1, 1],
         "h_plus":  {"poly": [0.5, 0, -0.5]},
         "h_minus": {"table": {"x": [...], "y": [...]}},
         "tol_boundary": 1e-8}            # optional

    Only one-dimensional cross-sections are supported.  ``omega`` may also
    be given per axis, ``[[lo, hi]]``.  Unknown keys are rejected.
    """
    doc = document
    if isinstance(doc, (str, Path)):
        text = str(doc)
        if not text.lstrip().startswith("{"):
            text = Path(doc).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProfileError(f"profile document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not doc:
        raise ProfileError("profile document must be a non-empty object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ProfileError(f"unknown keys in profile document: {sorted(unknown)}")
    missing = {"omega", "h_plus", "h_minus"} - set(doc)
    if missing:
        raise ProfileError(f"profile document lacks {sorted(missing)}")
    omega = doc["omega"]
    if isinstance(omega, list) and len(omega) == 1 and isinstance(omega[0], list):
        omega = omega[0]
    if not (isinstance(omega, list) and len(omega) == 2
            and all(isinstance(v, (int, float)) for v in omega)):
        raise ProfileError("omega must be [lo, hi] (one-dimensional cross-sections only)")
    cs = CrossSection.interval(float(omega[0]), float(omega[1]))
    hp, tab_p = _height_from_doc(doc["h_plus"], "h_plus")
    hm, tab_m = _height_from_doc(doc["h_minus"], "h_minus")
    tabulated = tab_p or tab_m
    tol = float(doc.get("tol_boundary", 1e-4 if tabulated else 1e-8))
    return make_profile(cs, hm, hp, name=str(doc.get("name", "custom")), tol_boundary=tol,
                        tabulated=tabulated, source=json.loads(json.dumps(doc)))


def save_profile(profile, path=None):
    """Config document for a profile that was loaded from one."""
    if profile.source is None or "builtin" in profile.source:
        raise ProfileError(f"profile {profile.name!r} was not built from a config document")
    doc = json.loads(json.dumps(profile.source))
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2))
    return doc


def warn_tabulated(profile, order):
    """Tabulated heights cannot supply the derivative orders high N needs."""
    if profile.tabulated and order > 2:
        warnings.warn(f"profile {profile.name!r} is tabulated; derivatives needed for "
                      f"order {order} come from differences of a spline and are low-confidence",
                      RuntimeWarning, stacklevel=3)


def peak_height(profile, samples=2001):
    """Coarse sampled maximum of the heights, used for bounding boxes."""
    if profile.dim == 1:
        lo, hi = profile.omega.lower[0], profile.omega.upper[0]
        t = np.linspace(lo, hi, samples)[1:-1]
        hm, hp = profile.h_minus(t), profile.h_plus(t)
    else:
        pts = profile.omega.sample_interior(samples, rng=1)
        hm, hp = profile.h_minus(pts), profile.h_plus(pts)
    return float(np.nanmax(hm)), float(np.nanmax(hp))
