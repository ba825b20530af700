"""Torsional rigidity series and the quadrature behind it.

The rigidity of the thin domain expands as

    T(eps) = c3 eps^3 + c5 eps^5 + c7 eps^7 + O(eps^8),

with ``c3 = (1/6) int H^3`` and ``c5 = (1/24) int H^3 (d lap d + 2 lap p)``.
Two independent routes are offered: :func:`torsion_series` integrates the
explicit integrands, :func:`torsion_series_direct` integrates each
``u_{2j}`` exactly in ``xi`` and then over the cross-section.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields as F
from .expansion import build_expansion, closed_form_u

__all__ = [
    "QuadratureError",
    "quadrature",
    "integrate_interval",
    "TorsionSeries",
    "torsion_series",
    "torsion_series_direct",
    "volume",
    "torsion_integrands",
]

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance within budget."""


def integrate_interval(func, lo, hi, tol=1e-9, max_panels=50000):
    """Adaptive Gauss-Kronrod (7/15) quadrature of a vectorized function.

    Nodes are interior to every panel, so ``func`` is never called at
    ``lo`` or ``hi``.  Panels with the largest Kronrod-Gauss discrepancy
    are bisected until the summed estimate drops below ``tol``.

    Returns
    -------
    value, error_estimate : float
    """
    a = np.array([float(lo)])
    b = np.array([float(hi)])
    done_val = 0.0
    done_err = 0.0
    while True:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _XK[None, :]
        vals = np.asarray(func(nodes.ravel()), dtype=float).reshape(nodes.shape)
        if not np.all(np.isfinite(vals)):
            bad = nodes[~np.isfinite(vals)][0]
            raise QuadratureError(f"integrand is not finite at x={bad:.17g}")
        k = half * (vals @ _WK)
        g = half * (vals @ _WG)
        err = np.abs(k - g)
        total_err = done_err + err.sum()
        if total_err <= tol:
            return float(done_val + k.sum()), float(total_err)
        if a.size + 1 > max_panels:
            raise QuadratureError(f"no convergence with {a.size} panels "
                                  f"(error estimate {total_err:.3g} > {tol:.3g})")
        # bisect the worst panels, freeze the rest
        share = max(tol - done_err, 0.0) / (2 * err.size)
        split = err > share
        split[np.argmax(err)] = True
        done_val += float(k[~split].sum())
        done_err += float(err[~split].sum())
        a, b, m = a[split], b[split], mid[split]
        if np.any(b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(m))):
            raise QuadratureError("panel width reached machine resolution")
        a, b = np.concatenate([a, m]), np.concatenate([m, b])


def quadrature(field, omega, tol=1e-9, full_output=False):
    """Integral of a scalar field over the cross-section.

    One-dimensional sections use :func:`integrate_interval` directly; boxes
    in two dimensions use nested adaptive quadrature, with the field taken
    as zero outside the membership predicate.
    """
    if omega.dim == 1:
        lo, hi = omega.lower[0], omega.upper[0]
        value, err = integrate_interval(lambda t: field(t.reshape(-1, 1)), lo, hi, tol)
    elif omega.dim == 2:
        (x0, y0), (x1, y1) = omega.lower, omega.upper
        errs = []

        def inner(xs):
            out = np.empty(xs.size)
            for n, xv in enumerate(xs):
                def g(ys, xv=xv):
                    pts = np.column_stack([np.full(ys.size, xv), ys])
                    vals = np.zeros(ys.size)
                    inside = omega.contains(pts)
                    if inside.any():
                        vals[inside] = field(pts[inside])
                    return vals
                out[n], e = integrate_interval(g, y0, y1, tol / 10)
                errs.append(e)
            return out

        value, err = integrate_interval(inner, x0, x1, tol)
        err += (x1 - x0) * max(errs, default=0.0)
    else:
        raise NotImplementedError("quadrature supports cross-sections of dimension 1 or 2")
    return (value, err) if full_output else value


@dataclass(frozen=True)
class TorsionSeries:
    """Coefficients of ``eps^3``, ``eps^5``, ``eps^7`` in the rigidity."""

    c3: float
    c5: float
    c7: float
    quadrature_error_estimate: float = 0.0

    def __call__(self, epsilon, terms=3):
        e = float(epsilon)
        coeffs = (self.c3, self.c5, self.c7)[:terms]
        return sum(c * e ** (3 + 2 * k) for k, c in enumerate(coeffs))

    def as_tuple(self):
        return (self.c3, self.c5, self.c7)


def torsion_integrands(profile):
    """The three cross-section integrands of the rigidity expansion."""
    d, p, H = profile.d, profile.p, profile.H
    ld, lp = d.laplacian(), p.laplacian()
    l2d, l2p = ld.laplacian(), lp.laplacian()
    H3 = H ** 3
    q = d * d + p
    u6 = closed_form_u(profile, 3)
    a0, a1 = u6.coeffs[0], u6.coeffs[1]
    i3 = H3 / 6.0
    i5 = H3 * (d * ld + 2.0 * lp) / 24.0
    i7 = ((H3 * d ** 3 + 3.0 * d * p * p * H) * l2d / 720.0
          + (H3 * d * d + p * H * (p - d * d)) * l2p / 120.0
          - (H3 * d - 2.0 * d * p * H) * (q * ld + 3.0 * d * lp).laplacian() / 144.0
          - (H3 - 3.0 * p * H) * (d * p * ld + 3.0 * p * lp).laplacian() / 36.0
          + 0.5 * d * H * a1 + H * a0)
    return i3, i5, i7


def torsion_series(profile, tol=None):
    """Rigidity coefficients by quadrature of the explicit integrands."""
    if tol is None:
        tol = 1e-6 if profile.tabulated else 1e-9
    vals, errs = zip(*(quadrature(f, profile.omega, tol, full_output=True)
                       for f in torsion_integrands(profile)))
    return TorsionSeries(*vals, quadrature_error_estimate=max(errs))


def torsion_series_direct(series, tol=None):
    """Rigidity coefficients from exact ``xi``-integration of each ``u_{2j}``.

    ``series`` is an :class:`ExpansionSeries` (order >= 3 for ``c7``) or a
    profile, in which case a third-order expansion is built.
    """
    if not hasattr(series, "term"):
        series = build_expansion(series, 3)
    profile = series.profile
    if tol is None:
        tol = 1e-6 if profile.tabulated else 1e-9
    vals, errs = [], []
    for j in range(1, 4):
        if j > series.order:
            vals.append(float("nan"))
            continue
        f = series.term(j).integral_xi(profile.h_minus, profile.h_plus)
        v, e = quadrature(f, profile.omega, tol, full_output=True)
        vals.append(v)
        errs.append(e)
    return TorsionSeries(*vals, quadrature_error_estimate=max(errs))


def volume(profile, epsilon, tol=1e-10):
    """Measure of the thin domain, ``eps * int H``."""
    if epsilon == 0:
        return 0.0
    return float(epsilon) * quadrature(profile.H, profile.omega, tol)
