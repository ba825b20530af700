"""Maximum and maximizer of the torsion function on thin domains.

The leading behaviour is governed by the thickness peak ``x_bar`` of
``H``: the maximum is ``H0^2/4 eps^2 + c4 eps^4 + O(eps^5)`` and the
maximizer moves away from ``(x_bar, d0/2)`` by ``O(eps^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fields as F

__all__ = [
    "HypothesisError",
    "PeakJet",
    "MaxExpansion",
    "find_peak",
    "peak_jet",
    "max_series",
    "numeric_max",
    "ellipsoid_max_error",
]


class HypothesisError(ArithmeticError):
    """The thickness peak is missing, not unique, or degenerate."""


def _definite(hess, H0, omega):
    # eigenvalues must be clearly negative relative to the peak's curvature scale
    return bool(np.all(np.linalg.eigvalsh(hess) < -1e-6 * abs(H0) / omega.diameter ** 2))


@dataclass(frozen=True)
class PeakJet:
    """Local data of ``d``, ``p`` and ``H`` at the thickness peak.

    ``D2``, ``P2``, ``H2`` are half-Hessians; ``sigma_delta`` and
    ``sigma_pi`` are ``grad(lap d)/6`` and ``grad(lap p)/6``.
    """

    x_bar: np.ndarray
    H0: float
    d0: float
    d1: np.ndarray
    p0: float
    p1: np.ndarray
    D2: np.ndarray
    P2: np.ndarray
    H2: np.ndarray
    sigma_delta: np.ndarray
    sigma_pi: np.ndarray

    def matrix_identity_residual(self):
        """``d0 D2 + 2 P2 + d1 d1^T / 2 - H0 H2`` (vanishes when grad H = 0)."""
        return (self.d0 * self.D2 + 2 * self.P2 + 0.5 * np.outer(self.d1, self.d1)
                - self.H0 * self.H2)

    def gradient_identity_residual(self):
        """``p1 + d0 d1 / 2``."""
        return self.p1 + 0.5 * self.d0 * self.d1


@dataclass(frozen=True)
class MaxExpansion:
    jet: PeakJet
    c2: float
    c4: float
    xm2: np.ndarray
    xi_n2: float

    def value(self, epsilon):
        e2 = float(epsilon) ** 2
        return self.c2 * e2 + self.c4 * e2 * e2

    def maximizer(self, epsilon):
        """Two-term approximation ``(x', xi)`` of the maximizer."""
        e2 = float(epsilon) ** 2
        return self.jet.x_bar + self.xm2 * e2, 0.5 * self.jet.d0 + self.xi_n2 * e2


def _start_grid(omega, count=16):
    lo, hi = np.array(omega.lower), np.array(omega.upper)
    per_axis = max(2, int(round(count ** (1.0 / omega.dim))))
    axes = [lo[k] + (hi[k] - lo[k]) * (np.arange(per_axis) + 0.5) / per_axis
            for k in range(omega.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, omega.dim)
    return pts[omega.contains(pts)]


def _ascend(value, grad, hess, inside, x, gtol=1e-6, ntol=1e-12, max_iter=500):
    """Damped Newton ascent; gradient steps while the Hessian is indefinite."""
    fx = value(x)
    for _ in range(max_iter):
        g = grad(x)
        gnorm = np.linalg.norm(g)
        if gnorm < ntol:
            return x, True
        Hm = hess(x)
        step = None
        if np.all(np.linalg.eigvalsh(Hm) < 0):
            step = -np.linalg.solve(Hm, g)
        if step is None or gnorm > gtol and not np.dot(step, g) > 0:
            step = g * (0.1 / max(gnorm, 1e-300))
        for _ in range(80):
            xn = x + step
            if inside(xn):
                fn = value(xn)
                if np.isfinite(fn) and fn >= fx - 1e-15 * abs(fx):
                    break
            step = step / 2
        else:
            return x, gnorm < 1e-9
        if np.linalg.norm(step) < 1e-16 * max(1.0, np.linalg.norm(x)):
            return xn, np.linalg.norm(grad(xn)) < 1e-9
        x, fx = xn, fn
    return x, False


def find_peak(profile, starts=16):
    """Unique interior maximizer of the thickness ``H``.

    Multi-start damped Newton ascent from a coarse grid of ``starts``
    points.  Raises :class:`HypothesisError` when no interior stationary
    point is found, when distinct points share the maximal value, or when
    the Hessian there is not negative definite.
    """
    H, dim, omega = profile.H, profile.dim, profile.omega
    value = lambda x: H(x)
    grad = lambda x: F.gradient(H, x)
    hess = lambda x: F.hessian(H, x)
    inside = lambda x: bool(omega.contains(x.reshape(1, dim))[0])
    found = []
    with np.errstate(invalid="ignore", divide="ignore"):
        for x0 in _start_grid(omega, starts):
            x, ok = _ascend(value, grad, hess, inside, x0.copy())
            if ok and np.isfinite(value(x)):
                found.append((value(x), x))
    if not found:
        raise HypothesisError(f"no interior stationary point of H found for {profile.name!r}")
    best_val, best = max(found, key=lambda t: t[0])
    scale = max(omega.diameter, 1.0)
    # limits closer than 1e-3 * scale are one peak (slow ascent on flat tops)
    for val, x in found:
        if np.linalg.norm(x - best) > 1e-3 * scale and abs(val - best_val) <= 1e-9 * abs(best_val):
            raise HypothesisError(f"H attains its maximum at several points, e.g. {best.tolist()} "
                                  f"and {x.tolist()} (hypothesis H1)")
    if not _definite(hess(best), best_val, omega):
        eig = np.linalg.eigvalsh(hess(best))
        raise HypothesisError(f"Hessian of H at {best.tolist()} is not negative definite "
                              f"(eigenvalues {eig.tolist()}; hypothesis H2)")
    return best


def peak_jet(profile, x_bar=None):
    """Values, gradients, half-Hessians and third-order sums at the peak."""
    if x_bar is None:
        x_bar = find_peak(profile)
    x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
    d, p, H = profile.d, profile.p, profile.H
    jet = PeakJet(
        x_bar=x_bar,
        H0=H(x_bar),
        d0=d(x_bar),
        d1=F.gradient(d, x_bar),
        p0=p(x_bar),
        p1=F.gradient(p, x_bar),
        D2=F.hessian(d, x_bar) / 2,
        P2=F.hessian(p, x_bar) / 2,
        H2=F.hessian(H, x_bar) / 2,
        sigma_delta=F.third_order_sums(d, x_bar),
        sigma_pi=F.third_order_sums(p, x_bar),
    )
    if not _definite(jet.H2, jet.H0, profile.omega):
        raise HypothesisError("H2 is not negative definite (hypothesis H2)")
    return jet


def max_series(profile_or_jet):
    """Two-term expansion of the maximum and of the maximizer."""
    jet = profile_or_jet if isinstance(profile_or_jet, PeakJet) else peak_jet(profile_or_jet)
    H0, d0, d1 = jet.H0, jet.d0, jet.d1
    trD2, trP2 = np.trace(jet.D2), np.trace(jet.P2)
    try:
        H2inv = np.linalg.inv(jet.H2)
    except np.linalg.LinAlgError:
        raise HypothesisError("H2 is singular (hypothesis H2)") from None
    source = jet.sigma_pi + 0.5 * d0 * jet.sigma_delta
    c2 = 0.25 * H0 ** 2
    c4 = 0.125 * H0 ** 2 * (d0 * trD2 + 2 * trP2)
    xm2 = -0.25 * H0 * (0.5 * trD2 * H2inv @ d1 + 3 * H2inv @ source)
    xi_n2 = (-0.125 * H0 * (0.5 * trD2 * d1 @ H2inv @ d1 + 3 * d1 @ H2inv @ source)
             + H0 ** 2 * trD2 / 24)
    return MaxExpansion(jet, float(c2), float(c4), xm2, float(xi_n2))


def numeric_max(series, epsilon, start=None, tol=1e-13, max_iter=200):
    """Maximize the evaluated truncated series by damped Newton ascent.

    Parameters
    ----------
    series : ExpansionSeries
    epsilon : float
    start : (array, float), optional
        Seed ``(x', xi)``; defaults to ``(x_bar, d0/2)``.

    Returns
    -------
    x, xi, value
        Maximizer and the maximum of ``u_eps^N``.
    """
    profile = series.profile
    dim = profile.dim
    if start is None:
        x_bar = find_peak(profile)
        start = (x_bar, 0.5 * profile.d(x_bar))
    e2 = float(epsilon) ** 2
    terms = [series.term(j) for j in range(1, series.order + 1)]
    dx = [[t.partial_x(k) for k in range(dim)] for t in terms]
    dxx = [[[t.partial_x(k).partial_x(l) for l in range(dim)] for k in range(dim)] for t in terms]

    # everything is scaled by eps^-2 so the objective stays O(1)
    def pack(x, xi):
        x1 = x.reshape(1, dim)
        w = [e2 ** j for j in range(len(terms))]
        val = sum(wj * t(x1, xi)[0] for wj, t in zip(w, terms))
        g = np.empty(dim + 1)
        h = np.empty((dim + 1, dim + 1))
        for k in range(dim):
            g[k] = sum(wj * dx[j][k](x1, xi)[0] for j, wj in enumerate(w))
            h[k, dim] = h[dim, k] = sum(wj * dx[j][k].d_xi(x1, xi)[0] for j, wj in enumerate(w))
            for l in range(dim):
                h[k, l] = sum(wj * dxx[j][k][l](x1, xi)[0] for j, wj in enumerate(w))
        g[dim] = sum(wj * t.d_xi(x1, xi)[0] for wj, t in zip(w, terms))
        h[dim, dim] = sum(wj * t.d2_xi(x1, xi)[0] for wj, t in zip(w, terms))
        return val, g, 0.5 * (h + h.T)

    z = np.append(np.asarray(start[0], dtype=float), float(start[1]))

    def inside(z):
        return bool(profile.contains(z[:dim].reshape(1, dim), z[dim:])[0])

    if not inside(z):
        raise ValueError("start point lies outside the domain")
    val, g, h = pack(z[:dim], z[dim:])
    for _ in range(max_iter):
        if np.linalg.norm(g) < tol:
            break
        eig = np.linalg.eigvalsh(h)
        if np.all(eig < 0):
            step = -np.linalg.solve(h, g)
        else:
            step = g * (0.1 / np.linalg.norm(g))
        for _ in range(60):
            zn = z + step
            if inside(zn):
                vn, gn, hn = pack(zn[:dim], zn[dim:])
                if vn >= val - 1e-15 * abs(val):
                    break
            step = step / 2
        else:
            raise ArithmeticError("ascent stalled: maximizer escapes the domain or "
                                  "epsilon is too large for the seed")
        if np.linalg.norm(zn - z) < 1e-16:
            z, val, g, h = zn, vn, gn, hn
            break
        z, val, g, h = zn, vn, gn, hn
    if np.linalg.norm(g) > 1e-9:
        raise ArithmeticError(f"numeric maximization did not converge (|grad| = {np.linalg.norm(g):.3g})")
    return z[:dim].copy(), float(z[dim]), float(e2 * val)


def ellipsoid_max_error(axes, a_n, epsilon):
    """Relative error of the two-term maximum on an ellipsoid.

    ``axes`` are the cross-section semi-axes and ``a_n`` the thin one
    (assumed smallest).  Uses :func:`max_series` on the builtin profile and
    the exact maximum ``1 / (sum 1/a_j^2 + 1/(eps a_n)^2)``.
    """
    from .geometry import builtin

    ms = max_series(peak_jet(builtin("ellipsoid", axes=axes, a_n=a_n),
                             x_bar=np.zeros(len(np.atleast_1d(axes)))))
    exact = 1.0 / (np.sum(1.0 / np.asarray(axes, dtype=float) ** 2) + 1.0 / (epsilon * a_n) ** 2)
    return (exact - ms.value(epsilon)) / exact
