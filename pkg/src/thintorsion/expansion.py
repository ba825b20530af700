"""Two-scale expansion of the torsion function.

In the rescaled variables ``(x', xi)`` with ``xi = x_n / eps`` the torsion
function is approximated by

    u_eps^N(x', xi) = sum_{j=1..N} eps**(2j) u_{2j}(x', xi),

where each ``u_{2j}`` is a polynomial in ``xi`` whose coefficients
``alpha_i^(2j)`` are fields on the cross-section.  The coefficients follow
from solving ``-d^2 u_{2j}/dxi^2 = lap u_{2j-2}`` with zero data at
``xi = h_plus`` and ``xi = -h_minus``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import fields as F
from .geometry import warn_tabulated

__all__ = [
    "XiPolynomial",
    "ExpansionSeries",
    "build_expansion",
    "eval_u",
    "closed_form_u",
    "pde_residual",
    "geometric_sum",
    "DomainError",
]

# below this thickness the closed geometric sum is replaced by the literal one
H_GUARD = 1e-12


class DomainError(ValueError):
    """A point lies outside the (rescaled) thin domain."""


@dataclass(frozen=True)
class XiPolynomial:
    """``sum_i coeffs[i](x') * xi**i`` with field coefficients."""

    coeffs: tuple

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x, xi):
        xi = np.asarray(xi, dtype=float)
        vals = [c(x) for c in self.coeffs]
        return _horner(vals, xi)

    def coefficient_values(self, x):
        return [np.asarray(c(x), dtype=float) for c in self.coeffs]

    def d_xi(self, x, xi):
        vals = [i * np.asarray(c(x)) for i, c in enumerate(self.coeffs)][1:]
        return _horner(vals, np.asarray(xi, dtype=float)) if vals else 0.0 * np.asarray(xi)

    def d2_xi(self, x, xi):
        vals = [i * (i - 1) * np.asarray(c(x)) for i, c in enumerate(self.coeffs)][2:]
        return _horner(vals, np.asarray(xi, dtype=float)) if vals else 0.0 * np.asarray(xi)

    def laplacian_x(self):
        return XiPolynomial(tuple(c.laplacian() for c in self.coeffs))

    def partial_x(self, k):
        return XiPolynomial(tuple(c.partial(k) for c in self.coeffs))

    def integral_xi(self, h_minus, h_plus):
        """Field ``x' -> integral of the polynomial over (-h_minus, h_plus)``."""
        terms = []
        for i, c in enumerate(self.coeffs):
            if c.is_zero:
                continue
            k = i + 1
            terms.append(c * (h_plus ** k - (-h_minus) ** k) / float(k))
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out


def _horner(vals, xi):
    out = np.zeros(np.broadcast(xi, vals[-1]).shape) + vals[-1]
    for v in reversed(vals[:-1]):
        out = out * xi + v
    return out


def geometric_sum(h_plus, h_minus, H, i):
    """Field ``sum_{m<i} h_plus**m (-h_minus)**(i-m-1)``.

    Evaluated as ``(h_plus**i - (-h_minus)**i) / H`` except where the
    thickness ``H`` drops below :data:`H_GUARD`, where the literal sum is
    used instead.
    """
    neg = -h_minus
    literal = F.Constant(0.0, h_plus.dim)
    for m in range(i):
        literal = literal + h_plus ** m * neg ** (i - m - 1)
    closed = (h_plus ** i - neg ** i) / H
    return F.switch(H, H_GUARD, literal, closed)


@dataclass(frozen=True)
class ExpansionSeries:
    """Coefficient table ``alpha_i^(2j)`` for ``j = 1..order``.

    ``coefficients[j - 1][i]`` is ``alpha_i^(2j)``, ``i = 0..2j-1``.
    """

    profile: object
    order: int
    coefficients: tuple

    def alpha(self, i, j):
        row = self.coefficients[j - 1]
        return row[i] if i < len(row) else F.Constant(0.0, self.profile.dim)

    def term(self, j):
        """``u_{2j}`` as a polynomial in ``xi``."""
        return XiPolynomial(self.coefficients[j - 1])

    def __call__(self, x, xi, epsilon):
        return eval_u(self, x, xi, epsilon)


def build_expansion(profile, order, force=False):
    """Fill the coefficient table up to ``u_{2*order}`` by the recursion.

    Parameters
    ----------
    profile : DomainProfile
    order : int
        Number of terms ``N >= 1``.
    force : bool
        Allow ``order > 3`` on tabulated profiles.
    """
    if order < 1:
        raise ValueError("expansion order must be >= 1")
    if profile.tabulated and order > 3 and not force:
        raise ValueError(f"order {order} needs more derivatives than the tabulated profile "
                         f"{profile.name!r} can supply; pass force=True to override")
    warn_tabulated(profile, order)
    if order > 3:
        warnings.warn("orders above 3 are limited by derivative accuracy", RuntimeWarning,
                      stacklevel=2)
    dim = profile.dim
    hp, hm, H = profile.h_plus, profile.h_minus, profile.H
    rows = [(profile.p, profile.d, F.Constant(-1.0, dim))]
    sums = {}
    for j in range(2, order + 1):
        prev = rows[-1]
        upper = [(-1.0 / (i * (i - 1))) * prev[i - 2].laplacian() if i - 2 < len(prev)
                 else F.Constant(0.0, dim) for i in range(2, 2 * j + 1)]
        top = upper.pop()
        if not top.is_zero:
            probe = profile.omega.sample_interior(32, rng=7, margin=0.05)
            if np.max(np.abs(top(probe))) > 1e-8:
                raise ArithmeticError(f"alpha_{2 * j}^({2 * j}) does not vanish")
        a1 = F.Constant(0.0, dim)
        a0 = F.Constant(0.0, dim)
        for i, a in enumerate(upper, start=2):
            if a.is_zero:
                continue
            if i not in sums:
                sums[i] = geometric_sum(hp, hm, H, i)
            a1 = a1 - a * sums[i]
            a0 = a0 - a * hp ** i
        a0 = a0 - a1 * hp
        rows.append(tuple([a0.relabel(f"alpha_0^({2 * j})"), a1.relabel(f"alpha_1^({2 * j})")]
                          + [a.relabel(f"alpha_{i}^({2 * j})") for i, a in enumerate(upper, start=2)]))
    return ExpansionSeries(profile, int(order), tuple(rows))


def _check_inside(profile, x, xi, tol=1e-12):
    pts = np.asarray(x, dtype=float).reshape(-1, profile.dim)
    xi = np.broadcast_to(np.asarray(xi, dtype=float).reshape(-1), (pts.shape[0],))
    inside = profile.omega.contains(pts)
    if not np.all(inside):
        bad = pts[np.argmin(inside)]
        raise DomainError(f"x'={bad.tolist()} is not interior to the cross-section")
    hm, hp = profile.h_minus(pts), profile.h_plus(pts)
    scale = np.maximum(1.0, np.abs(xi))
    out = (xi < -hm - tol * scale) | (xi > hp + tol * scale)
    if np.any(out):
        k = int(np.argmax(out))
        raise DomainError(f"(x'={pts[k].tolist()}, xi={xi[k]}) lies outside the domain "
                          f"(-{hm[k]:.6g} <= xi <= {hp[k]:.6g})")
    return pts, xi


def eval_u(series, x, xi, epsilon):
    """Truncated series ``sum_j eps**(2j) u_{2j}(x', xi)``.

    ``x`` is one point or a batch; ``xi`` broadcasts against it.
    """
    pts, xis = _check_inside(series.profile, x, xi)
    e2 = float(epsilon) ** 2
    total = np.zeros(pts.shape[0])
    for j in range(series.order, 0, -1):
        total = (total + series.term(j)(pts, xis)) * e2
    single = np.ndim(xi) == 0 and np.asarray(x, dtype=float).size == series.profile.dim
    return float(total[0]) if single else total


def closed_form_u(profile, j):
    """``u_2``, ``u_4`` or ``u_6`` assembled from the explicit formulas.

    This builds the coefficients directly from ``d``, ``p`` and their
    (bi-)Laplacians and does not call the recursion.
    """
    d, p = profile.d, profile.p
    if j == 1:
        return XiPolynomial((p, d, F.Constant(-1.0, profile.dim)))
    ld, lp = d.laplacian(), p.laplacian()
    q = d * d + p
    if j == 2:
        a1 = q * ld / 6.0 + d * lp / 2.0
        a0 = d * p * ld / 6.0 + p * lp / 2.0
        return XiPolynomial((a0, a1, -lp / 2.0, -ld / 6.0))
    if j == 3:
        l2d, l2p = ld.laplacian(), lp.laplacian()
        inner3 = (q * ld + 3.0 * d * lp).laplacian()
        inner2 = (d * p * ld + 3.0 * p * lp).laplacian()
        a1 = (d * inner2 / 12.0
              + q * (3.0 * d * lp + q * ld).laplacian() / 36.0
              - d * (d * d + 2.0 * p) * l2p / 24.0
              - (d ** 4 + 3.0 * d * d * p + p * p) * l2d / 120.0)
        a0 = (p * inner2 / 12.0
              + d * p * inner3 / 36.0
              - p * q * l2p / 24.0
              - d * p * (d * d + 2.0 * p) * l2d / 120.0)
        return XiPolynomial((a0, a1, -inner2 / 12.0, -inner3 / 36.0, l2p / 24.0, l2d / 120.0))
    raise ValueError("closed forms exist for j = 1, 2, 3 only")


def pde_residual(series, epsilon, samples):
    """Sup over samples of ``|(-eps^2 lap_x' - d^2/dxi^2) u_eps^N - 2 eps^2|``.

    ``samples`` is a pair ``(points, xis)`` or an iterable of
    ``(point, xi)`` pairs, all interior to the rescaled domain.
    """
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[1]) == 1:
        pts, xis = samples
    else:
        pairs = list(samples)
        pts = np.array([np.atleast_1d(p) for p, _ in pairs], dtype=float)
        xis = np.array([xi for _, xi in pairs], dtype=float)
    pts, xis = _check_inside(series.profile, pts, xis)
    e2 = float(epsilon) ** 2
    res = np.full(pts.shape[0], -2.0 * e2)
    for j in range(1, series.order + 1):
        u = series.term(j)
        try:
            lap = u.laplacian_x()(pts, xis)
        except F.StencilError as exc:
            raise F.StencilError(f"Laplacian of u_{2 * j} failed: {exc}") from None
        res += e2 ** j * (-e2 * lap - u.d2_xi(pts, xis))
    return float(np.max(np.abs(res)))
