"""Scalar fields on the cross-section with lazy derivative access.

A field is a small immutable expression graph.  Elementary nodes
(constants, coordinates, sums, products, real powers) differentiate
exactly, so nested Laplacians of builtin profiles stay analytic.  Fields
wrapping plain callables fall back to central finite differences.

Points are arrays of shape ``(dim,)`` or batches of shape ``(m, dim)``.
For one-dimensional fields a flat array of length ``m`` is read as a
batch of ``m`` points.
"""

from __future__ import annotations

import numbers

import numpy as np

__all__ = [
    "ScalarField",
    "Constant",
    "Coordinate",
    "CallableField",
    "constant",
    "coordinate",
    "polynomial",
    "from_callable",
    "switch",
    "eval",
    "gradient",
    "hessian",
    "laplacian",
    "third_order_sums",
    "default_step",
    "StencilError",
]

# central-difference weights for the first derivative, keyed by order
_FIRST = {
    2: ((-1, -0.5), (1, 0.5)),
    4: ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)),
    6: ((-3, -1 / 60), (-2, 9 / 60), (-1, -45 / 60),
        (1, 45 / 60), (2, -9 / 60), (3, 1 / 60)),
}


class StencilError(ValueError):
    """A finite-difference stencil left the cross-section."""


def default_step(scale=1.0):
    """Finite-difference step ``max(1e-4, eps**(1/6) * scale)``."""
    return max(1e-4, np.finfo(float).eps ** (1 / 6) * scale)


def _as_batch(x, dim):
    """Return ``(points, single)`` with points shaped ``(m, dim)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar point given to a {dim}-dimensional field")
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if x.shape[0] == dim:
            return x.reshape(1, dim), True
        if dim == 1:
            return x.reshape(-1, 1), False
        raise ValueError(f"point of length {x.shape[0]} given to a {dim}-dimensional field")
    if x.ndim == 2 and x.shape[1] == dim:
        return x, False
    raise ValueError(f"points of shape {x.shape} given to a {dim}-dimensional field")


class ScalarField:
    """Immutable real-valued field on a subset of R^dim.

    Subclasses implement ``_compute(x, memo)`` for a batch ``x`` of shape
    ``(m, dim)`` and ``_derivative(k)`` returning the partial derivative
    field along axis ``k``.
    """

    __slots__ = ("dim", "label", "_partials", "_lap")

    def __init__(self, dim, label=""):
        if dim < 1:
            raise ValueError("field dimension must be >= 1")
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "_partials", {})
        object.__setattr__(self, "_lap", None)

    def __setattr__(self, name, value):
        raise AttributeError("fields are immutable")

    # evaluation -------------------------------------------------------
    def _ev(self, x, memo):
        key = id(self)
        if key not in memo:
            memo[key] = self._compute(x, memo)
        return memo[key]

    def _compute(self, x, memo):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x):
        pts, single = _as_batch(x, self.dim)
        out = np.broadcast_to(self._ev(pts, {}), (pts.shape[0],)).astype(float)
        return float(out[0]) if single else out

    # derivatives ------------------------------------------------------
    def partial(self, k):
        """Partial derivative field along axis ``k`` (cached)."""
        if not 0 <= k < self.dim:
            raise ValueError(f"axis {k} out of range for a {self.dim}-dimensional field")
        if k not in self._partials:
            self._partials[k] = self._derivative(k)
        return self._partials[k]

    def _derivative(self, k):  # pragma: no cover - abstract
        raise NotImplementedError

    def laplacian(self):
        if self._lap is None:
            object.__setattr__(self, "_lap", self._laplacian())
        return self._lap

    def _laplacian(self):
        return _sum([self.partial(k).partial(k) for k in range(self.dim)], self.dim)

    @property
    def is_zero(self):
        return False

    # algebra ----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.dim != self.dim:
                raise ValueError(f"cannot combine {self.dim}-D and {other.dim}-D fields")
            return other
        if isinstance(other, numbers.Real):
            return Constant(float(other), self.dim)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else _sum([self, other])

    __radd__ = __add__

    def __neg__(self):
        return _prod([Constant(-1.0, self.dim), self])

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else _sum([self, -other])

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else _sum([other, -self])

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else _prod([self, other])

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return _prod([self, _power(other, -1.0)])

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else _prod([other, _power(self, -1.0)])

    def __pow__(self, exponent):
        if not isinstance(exponent, numbers.Real):
            return NotImplemented
        return _power(self, float(exponent))

    def sqrt(self):
        return _power(self, 0.5)

    def __repr__(self):
        name = type(self).__name__
        return f"<{name} dim={self.dim}{' ' + self.label if self.label else ''}>"

    def relabel(self, label):
        """Same field with a different diagnostic label."""
        return _Relabel(self, label)


class Constant(ScalarField):
    __slots__ = ("value",)

    def __init__(self, value, dim=1, label=""):
        super().__init__(dim, label)
        object.__setattr__(self, "value", float(value))

    def _compute(self, x, memo):
        return np.full(x.shape[0], self.value)

    def _derivative(self, k):
        return Constant(0.0, self.dim)

    @property
    def is_zero(self):
        return self.value == 0.0


class Coordinate(ScalarField):
    __slots__ = ("axis",)

    def __init__(self, axis, dim=1, label=""):
        super().__init__(dim, label or f"x{axis}")
        if not 0 <= axis < dim:
            raise ValueError("coordinate axis out of range")
        object.__setattr__(self, "axis", int(axis))

    def _compute(self, x, memo):
        return x[:, self.axis]

    def _derivative(self, k):
        return Constant(1.0 if k == self.axis else 0.0, self.dim)


class _Sum(ScalarField):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__(terms[0].dim)
        object.__setattr__(self, "terms", tuple(terms))

    def _compute(self, x, memo):
        out = self.terms[0]._ev(x, memo)
        for t in self.terms[1:]:
            out = out + t._ev(x, memo)
        return out

    def _derivative(self, k):
        return _sum([t.partial(k) for t in self.terms], self.dim)

    def _laplacian(self):
        return _sum([t.laplacian() for t in self.terms], self.dim)


class _Product(ScalarField):
    __slots__ = ("coef", "factors")

    def __init__(self, coef, factors):
        super().__init__(factors[0].dim)
        object.__setattr__(self, "coef", float(coef))
        object.__setattr__(self, "factors", tuple(factors))

    def _compute(self, x, memo):
        out = self.factors[0]._ev(x, memo)
        for f in self.factors[1:]:
            out = out * f._ev(x, memo)
        return self.coef * out if self.coef != 1.0 else out

    def _rest(self, i):
        return [Constant(self.coef, self.dim)] + [f for j, f in enumerate(self.factors) if j != i]

    def _derivative(self, k):
        terms = []
        for i, f in enumerate(self.factors):
            df = f.partial(k)
            if not df.is_zero:
                terms.append(_prod(self._rest(i) + [df]))
        return _sum(terms, self.dim)

    def _laplacian(self):
        # split off one factor: lap(a b) = a lap b + b lap a + 2 grad a . grad b
        if len(self.factors) == 1:
            return _prod([Constant(self.coef, self.dim), self.factors[0].laplacian()])
        a = self.factors[0]
        b = _prod([Constant(self.coef, self.dim)] + list(self.factors[1:]))
        cross = [_prod([a.partial(k), b.partial(k)]) for k in range(self.dim)]
        return _sum([_prod([a, b.laplacian()]), _prod([b, a.laplacian()]),
                     _prod([Constant(2.0, self.dim), _sum(cross, self.dim)])], self.dim)


class _Power(ScalarField):
    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        super().__init__(base.dim)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", float(exponent))

    def _compute(self, x, memo):
        b = self.base._ev(x, memo)
        e = self.exponent
        if e.is_integer():
            if e >= 0:
                return b ** int(e)
            with np.errstate(divide="ignore"):
                return 1.0 / b ** int(-e)
        with np.errstate(invalid="ignore"):
            return np.power(b, e)

    def _derivative(self, k):
        db = self.base.partial(k)
        if db.is_zero:
            return Constant(0.0, self.dim)
        return _prod([Constant(self.exponent, self.dim),
                      _power(self.base, self.exponent - 1.0), db])


class _Relabel(ScalarField):
    __slots__ = ("inner",)

    def __init__(self, inner, label):
        super().__init__(inner.dim, label)
        object.__setattr__(self, "inner", inner)

    def _compute(self, x, memo):
        return self.inner._ev(x, memo)

    def _derivative(self, k):
        return self.inner.partial(k)

    def _laplacian(self):
        return self.inner.laplacian()

    @property
    def is_zero(self):
        return self.inner.is_zero


class _Switch(ScalarField):
    """Pointwise choice between two expressions of the same function."""

    __slots__ = ("selector", "threshold", "below", "above")

    def __init__(self, selector, threshold, below, above):
        super().__init__(selector.dim)
        for name, val in (("selector", selector), ("threshold", float(threshold)),
                          ("below", below), ("above", above)):
            object.__setattr__(self, name, val)

    def _compute(self, x, memo):
        low = self.selector._ev(x, memo) < self.threshold
        if not np.any(low):
            return self.above._ev(x, memo)
        if np.all(low):
            return self.below._ev(x, memo)
        out = np.empty(x.shape[0])
        out[low] = self.below._ev(x[low], {})
        out[~low] = self.above._ev(x[~low], {})
        return out

    def _derivative(self, k):
        return switch(self.selector, self.threshold, self.below.partial(k), self.above.partial(k))


def switch(selector, threshold, below, above):
    """Field equal to ``below`` where ``selector < threshold``, else ``above``.

    Both branches must represent the same function; the switch only picks
    the numerically safer expression.
    """
    if below.is_zero and above.is_zero:
        return Constant(0.0, selector.dim)
    return _Switch(selector, threshold, below, above)


class CallableField(ScalarField):
    """Field backed by a user callable.

    Parameters
    ----------
    func : callable
        Maps an ``(m, dim)`` array of points to ``m`` values.
    dim : int
    grad, hess, lap : callable, optional
        Analytic derivatives, returning ``(m, dim)``, ``(m, dim, dim)`` and
        ``(m,)`` arrays.  Missing ones are replaced by central differences.
    order : {2, 4, 6}
        Accuracy order of the difference stencils.
    step : float, optional
        Difference step; defaults to :func:`default_step` of ``domain``'s
        diameter.
    domain : CrossSection, optional
        When given, stencils reaching outside its bounding box raise
        :class:`StencilError`.
    """

    __slots__ = ("func", "grad", "hess", "lap", "order", "step", "domain")

    def __init__(self, func, dim=1, grad=None, hess=None, lap=None, order=4,
                 step=None, domain=None, label=""):
        super().__init__(dim, label)
        if order not in _FIRST:
            raise ValueError(f"unsupported stencil order {order}")
        if step is None:
            step = default_step(domain.diameter if domain is not None else 1.0)
        for name, val in (("func", func), ("grad", grad), ("hess", hess),
                          ("lap", lap), ("order", order), ("step", float(step)),
                          ("domain", domain)):
            object.__setattr__(self, name, val)

    def _compute(self, x, memo):
        return np.asarray(self.func(x), dtype=float).reshape(x.shape[0])

    def _derivative(self, k):
        if self.grad is not None:
            row_hess = None
            if self.hess is not None:
                hess = self.hess
                row_hess = lambda x, k=k: np.asarray(hess(x))[:, k, :]
            grad = self.grad
            return CallableField(lambda x, k=k: np.asarray(grad(x))[:, k], self.dim,
                                 grad=row_hess, order=self.order, step=self.step,
                                 domain=self.domain, label=f"d{k}({self.label})")
        return _FiniteDifference(self, k)

    def _laplacian(self):
        if self.lap is not None:
            return CallableField(self.lap, self.dim, order=self.order, step=self.step,
                                 domain=self.domain, label=f"lap({self.label})")
        return super()._laplacian()


class _FiniteDifference(ScalarField):
    """Central difference of a parent field along one axis."""

    __slots__ = ("parent", "axis", "order", "step", "domain")

    def __init__(self, parent, axis):
        super().__init__(parent.dim, f"fd{axis}({parent.label})")
        for name, val in (("parent", parent), ("axis", axis), ("order", parent.order),
                          ("step", parent.step), ("domain", parent.domain)):
            object.__setattr__(self, name, val)

    def _compute(self, x, memo):
        reach = max(abs(s) for s, _ in _FIRST[self.order]) * self.step
        if self.domain is not None:
            lo, hi = self.domain.lower, self.domain.upper
            bad = (x[:, self.axis] - reach < lo[self.axis]) | (x[:, self.axis] + reach > hi[self.axis])
            if np.any(bad):
                where = x[np.argmax(bad)]
                raise StencilError(
                    f"difference stencil along axis {self.axis} leaves the cross-section "
                    f"at x={where.tolist()} (reach {reach:.3g})")
        out = np.zeros(x.shape[0])
        for shift, w in _FIRST[self.order]:
            xs = x.copy()
            xs[:, self.axis] += shift * self.step
            out += w * self.parent._ev(xs, {})
        return out / self.step

    def _derivative(self, k):
        # nested differences keep the parent's policy
        return _FiniteDifference(self, k)


def _sum(terms, dim=None):
    flat = []
    const = 0.0
    dim = terms[0].dim if terms else dim
    for t in terms:
        if isinstance(t, _Sum):
            items = t.terms
        else:
            items = (t,)
        for s in items:
            if isinstance(s, Constant):
                const += s.value
            elif not s.is_zero:
                flat.append(s)
    if const != 0.0 or not flat:
        flat.append(Constant(const, dim))
    return flat[0] if len(flat) == 1 else _Sum(flat)


def _prod(factors):
    coef = 1.0
    flat = []
    dim = factors[0].dim
    for f in factors:
        if isinstance(f, _Product):
            coef *= f.coef
            flat.extend(f.factors)
        elif isinstance(f, Constant):
            coef *= f.value
        else:
            flat.append(f)
    if coef == 0.0:
        return Constant(0.0, dim)
    if not flat:
        return Constant(coef, dim)
    if coef == 1.0 and len(flat) == 1:
        return flat[0]
    return _Product(coef, flat)


def _power(base, exponent):
    if exponent == 0.0:
        return Constant(1.0, base.dim)
    if exponent == 1.0:
        return base
    if isinstance(base, Constant):
        return Constant(base.value ** exponent, base.dim)
    if isinstance(base, _Power):
        inner = base.exponent * exponent
        if base.exponent.is_integer() and exponent.is_integer():
            return _power(base.base, inner)
    return _Power(base, exponent)


# constructors ---------------------------------------------------------------

def constant(value, dim=1):
    return Constant(value, dim)


def coordinate(axis, dim=1):
    return Coordinate(axis, dim)


def polynomial(coeffs, dim=1, axis=0):
    """Polynomial ``sum_k coeffs[k] * x_axis**k`` with exact derivatives."""
    x = Coordinate(axis, dim)
    terms = [Constant(c, dim) * x ** k if k else Constant(c, dim)
             for k, c in enumerate(coeffs) if c != 0]
    return _sum(terms, dim)


def from_callable(func, dim=1, **kwargs):
    """Wrap ``func`` as a :class:`CallableField`; see its parameters."""
    return CallableField(func, dim, **kwargs)


# operation-style API ----------------------------------------------------------

def eval(field, x):
    """Value of ``field`` at a point or batch of points."""
    return field(x)


def gradient(field, x):
    """Gradient, shape ``(dim,)`` for one point or ``(m, dim)`` for a batch."""
    pts, single = _as_batch(x, field.dim)
    g = np.stack([field.partial(k)(pts) for k in range(field.dim)], axis=-1)
    return g[0] if single else g


def hessian(field, x):
    """Symmetrized Hessian, ``(dim, dim)`` or ``(m, dim, dim)``."""
    pts, single = _as_batch(x, field.dim)
    n = field.dim
    h = np.empty((pts.shape[0], n, n))
    for i in range(n):
        for j in range(n):
            h[:, i, j] = field.partial(i).partial(j)(pts)
    h = 0.5 * (h + np.swapaxes(h, 1, 2))
    return h[0] if single else h


def laplacian(field):
    """Laplacian as a new (lazy) field."""
    return field.laplacian()


def third_order_sums(field, x):
    """Vector ``grad(lap field)(x) / 6``.

    For a cubic Taylor term with symmetric coefficients ``c_ijk``
    (``c_ijk = d^3 f / 6``) component ``m`` equals ``sum_k c_kkm``.
    """
    return gradient(field.laplacian(), x) / 6.0
