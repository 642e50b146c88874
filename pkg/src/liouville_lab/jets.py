"""Second-order forward-mode jets in two variables.

A :class:`Jet` carries a value together with its first and (optionally)
second partial derivatives with respect to the base coordinates ``(x, y)``.
Arithmetic and the elementary functions in this module propagate the
derivatives exactly, so fields written once in terms of these operations
give analytic partials for free.  All components are numpy arrays (or
scalars) and broadcast against each other.
"""
import numpy as np

__all__ = [
    "Jet", "variables", "is_jet", "where",
    "sin", "cos", "exp", "log", "sqrt", "cbrt", "absolute", "real", "imag",
]


class Jet:
    """Truncated Taylor data ``(v, v_x, v_y[, v_xx, v_xy, v_yy])``."""

    __slots__ = ("v", "x", "y", "xx", "xy", "yy")
    __array_priority__ = 100

    def __init__(self, v, x=0.0, y=0.0, xx=None, xy=None, yy=None):
        self.v = v
        self.x = x
        self.y = y
        self.xx = xx
        self.xy = xy
        self.yy = yy

    @property
    def order(self):
        return 1 if self.xx is None else 2

    # construction helpers -------------------------------------------------

    def _const(self, c):
        if self.xx is None:
            return Jet(c, 0.0, 0.0)
        return Jet(c, 0.0, 0.0, 0.0, 0.0, 0.0)

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return self._const(other)

    def apply(self, f0, f1, f2=None):
        """Chain rule for a scalar function with value ``f0`` and
        derivatives ``f1``, ``f2`` already evaluated at ``self.v``."""
        x = f1 * self.x
        y = f1 * self.y
        if self.xx is None:
            return Jet(f0, x, y)
        return Jet(
            f0, x, y,
            f2 * self.x * self.x + f1 * self.xx,
            f2 * self.x * self.y + f1 * self.xy,
            f2 * self.y * self.y + f1 * self.yy,
        )

    def compose(self, other, jet_outer):
        """Return ``F(self, other)`` given the jet of ``F`` at
        ``(self.v, other.v)`` with respect to its own two arguments."""
        F = jet_outer
        u, w = self, other
        x = F.x * u.x + F.y * w.x
        y = F.x * u.y + F.y * w.y
        if u.xx is None or F.xx is None:
            return Jet(F.v, x, y)
        xx = (F.xx * u.x * u.x + 2.0 * F.xy * u.x * w.x + F.yy * w.x * w.x
              + F.x * u.xx + F.y * w.xx)
        xy = (F.xx * u.x * u.y + F.xy * (u.x * w.y + u.y * w.x)
              + F.yy * w.x * w.y + F.x * u.xy + F.y * w.xy)
        yy = (F.xx * u.y * u.y + 2.0 * F.xy * u.y * w.y + F.yy * w.y * w.y
              + F.x * u.yy + F.y * w.yy)
        return Jet(F.v, x, y, xx, xy, yy)

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        if self.xx is None:
            return Jet(-self.v, -self.x, -self.y)
        return Jet(-self.v, -self.x, -self.y, -self.xx, -self.xy, -self.yy)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.v + other, self.x, self.y, self.xx, self.xy, self.yy)
        if self.xx is None or other.xx is None:
            return Jet(self.v + other.v, self.x + other.x, self.y + other.y)
        return Jet(self.v + other.v, self.x + other.x, self.y + other.y,
                   self.xx + other.xx, self.xy + other.xy, self.yy + other.yy)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            if self.xx is None:
                return Jet(self.v * other, self.x * other, self.y * other)
            return Jet(self.v * other, self.x * other, self.y * other,
                       self.xx * other, self.xy * other, self.yy * other)
        a, b = self, other
        x = a.x * b.v + a.v * b.x
        y = a.y * b.v + a.v * b.y
        if a.xx is None or b.xx is None:
            return Jet(a.v * b.v, x, y)
        return Jet(
            a.v * b.v, x, y,
            a.xx * b.v + 2.0 * a.x * b.x + a.v * b.xx,
            a.xy * b.v + a.x * b.y + a.y * b.x + a.v * b.xy,
            a.yy * b.v + 2.0 * a.y * b.y + a.v * b.yy,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        r = 1.0 / self.v
        return self.apply(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(log(self) * p)
        if p == 2:
            return self * self
        if p == 1:
            return self
        if p == 0:
            return self._const(np.ones_like(self.v))
        v = self.v
        return self.apply(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    # complex helpers ------------------------------------------------------

    def _map(self, fn):
        if self.xx is None:
            return Jet(fn(self.v), fn(self.x), fn(self.y))
        return Jet(fn(self.v), fn(self.x), fn(self.y),
                   fn(self.xx), fn(self.xy), fn(self.yy))

    @property
    def real(self):
        return self._map(np.real)

    @property
    def imag(self):
        return self._map(np.imag)

    def broadcast(self, shape):
        """Materialise every component as a float array of ``shape``."""
        def b(c):
            return np.broadcast_to(np.asarray(c), shape).copy()
        if self.xx is None:
            return Jet(b(self.v), b(self.x), b(self.y))
        return Jet(b(self.v), b(self.x), b(self.y), b(self.xx), b(self.xy), b(self.yy))

    def __repr__(self):
        return f"Jet(v={self.v!r}, x={self.x!r}, y={self.y!r}, order={self.order})"


def variables(x, y, order=2):
    """Coordinate jets for evaluation points ``x`` and ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    one, zero = np.ones_like(x), np.zeros_like(x)
    if order == 1:
        return Jet(x, one, zero), Jet(y, zero, one)
    return (Jet(x, one, zero, zero, zero, zero),
            Jet(y, zero, one, zero, zero, zero))


def is_jet(obj):
    return isinstance(obj, Jet)


def where(mask, a, b):
    """Elementwise selection between two jets (or plain values)."""
    if not (is_jet(a) or is_jet(b)):
        return np.where(mask, a, b)
    if not is_jet(a):
        a = b._const(a)
    if not is_jet(b):
        b = a._const(b)
    if a.xx is None or b.xx is None:
        return Jet(np.where(mask, a.v, b.v), np.where(mask, a.x, b.x),
                   np.where(mask, a.y, b.y))
    return Jet(*(np.where(mask, p, q) for p, q in
                 zip((a.v, a.x, a.y, a.xx, a.xy, a.yy),
                     (b.v, b.x, b.y, b.xx, b.xy, b.yy))))


def sin(u):
    if is_jet(u):
        s, c = np.sin(u.v), np.cos(u.v)
        return u.apply(s, c, -s)
    return np.sin(u)


def cos(u):
    if is_jet(u):
        s, c = np.sin(u.v), np.cos(u.v)
        return u.apply(c, -s, -c)
    return np.cos(u)


def exp(u):
    if is_jet(u):
        e = np.exp(u.v)
        return u.apply(e, e, e)
    return np.exp(u)


def log(u):
    if is_jet(u):
        r = 1.0 / u.v
        return u.apply(np.log(u.v), r, -r * r)
    return np.log(u)


def sqrt(u):
    if is_jet(u):
        s = np.sqrt(u.v)
        return u.apply(s, 0.5 / s, -0.25 / (s * u.v))
    return np.sqrt(u)


def cbrt(u):
    """Real cube root; negative arguments give negative roots."""
    if is_jet(u):
        c = np.cbrt(u.v)
        d1 = 1.0 / (3.0 * c * c)
        return u.apply(c, d1, -2.0 * d1 / (3.0 * u.v))
    return np.cbrt(u)


def absolute(u):
    if is_jet(u):
        s = np.sign(u.v)
        return u.apply(np.abs(u.v), s, 0.0)
    return np.abs(u)


def real(u):
    return u.real if is_jet(u) else np.real(u)


def imag(u):
    return u.imag if is_jet(u) else np.imag(u)
