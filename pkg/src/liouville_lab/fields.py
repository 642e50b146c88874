"""Scalar and vector fields with analytic derivatives.

Every field is a callable accepting either plain coordinates (floats or
arrays) or :class:`~liouville_lab.jets.Jet` objects.  Fields written with
the jet-aware functions in :mod:`liouville_lab.jets` differentiate
exactly; opaque callables fall back to Richardson-extrapolated central
differences.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import jets as jm
from .jets import Jet

__all__ = [
    "Function1D", "ScalarPeriodic1D", "smooth_step", "ScalarField2D",
    "VectorField2D", "Lattice",
]

TWO_PI = 2.0 * np.pi


class Function1D:
    """A smooth function of one variable with known first two derivatives.

    Subclasses implement :meth:`derivatives`, returning value, first and
    second derivative at ``t``.
    """

    def derivatives(self, t):
        raise NotImplementedError

    def __call__(self, t):
        if isinstance(t, Jet):
            return t.apply(*self.derivatives(t.v))
        return self.derivatives(np.asarray(t, dtype=float))[0]

    def d1(self, t):
        return self.derivatives(np.asarray(t, dtype=float))[1]

    def d2(self, t):
        return self.derivatives(np.asarray(t, dtype=float))[2]

    def of_x(self):
        """This function viewed as a field on the plane depending on x."""
        return ScalarField2D(lambda x, y: self(x))

    def of_y(self):
        return ScalarField2D(lambda x, y: self(y))

    def extrema(self, lo, hi, n=4096):
        """(min, max) on ``[lo, hi]``: dense sampling, then bounded refinement
        around the best samples."""
        t = np.linspace(lo, hi, n + 1)
        v = self(t)
        step = (hi - lo) / n
        out = []
        for sign in (1.0, -1.0):
            k = int(np.argmin(sign * v))
            a, b = max(lo, t[k] - step), min(hi, t[k] + step)
            res = optimize.minimize_scalar(lambda s: sign * float(self(s)),
                                           bounds=(a, b), method="bounded",
                                           options={"xatol": 1e-12})
            best = min(sign * v[k], res.fun)
            out.append(sign * best)
        return out[0], out[1]


class ScalarPeriodic1D(Function1D):
    """Truncated trigonometric polynomial

        c0 + sum_k cos_k cos(2 pi k t / P) + sin_k sin(2 pi k t / P),

    with harmonics ``k = 1, 2, ...`` indexed by list position.
    """

    def __init__(self, constant_term=0.0, cosine_coeffs=(), sine_coeffs=(), period=1.0):
        if not period > 0:
            raise ValueError(f"period must be positive, got {period!r}")
        self.constant_term = float(constant_term)
        self.cosine_coeffs = tuple(float(c) for c in cosine_coeffs)
        self.sine_coeffs = tuple(float(s) for s in sine_coeffs)
        self.period = float(period)
        n = max(len(self.cosine_coeffs), len(self.sine_coeffs))
        self._k = np.arange(1, n + 1, dtype=float)
        self._cos = np.zeros(n)
        self._sin = np.zeros(n)
        self._cos[:len(self.cosine_coeffs)] = self.cosine_coeffs
        self._sin[:len(self.sine_coeffs)] = self.sine_coeffs

    @classmethod
    def constant(cls, value):
        return cls(value)

    @classmethod
    def from_harmonics(cls, const=0.0, cos=(), sin=(), period=1.0):
        """Build from sparse ``[(k, amplitude), ...]`` lists."""
        n = max([int(k) for k, _ in cos] + [int(k) for k, _ in sin] + [0])
        cc, ss = [0.0] * n, [0.0] * n
        for k, amp in cos:
            if int(k) != k or k < 1:
                raise ValueError(f"harmonic index must be a positive integer, got {k!r}")
            cc[int(k) - 1] += amp
        for k, amp in sin:
            if int(k) != k or k < 1:
                raise ValueError(f"harmonic index must be a positive integer, got {k!r}")
            ss[int(k) - 1] += amp
        return cls(const, cc, ss, period)

    @property
    def omega(self):
        return TWO_PI / self.period

    def is_constant(self, atol=0.0):
        return bool(np.all(np.abs(self._cos) <= atol) and np.all(np.abs(self._sin) <= atol))

    def derivative_value(self, t, n=0):
        """n-th derivative at ``t``, evaluated analytically."""
        t = np.asarray(t, dtype=float)
        if self._k.size == 0:
            return np.full_like(t, self.constant_term if n == 0 else 0.0)
        w = self.omega * self._k
        phase = np.multiply.outer(t, w) + n * np.pi / 2.0
        scale = w ** n
        val = np.cos(phase) @ (self._cos * scale) + np.sin(phase) @ (self._sin * scale)
        if n == 0:
            val = val + self.constant_term
        return val

    def derivatives(self, t):
        return (self.derivative_value(t, 0), self.derivative_value(t, 1),
                self.derivative_value(t, 2))

    def derivative(self, n=1):
        """The n-th derivative as another trigonometric polynomial."""
        f = self
        for _ in range(n):
            w = f.omega * f._k
            f = ScalarPeriodic1D(0.0, f._sin * w, -f._cos * w, f.period)
        return f

    def shifted(self, c):
        """``self + c``."""
        return ScalarPeriodic1D(self.constant_term + c, self._cos, self._sin, self.period)

    def range(self, n=4096):
        return self.extrema(0.0, self.period, n)

    def to_config(self):
        return {
            "const": self.constant_term,
            "cos": [[int(k), a] for k, a in zip(self._k, self._cos) if a != 0.0],
            "sin": [[int(k), a] for k, a in zip(self._k, self._sin) if a != 0.0],
            "period": self.period,
        }

    def __repr__(self):
        return (f"ScalarPeriodic1D({self.constant_term}, {list(self._cos)}, "
                f"{list(self._sin)}, period={self.period})")


class _SmoothStep(Function1D):
    # 0 for t <= 0, 1 for t >= 1, C-infinity in between.
    def derivatives(self, t):
        t = np.asarray(t, dtype=float)
        u = np.clip(t, 0.0, 1.0)
        inside = (t > 0.0) & (t < 1.0)
        us = np.where(inside, u, 0.5)
        a = np.exp(-1.0 / us)
        b = np.exp(-1.0 / (1.0 - us))
        s = a + b
        val = a / s
        # derivatives of phi(u) = exp(-1/u)
        a1 = a / us ** 2
        a2 = a * (1.0 - 2.0 * us) / us ** 4
        b1 = -b / (1.0 - us) ** 2
        b2 = b * (1.0 - 2.0 * (1.0 - us)) / (1.0 - us) ** 4
        s1 = a1 + b1
        s2 = a2 + b2
        d1 = (a1 * s - a * s1) / s ** 2
        d2 = (a2 * s - a * s2) / s ** 2 - 2.0 * s1 * d1 / s
        val = np.where(inside, val, np.where(t >= 1.0, 1.0, 0.0))
        d1 = np.where(inside, d1, 0.0)
        d2 = np.where(inside, d2, 0.0)
        return val, d1, d2


smooth_step = _SmoothStep()


def _richardson_d1(f, t, h):
    d_h = (f(t + h) - f(t - h)) / (2.0 * h)
    d_h2 = (f(t + h / 2) - f(t - h / 2)) / h
    return (4.0 * d_h2 - d_h) / 3.0


def _richardson_d2(f, t, h):
    f0 = f(t)
    d_h = (f(t + h) - 2.0 * f0 + f(t - h)) / (h * h)
    d_h2 = (f(t + h / 2) - 2.0 * f0 + f(t - h / 2)) / (h * h / 4.0)
    return (4.0 * d_h2 - d_h) / 3.0


class ScalarField2D:
    """A scalar field ``(x, y) -> real`` on the plane.

    Parameters
    ----------
    func
        Callable of two arguments.  If ``analytic`` is true it must accept
        jets (use :mod:`liouville_lab.jets` functions inside it).
    analytic
        Whether ``func`` propagates jets.  Otherwise partials come from
        central differences with step ``fd_step``, Richardson-extrapolated
        once.
    fd_step
        Finite-difference step for the fallback and for cross-checks.
    """

    def __init__(self, func: Callable, analytic: bool = True, fd_step: float = 1e-5,
                 name: Optional[str] = None):
        self.func = func
        self.analytic = analytic
        self.fd_step = fd_step
        self.name = name

    # evaluation -----------------------------------------------------------

    def __call__(self, x, y):
        if isinstance(x, Jet) or isinstance(y, Jet):
            if not isinstance(x, Jet):
                x = y._const(np.asarray(x, dtype=float))
            if not isinstance(y, Jet):
                y = x._const(np.asarray(y, dtype=float))
            if self.analytic:
                out = self.func(x, y)
                return out if isinstance(out, Jet) else x._const(out)
            return x.compose(y, self.fd_jet(x.v, y.v, order=x.order))
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = self.func(x, y)
        if isinstance(out, Jet):
            out = out.v
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape).copy()

    def jet(self, x, y, order=2):
        """Value and partials at ``(x, y)`` as a jet with broadcast arrays."""
        X, Y = jm.variables(x, y, order)
        return self(X, Y).broadcast(X.v.shape)

    def partials(self, x, y):
        j = self.jet(x, y, order=1)
        return j.x, j.y

    def fd_partials(self, x, y, h=None):
        h = self.fd_step if h is None else h
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fx = _richardson_d1(lambda s: self(s, y), x, h)
        fy = _richardson_d1(lambda s: self(x, s), y, h)
        return fx, fy

    def fd_jet(self, x, y, order=2, h=None):
        """Jet assembled purely from finite differences."""
        h = self.fd_step if h is None else h
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        v = np.broadcast_to(self(x, y), shape)
        fx, fy = self.fd_partials(x, y, h)
        if order == 1:
            return Jet(v, fx, fy)
        # second differences need a larger step to stay above round-off
        h2 = max(h, 1e-4)
        fxx = _richardson_d2(lambda s: self(s, y), x, h2)
        fyy = _richardson_d2(lambda s: self(x, s), y, h2)
        fxy = (self(x + h2, y + h2) - self(x + h2, y - h2)
               - self(x - h2, y + h2) + self(x - h2, y - h2)) / (4.0 * h2 * h2)
        return Jet(v, fx, fy, fxx, fxy, fyy)

    # algebra --------------------------------------------------------------

    @staticmethod
    def _wrap(other):
        if isinstance(other, ScalarField2D):
            return other
        c = float(other)
        return ScalarField2D.constant(c)

    def _binary(self, other, op):
        other = self._wrap(other)
        f, g = self, other
        return ScalarField2D(lambda x, y: op(f(x, y), g(x, y)),
                             fd_step=min(f.fd_step, g.fd_step))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._wrap(other) / self

    def __neg__(self):
        f = self
        return ScalarField2D(lambda x, y: -f(x, y), fd_step=f.fd_step)

    def map(self, fn):
        """Apply a jet-aware unary function pointwise."""
        f = self
        return ScalarField2D(lambda x, y: fn(f(x, y)), fd_step=f.fd_step)

    def pullback(self, phi):
        """``self`` composed with the coordinate map ``phi(x, y) -> (x', y')``
        (``phi`` must be jet-aware)."""
        f = self
        return ScalarField2D(lambda x, y: f(*phi(x, y)), fd_step=f.fd_step)

    # constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, c):
        c = float(c)
        return cls(lambda x, y: c + 0.0 * x, name=repr(c))

    @classmethod
    def coordinate_x(cls):
        return cls(lambda x, y: x + 0.0 * y, name="x")

    @classmethod
    def coordinate_y(cls):
        return cls(lambda x, y: y + 0.0 * x, name="y")

    def __repr__(self):
        return f"ScalarField2D({self.name or self.func!r})"


def as_field(value):
    """Coerce numbers, 1-D functions on x or fields into a ScalarField2D."""
    if isinstance(value, ScalarField2D):
        return value
    if callable(value):
        return ScalarField2D(value)
    return ScalarField2D.constant(value)


@dataclass(frozen=True)
class VectorField2D:
    """Vector field ``vx d/dx + vy d/dy``."""

    vx: ScalarField2D
    vy: ScalarField2D

    @classmethod
    def constant(cls, vx, vy):
        return cls(ScalarField2D.constant(vx), ScalarField2D.constant(vy))

    @classmethod
    def from_functions(cls, fx, fy):
        return cls(as_field(fx), as_field(fy))

    def __call__(self, x, y):
        return np.stack([self.vx(x, y), self.vy(x, y)], axis=-1)

    def jets(self, x, y, order=2):
        return self.vx.jet(x, y, order), self.vy.jet(x, y, order)

    def scaled(self, s):
        return VectorField2D(self.vx * s, self.vy * s)

    def __add__(self, other):
        return VectorField2D(self.vx + other.vx, self.vy + other.vy)


@dataclass(frozen=True)
class Lattice:
    """Lattice ``{k xi + m nu}`` acting on the plane by translations."""

    xi: tuple
    nu: tuple

    def __post_init__(self):
        xi = tuple(float(v) for v in self.xi)
        nu = tuple(float(v) for v in self.nu)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "nu", nu)
        if len(xi) != 2 or len(nu) != 2:
            raise ValueError("lattice generators must be 2-vectors")
        if abs(self.det) <= 1e-14:
            raise ValueError(f"lattice generators are linearly dependent: {xi}, {nu}")

    @classmethod
    def unit(cls):
        return cls((1.0, 0.0), (0.0, 1.0))

    @property
    def matrix(self):
        return np.array([self.xi, self.nu]).T

    @property
    def det(self):
        return self.xi[0] * self.nu[1] - self.xi[1] * self.nu[0]

    def translate(self, x, y, k=1, m=0):
        return (x + k * self.xi[0] + m * self.nu[0],
                y + k * self.xi[1] + m * self.nu[1])

    def reduce(self, x, y):
        """Representatives in the fundamental parallelogram spanned by xi, nu."""
        pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        coeff = np.linalg.solve(self.matrix, pts[..., None])[..., 0]
        frac = coeff - np.floor(coeff)
        red = frac @ self.matrix.T
        return red[..., 0], red[..., 1]

    def sample_points(self, n, rng):
        """``n`` random points in the fundamental parallelogram."""
        st = rng.random((n, 2))
        p = st @ self.matrix.T
        return p[:, 0], p[:, 1]

    def grid(self, n):
        """n-by-n cell-centred grid covering the fundamental parallelogram."""
        s = (np.arange(n) + 0.5) / n
        S, T = np.meshgrid(s, s, indexing="ij")
        x = S * self.xi[0] + T * self.nu[0]
        y = S * self.xi[1] + T * self.nu[1]
        return x, y
