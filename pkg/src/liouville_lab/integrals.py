"""Quadratic (and linear) first integrals of geodesic flows.

An integral ``F = a p_x^2 + b p_x p_y + c p_y^2`` is stored through its
coefficient fields.  The symmetric tensor with ``F = Ft^{ij} p_i p_j`` is
``Ft = [[a, b/2], [b/2, c]]``.  The Hamiltonian is ``H = 1/2 g^{ij} p_i p_j``.
"""
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import interpolate

from . import jets as jm
from .errors import ZeroCrossingError
from .fields import ScalarField2D, VectorField2D, as_field
from .geometry import (MetricField, _stack2, lie_derivative_metric, metric_at,
                       null_directions, null_frame_at)

__all__ = [
    "QuadraticIntegral", "LinearIntegral", "hamiltonian_integral", "sys_residuals",
    "bracket_values", "bracket_cubic_coefficients", "poisson_bracket_residual",
    "momentum_directions", "mixed_tensor_at", "trace_L", "eigen_data", "TypeLabel",
    "ClassificationReport", "null_frame_coefficients", "classify_point", "classify_grid",
    "bk_form_values", "coefficient_variation", "bk_closedness_residual",
    "PerfectCoordinate", "perfect_coordinate", "SquareTest", "is_square_of_linear",
    "killing_residual", "pullback_integral", "pullback_metric", "triviality_fit",
]


@dataclass(frozen=True)
class QuadraticIntegral:
    """``a p_x^2 + b p_x p_y + c p_y^2`` with coefficient fields."""

    a: ScalarField2D
    b: ScalarField2D
    c: ScalarField2D
    name: Optional[str] = None

    @classmethod
    def from_coefficients(cls, a, b, c, name=None):
        return cls(as_field(a), as_field(b), as_field(c), name)

    @classmethod
    def constant(cls, a, b, c, name=None):
        return cls(ScalarField2D.constant(a), ScalarField2D.constant(b),
                   ScalarField2D.constant(c), name)

    def named(self, name):
        return QuadraticIntegral(self.a, self.b, self.c, name)

    def coefficients_at(self, x, y):
        return self.a(x, y), self.b(x, y), self.c(x, y)

    def jets(self, X, Y):
        """Coefficient jets at jet-valued points."""
        return self.a(X, Y), self.b(X, Y), self.c(X, Y)

    def tensor_at(self, x, y):
        a, b, c = self.coefficients_at(x, y)
        return _stack2(a, 0.5 * b, c)

    def __call__(self, x, y, px, py):
        a, b, c = self.coefficients_at(x, y)
        return a * px * px + b * px * py + c * py * py

    def gradient(self, x, y, px, py):
        """``(dF/dx, dF/dy, dF/dpx, dF/dpy)``."""
        X, Y = jm.variables(x, y, order=1)
        a, b, c = self.jets(X, Y)
        F = a * px * px + b * px * py + c * py * py
        return (F.x, F.y, 2 * a.v * px + b.v * py, b.v * px + 2 * c.v * py)

    def __add__(self, other):
        return QuadraticIntegral(self.a + other.a, self.b + other.b, self.c + other.c)

    def __sub__(self, other):
        return QuadraticIntegral(self.a - other.a, self.b - other.b, self.c - other.c)

    def scaled(self, s):
        return QuadraticIntegral(self.a * s, self.b * s, self.c * s, self.name)

    def perturbed(self, db=0.0, da=0.0, dc=0.0):
        """Add fields to the coefficients (used to build non-integrals)."""
        return QuadraticIntegral(self.a + da, self.b + db, self.c + dc, self.name)


@dataclass(frozen=True)
class LinearIntegral:
    """``alpha p_x + beta p_y``; an integral iff ``(alpha, beta)`` is Killing."""

    alpha: ScalarField2D
    beta: ScalarField2D
    name: Optional[str] = None

    @classmethod
    def constant(cls, alpha, beta, name=None):
        return cls(ScalarField2D.constant(alpha), ScalarField2D.constant(beta), name)

    @property
    def vector_field(self):
        return VectorField2D(self.alpha, self.beta)

    def __call__(self, x, y, px, py):
        return self.alpha(x, y) * px + self.beta(x, y) * py

    def squared(self):
        a, b = self.alpha, self.beta
        return QuadraticIntegral(a * a, a * b * 2.0, b * b)


def hamiltonian_integral(metric: MetricField):
    """Coefficients of ``H = 1/2 g^{ij} p_i p_j``."""
    g11, g12, g22 = metric.g11, metric.g12, metric.g22

    def inv(which):
        def f(x, y):
            a, b, c = g11(x, y), g12(x, y), g22(x, y)
            det = a * c - b * b
            return {"a": 0.5 * c / det, "b": -b / det, "c": 0.5 * a / det}[which]
        return ScalarField2D(f)

    return QuadraticIntegral(inv("a"), inv("b"), inv("c"), "H")


def sys_residuals(f, F: QuadraticIntegral, p):
    """The four PDE residuals for ``{H, F} = 0`` when ``g = f dxdy``.

    Returns ``(a_y, f a_x + f b_y + 2 f_x a + f_y b,
    f b_x + f c_y + f_x b + 2 f_y c, c_x)`` stacked on the last axis.
    """
    X, Y = jm.variables(p[0], p[1], order=1)
    fj = as_field(f)(X, Y)
    a, b, c = F.jets(X, Y)
    fv, fx, fy = fj.v, fj.x, fj.y
    r2 = fv * a.x + fv * b.y + 2 * fx * a.v + fy * b.v
    r3 = fv * b.x + fv * c.y + fx * b.v + 2 * fy * c.v
    shape = np.broadcast(X.v, r2, r3).shape
    return np.stack([np.broadcast_to(v, shape) for v in (a.y, r2, r3, c.x)], -1)


def _inverse_jets(metric, X, Y):
    g11, g12, g22 = metric.component_jets(X, Y)
    det = g11 * g22 - g12 * g12
    return g22 / det, -g12 / det, g11 / det


def bracket_values(metric: MetricField, F: QuadraticIntegral, p, px, py):
    """``{H, F}`` at ``p`` for momenta ``(px, py)`` (broadcasting)."""
    X, Y = jm.variables(p[0], p[1], order=1)
    i11, i12, i22 = _inverse_jets(metric, X, Y)
    a, b, c = F.jets(X, Y)
    # dH/dp and dH/dx
    hpx = i11.v * px + i12.v * py
    hpy = i12.v * px + i22.v * py
    hx = 0.5 * (i11.x * px * px + 2 * i12.x * px * py + i22.x * py * py)
    hy = 0.5 * (i11.y * px * px + 2 * i12.y * px * py + i22.y * py * py)
    fx = a.x * px * px + b.x * px * py + c.x * py * py
    fy = a.y * px * px + b.y * px * py + c.y * py * py
    fpx = 2 * a.v * px + b.v * py
    fpy = b.v * px + 2 * c.v * py
    return hpx * fx + hpy * fy - hx * fpx - hy * fpy


_CUBIC_PROBES = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]])
_CUBIC_MATRIX = np.array([[px ** 3, px * px * py, px * py * py, py ** 3]
                          for px, py in _CUBIC_PROBES])


def bracket_cubic_coefficients(metric, F, p):
    """Coefficients of ``{H,F}`` as a cubic in momenta, ordered
    ``(px^3, px^2 py, px py^2, py^3)``."""
    x = np.asarray(p[0], float)[..., None]
    y = np.asarray(p[1], float)[..., None]
    vals = bracket_values(metric, F, (x, y), _CUBIC_PROBES[:, 0], _CUBIC_PROBES[:, 1])
    return np.linalg.solve(_CUBIC_MATRIX, vals[..., None])[..., 0]


def momentum_directions(n=8):
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.cos(ang), np.sin(ang)


def poisson_bracket_residual(metric, F, p, n_directions=8):
    """Max of ``|{H,F}|`` over unit covectors at equal angles (and over
    all points in ``p``)."""
    px, py = momentum_directions(n_directions)
    x = np.asarray(p[0], float)[..., None]
    y = np.asarray(p[1], float)[..., None]
    return float(np.max(np.abs(bracket_values(metric, F, (x, y), px, py))))


def mixed_tensor_at(F: QuadraticIntegral, metric: MetricField, p):
    """``Ft^i_j = Ft^{ik} g_{kj}``, shape ``(..., 2, 2)``."""
    return F.tensor_at(*p) @ metric_at(metric, p)


def trace_L(F, metric, p):
    """``L = Ft^{ij} g_{ij}``, the trace of the mixed tensor."""
    return np.trace(mixed_tensor_at(F, metric, p), axis1=-2, axis2=-1)


def eigen_data(F, metric, p):
    """Eigenvalues of ``Ft^i_j`` and the discriminant ``(tr/2)^2 - det``.

    In null coordinates the discriminant equals ``a c f^2 / 4``.
    Eigenvalues are complex, ordered by real part, then imaginary part.
    """
    A = mixed_tensor_at(F, metric, p)
    tr = A[..., 0, 0] + A[..., 1, 1]
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    D = 0.25 * tr * tr - det
    root = np.sqrt(D.astype(complex))
    e1 = 0.5 * tr - root
    e2 = 0.5 * tr + root
    swap = (e1.real > e2.real) | ((e1.real == e2.real) & (e1.imag > e2.imag))
    return np.where(swap, e2, e1), np.where(swap, e1, e2), D


class TypeLabel(str, enum.Enum):
    LIOUVILLE = "LIOUVILLE"
    COMPLEX_LIOUVILLE = "COMPLEX_LIOUVILLE"
    JORDAN_A = "JORDAN_A"
    JORDAN_B = "JORDAN_B"
    DEGENERATE = "DEGENERATE"

    @property
    def is_jordan(self):
        return self in (TypeLabel.JORDAN_A, TypeLabel.JORDAN_B)


_LABELS = list(TypeLabel)


def null_frame_coefficients(F, metric, p):
    """``(a, b, c)`` of ``F`` written in the normalised null frame.

    If ``(V1, V2)`` is the frame and ``(t1, t2)`` its dual coframe, then
    ``a = t1^T Ft t1`` etc.  For a metric already of the form ``f dxdy``
    these are positive multiples of the coordinate coefficients.
    """
    V1, V2 = null_frame_at(metric, p)
    frame = np.stack([V1, V2], -1)  # columns V1, V2
    cof = np.linalg.inv(frame)  # rows t1, t2
    T = F.tensor_at(*p)
    t1, t2 = cof[..., 0, :], cof[..., 1, :]
    a = np.einsum("...i,...ij,...j->...", t1, T, t1)
    b = 2.0 * np.einsum("...i,...ij,...j->...", t1, T, t2)
    c = np.einsum("...i,...ij,...j->...", t2, T, t2)
    return a, b, c


def _label_codes(a, c, zero):
    az = np.abs(a) <= zero
    cz = np.abs(c) <= zero
    code = np.where(az & cz, 4,
           np.where(az, 3,
           np.where(cz, 2,
           np.where(a * c > 0, 0, 1))))
    return code


def classify_point(F, metric, p, tol=1e-12):
    """Local type at a single point; ``tol`` is an absolute zero threshold
    for the null-frame coefficients."""
    a, _, c = null_frame_coefficients(F, metric, (np.float64(p[0]), np.float64(p[1])))
    return _LABELS[int(_label_codes(a, c, tol))]


@dataclass
class ClassificationReport:
    grid_dims: tuple
    labels: np.ndarray  # integer codes into TypeLabel order
    fractions: dict
    boundary_cells: int
    zero_threshold: float

    def label_grid(self):
        return np.array([_LABELS[k].value for k in self.labels.ravel()]).reshape(self.labels.shape)

    @property
    def jordan_fraction(self):
        return self.fractions["JORDAN_A"] + self.fractions["JORDAN_B"]

    def to_dict(self):
        return {
            "grid_dims": list(self.grid_dims),
            "fractions": dict(self.fractions),
            "jordan_fraction": self.jordan_fraction,
            "boundary_cells": int(self.boundary_cells),
            "zero_threshold": self.zero_threshold,
        }


def classify_grid(F, metric, grid, rel_tol=1e-7):
    """Label every grid point by the sign pattern of the null-frame
    coefficients.

    A coefficient counts as zero when ``|coef| <= rel_tol * max(|a|+|c|)``.
    A cell is a boundary cell when a 4-neighbour carries another label.
    """
    x, y = grid
    a, _, c = null_frame_coefficients(F, metric, (x, y))
    scale = float(np.max(np.abs(a) + np.abs(c)))
    zero = rel_tol * scale
    codes = _label_codes(a, c, zero)
    n = codes.size
    fractions = {lab.value: float(np.count_nonzero(codes == k)) / n
                 for k, lab in enumerate(_LABELS)}
    boundary = np.zeros(codes.shape, bool)
    if codes.ndim == 2:
        for axis in (0, 1):
            d = np.diff(codes, axis=axis) != 0
            pad_lo = [(0, 0), (0, 0)]
            pad_hi = [(0, 0), (0, 0)]
            pad_lo[axis] = (1, 0)
            pad_hi[axis] = (0, 1)
            boundary |= np.pad(d, pad_lo) | np.pad(d, pad_hi)
    return ClassificationReport(tuple(codes.shape), codes, fractions,
                                int(np.count_nonzero(boundary)), zero)


def bk_form_values(F, p, zero=0.0):
    """``(1/sqrt|a|, 1/sqrt|c|)`` in null coordinates; NaN where the
    coefficient vanishes (the form is undefined there)."""
    a, _, c = F.coefficients_at(*p)
    with np.errstate(divide="ignore"):
        b1 = np.where(np.abs(a) > zero, 1.0 / np.sqrt(np.abs(a)), np.nan)
        b2 = np.where(np.abs(c) > zero, 1.0 / np.sqrt(np.abs(c)), np.nan)
    return b1, b2


def coefficient_variation(F, x_samples, y_samples):
    """``(max over x of the spread of a in y, max over y of the spread of c in x)``.

    Zero exactly when ``a = a(x)`` and ``c = c(y)`` on the samples.
    """
    X, Y = np.meshgrid(np.asarray(x_samples, float), np.asarray(y_samples, float), indexing="ij")
    a, _, c = F.coefficients_at(X, Y)
    da = float(np.max(np.ptp(a, axis=1)))
    dc = float(np.max(np.ptp(c, axis=0)))
    return da, dc


def bk_closedness_residual(F, metric, p, rel_floor=1e-3):
    """Exterior derivatives of both normalised forms, chart-free.

    For each null family, take the covector ``w`` annihilating the other
    family's null direction and form ``B = w / sqrt|w^T Ft w|``.  This is
    ``du / sqrt|a|`` in any null chart (up to sign), so ``dB = 0`` iff the
    coefficient depends on one null coordinate only.  Points where
    ``|w^T Ft w|`` is below ``rel_floor`` times its maximum are skipped.
    Returns ``(max |dB1|, max |dB2|, fraction of points checked)``.
    """
    X, Y = jm.variables(p[0], p[1], order=1)
    g11, g12, g22 = metric.component_jets(X, Y)
    a, b, c = F.jets(X, Y)
    n1, n2 = null_directions(g11, g12, g22)
    out, used = [], []
    for other in (n2, n1):
        wx, wy = -other[1], other[0]
        q = a * wx * wx + b * wx * wy + c * wy * wy
        qv = np.abs(q.v)
        ok = qv >= rel_floor * np.max(qv) if np.max(qv) > 0 else np.zeros_like(qv, bool)
        safe = jm.where(ok, q, 1.0)
        norm = jm.sqrt(jm.absolute(safe))
        bx, by = wx / norm, wy / norm
        db = by.x - bx.y
        out.append(float(np.max(np.abs(np.where(ok, db, 0.0)))) if np.any(ok) else 0.0)
        used.append(float(np.mean(ok)))
    return out[0], out[1], min(used)


@dataclass
class PerfectCoordinate:
    """Sampled monotone map ``x_new(x) = int_{x0}^x |a|^{-1/2}``."""

    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    spline: interpolate.CubicHermiteSpline
    sign: float

    def __call__(self, x):
        return self.spline(x)

    def derivative(self, x):
        return self.spline(x, 1)

    def pulled_back_a(self, a_values, x):
        """New leading coefficient ``a (dx_new/dx)^2`` at ``x``."""
        d = self.derivative(x)
        return a_values * d * d


def perfect_coordinate(a, x0, x1, n_steps=512, y0=0.0, gauss_points=8):
    """Antiderivative of ``1/sqrt|a|`` on ``[x0, x1]``.

    ``a`` is either a one-variable callable or a :class:`QuadraticIntegral`
    whose ``a`` coefficient is read along ``y = y0``.  Each cell is
    integrated by Gauss-Legendre quadrature; the result is a cubic Hermite
    spline matching the exact slopes at the nodes.
    """
    if isinstance(a, QuadraticIntegral):
        coef = a.a
        fn = lambda t: coef(t, np.full_like(np.asarray(t, float), y0))  # noqa: E731
    else:
        fn = lambda t: np.asarray(a(t), float) * np.ones_like(np.asarray(t, float))  # noqa: E731
    nodes = np.linspace(x0, x1, n_steps + 1)
    gx, gw = np.polynomial.legendre.leggauss(gauss_points)
    lo, hi = nodes[:-1, None], nodes[1:, None]
    pts = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
    dense = np.linspace(x0, x1, 8 * n_steps + 1)
    samples = np.concatenate([fn(nodes), fn(pts).ravel(), fn(dense)])
    if np.any(samples == 0) or (np.any(samples > 0) and np.any(samples < 0)):
        k = int(np.argmin(np.abs(fn(dense))))
        raise ZeroCrossingError(f"coefficient vanishes near x = {dense[k]:.6g} in [{x0}, {x1}]")
    integrand = 1.0 / np.sqrt(np.abs(fn(pts)))
    cells = 0.5 * (hi - lo)[:, 0] * (integrand @ gw)
    values = np.concatenate([[0.0], np.cumsum(cells)])
    slopes = 1.0 / np.sqrt(np.abs(fn(nodes)))
    spline = interpolate.CubicHermiteSpline(nodes, values, slopes)
    return PerfectCoordinate(nodes, values, slopes, spline, float(np.sign(samples[0])))


def killing_residual(metric, v: VectorField2D, p):
    """``((L_v g)_11, (L_v g)_12, (L_v g)_22)`` at ``p``."""
    L = lie_derivative_metric(metric, v, p)
    return np.stack([L[..., 0, 0], L[..., 0, 1], L[..., 1, 1]], -1)


@dataclass
class SquareTest:
    """Outcome of :func:`is_square_of_linear`."""

    field: Optional[VectorField2D]
    sign: float = 0.0
    degenerate: bool = False
    max_det: float = float("nan")
    killing_residual: float = float("nan")


def is_square_of_linear(F, metric, grid, tol=1e-10):
    """Detect ``F = +-(alpha p_x + beta p_y)^2`` on the grid.

    Requires ``det Ft`` to vanish (relative to the coefficient scale) and the
    diagonal entries to share one sign.  The factor is built on the branch
    where ``|a|`` stays away from zero (else ``|c|``), with ``alpha > 0``
    (resp. ``beta > 0``).  The returned field's Killing residual is measured
    on the grid.
    """
    x, y = grid
    a, b, c = F.coefficients_at(x, y)
    scale = float(np.max(np.abs(a) + np.abs(b) + np.abs(c)))
    if scale == 0.0:
        return SquareTest(None, degenerate=True, max_det=0.0)
    det = a * c - 0.25 * b * b
    max_det = float(np.max(np.abs(det))) / scale ** 2
    if max_det > tol:
        return SquareTest(None, max_det=max_det)
    diag = np.concatenate([a.ravel(), c.ravel()])
    big = np.abs(diag) > tol * scale
    signs = np.sign(diag[big])
    if signs.size == 0 or np.any(signs != signs[0]):
        return SquareTest(None, max_det=max_det)
    sign = float(signs[0])
    if np.min(np.abs(a)) > tol * scale:
        alpha = F.a.map(lambda t: jm.sqrt(jm.absolute(t)))
        beta = (F.b * (0.5 * sign)) / alpha
    elif np.min(np.abs(c)) > tol * scale:
        beta = F.c.map(lambda t: jm.sqrt(jm.absolute(t)))
        alpha = (F.b * (0.5 * sign)) / beta
    else:
        return SquareTest(None, sign=sign, max_det=max_det)
    v = VectorField2D(alpha, beta)
    kres = float(np.max(np.abs(killing_residual(metric, v, (x, y)))))
    return SquareTest(v, sign, False, max_det, kres)


def pullback_integral(F: QuadraticIntegral, psi, jac):
    """Express ``F`` in new coordinates.

    ``psi(u, v)`` returns old coordinates ``(x, y)``; ``jac(u, v)`` returns
    ``((dx/du, dx/dv), (dy/du, dy/dv))``.  Both must accept jets.  Momenta
    transform as ``p_old = J^{-T} p_new``, so ``Ft_new = J^{-1} Ft J^{-T}``.
    """
    def entries(u, v):
        x, y = psi(u, v)
        (j11, j12), (j21, j22) = jac(u, v)
        det = j11 * j22 - j12 * j21
        # J^{-1}
        k11, k12, k21, k22 = j22 / det, -j12 / det, -j21 / det, j11 / det
        a, b, c = F.a(x, y), F.b(x, y), F.c(x, y)
        h = b * 0.5
        # row i of J^{-1} times Ft times row j of J^{-1}
        def quad(r1, r2, s1, s2):
            return r1 * (a * s1 + h * s2) + r2 * (h * s1 + c * s2)
        return quad(k11, k12, k11, k12), quad(k11, k12, k21, k22), quad(k21, k22, k21, k22)

    return QuadraticIntegral(ScalarField2D(lambda u, v: entries(u, v)[0]),
                             ScalarField2D(lambda u, v: 2.0 * entries(u, v)[1]),
                             ScalarField2D(lambda u, v: entries(u, v)[2]), F.name)


def pullback_metric(metric: MetricField, psi, jac):
    """``J^T g(psi) J`` with the same conventions as :func:`pullback_integral`."""
    def entries(u, v):
        x, y = psi(u, v)
        (j11, j12), (j21, j22) = jac(u, v)
        g11, g12, g22 = metric.g11(x, y), metric.g12(x, y), metric.g22(x, y)
        def form(s1, s2, t1, t2):
            return s1 * (g11 * t1 + g12 * t2) + s2 * (g12 * t1 + g22 * t2)
        return form(j11, j21, j11, j21), form(j11, j21, j12, j22), form(j12, j22, j12, j22)

    return MetricField(ScalarField2D(lambda u, v: entries(u, v)[0]),
                       ScalarField2D(lambda u, v: entries(u, v)[1]),
                       ScalarField2D(lambda u, v: entries(u, v)[2]),
                       metric.signature)


def triviality_fit(F, metric, grid):
    """Least-squares ``const`` with ``F ~ const * H`` over the grid.

    Returns ``(const, relative_residual)``; a residual near zero means the
    integral is trivial.
    """
    H = hamiltonian_integral(metric)
    x, y = grid
    f = np.concatenate([np.ravel(v) for v in F.coefficients_at(x, y)])
    h = np.concatenate([np.ravel(v) for v in H.coefficients_at(x, y)])
    const = float(h @ f / (h @ h))
    rel = float(np.linalg.norm(f - const * h) / max(np.linalg.norm(f), 1e-300))
    return const, rel
