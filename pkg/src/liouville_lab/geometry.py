"""Metrics on the plane or torus and their basic differential geometry.

Operations are vectorised: a point ``p = (x, y)`` may hold arrays of
coordinates, and results carry the matrix indices as trailing axes.
Index convention for derivative arrays: ``dg[..., k, i, j] = d_k g_ij``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import jets as jm
from .errors import DegenerateMetricError, SignatureError
from .fields import Lattice, ScalarField2D, VectorField2D, as_field

__all__ = [
    "MetricField", "RIEMANNIAN", "LORENTZIAN", "DET_TOL",
    "metric_at", "inverse_metric_at", "metric_derivatives", "christoffel_at",
    "gauss_curvature_at", "null_frame_at", "null_directions", "lie_derivative_metric",
]

RIEMANNIAN = "riemannian"
LORENTZIAN = "lorentzian"
DET_TOL = 1e-12


@dataclass(frozen=True)
class MetricField:
    """Symmetric 2-tensor ``g11 dx^2 + 2 g12 dx dy + g22 dy^2``.

    With this convention the product ``f dxdy`` (quadratic form
    ``f xdot ydot``) has ``g12 = f / 2``; see :meth:`null`.
    """

    g11: ScalarField2D
    g12: ScalarField2D
    g22: ScalarField2D
    signature: str = LORENTZIAN
    lattice: Optional[Lattice] = None

    def __post_init__(self):
        if self.signature not in (RIEMANNIAN, LORENTZIAN):
            raise ValueError(f"unknown signature {self.signature!r}")

    @classmethod
    def from_components(cls, g11, g12, g22, signature=None, lattice=None):
        g11, g12, g22 = as_field(g11), as_field(g12), as_field(g22)
        if signature is None:
            d = g11(0.0, 0.0) * g22(0.0, 0.0) - g12(0.0, 0.0) ** 2
            signature = LORENTZIAN if d < 0 else RIEMANNIAN
        return cls(g11, g12, g22, signature, lattice)

    @classmethod
    def null(cls, f, lattice=None):
        """The metric ``f dxdy`` in null coordinates (stored as g12 = f/2)."""
        zero = ScalarField2D.constant(0.0)
        return cls(zero, as_field(f) * 0.5, zero, LORENTZIAN, lattice)

    @classmethod
    def constant(cls, g11, g12, g22, lattice=None):
        return cls.from_components(float(g11), float(g12), float(g22), lattice=lattice)

    def with_lattice(self, lattice):
        return MetricField(self.g11, self.g12, self.g22, self.signature, lattice)

    def scaled(self, c):
        """``c * g``; the signature tag follows the determinant sign."""
        return MetricField(self.g11 * c, self.g12 * c, self.g22 * c, self.signature, self.lattice)

    def jets(self, x, y, order=2):
        X, Y = jm.variables(x, y, order)
        shape = X.v.shape
        return tuple(g(X, Y).broadcast(shape) for g in (self.g11, self.g12, self.g22))

    def component_jets(self, X, Y):
        """Component jets at jet-valued points (for composing new fields)."""
        return self.g11(X, Y), self.g12(X, Y), self.g22(X, Y)

    def check_signature(self, x, y):
        """True iff ``det(g)`` has the sign implied by the tag at every point."""
        d = self.g11(x, y) * self.g22(x, y) - self.g12(x, y) ** 2
        if self.signature == LORENTZIAN:
            return bool(np.all(d < 0))
        return bool(np.all(d > 0))


def _stack2(a11, a12, a22):
    return np.stack([np.stack([a11, a12], -1), np.stack([a12, a22], -1)], -2)


def _check_det(det, where="metric"):
    det = np.asarray(det)
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) < DET_TOL):
        k = int(np.argmin(np.where(np.isfinite(det), np.abs(det), -1.0)))
        raise DegenerateMetricError(
            f"{where} is degenerate: |det| = {abs(det.flat[k]):.3e} < {DET_TOL:g}")


def metric_at(metric: MetricField, p):
    """``[[g11, g12], [g12, g22]]`` at ``p``; shape ``(..., 2, 2)``."""
    x, y = p
    g11, g12, g22 = metric.g11(x, y), metric.g12(x, y), metric.g22(x, y)
    _check_det(g11 * g22 - g12 * g12)
    return _stack2(g11, g12, g22)


def inverse_metric_at(metric: MetricField, p):
    x, y = p
    g11, g12, g22 = metric.g11(x, y), metric.g12(x, y), metric.g22(x, y)
    det = g11 * g22 - g12 * g12
    _check_det(det)
    return _stack2(g22 / det, -g12 / det, g11 / det)


def metric_derivatives(metric: MetricField, p, order=2):
    """Metric with its first (and second) partials.

    Returns ``(g, dg)`` or ``(g, dg, d2g)`` with ``dg[..., k, i, j] =
    d_k g_ij`` and ``d2g[..., k, l, i, j] = d_k d_l g_ij``.
    """
    x, y = p
    J = metric.jets(x, y, order)
    g = _stack2(*(j.v for j in J))
    _check_det(g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2)
    dg = np.stack([_stack2(*(j.x for j in J)), _stack2(*(j.y for j in J))], -3)
    if order == 1:
        return g, dg
    dxx = _stack2(*(j.xx for j in J))
    dxy = _stack2(*(j.xy for j in J))
    dyy = _stack2(*(j.yy for j in J))
    d2g = np.stack([np.stack([dxx, dxy], -3), np.stack([dxy, dyy], -3)], -4)
    return g, dg, d2g


def _christoffel_from(ginv, dg):
    # Gamma^i_jk = 1/2 g^il (d_j g_lk + d_k g_lj - d_l g_jk)
    t = (np.einsum("...jlk->...ljk", dg) + np.einsum("...klj->...ljk", dg)
         - dg)  # t[..., l, j, k]
    return 0.5 * np.einsum("...il,...ljk->...ijk", ginv, t)


def christoffel_at(metric: MetricField, p):
    """Levi-Civita symbols ``Gamma[..., i, j, k] = Gamma^i_{jk}``."""
    g, dg = metric_derivatives(metric, p, order=1)
    return _christoffel_from(np.linalg.inv(g), dg)


def gauss_curvature_at(metric: MetricField, p):
    """Gaussian curvature ``R_1212 / det g`` from the Riemann tensor."""
    g, dg, d2g = metric_derivatives(metric, p, order=2)
    ginv = np.linalg.inv(g)
    gam = _christoffel_from(ginv, dg)
    # d_m g^il = -g^ia d_m g_ab g^bl
    dginv = -np.einsum("...ia,...mab,...bl->...mil", ginv, dg, ginv)
    t = (np.einsum("...jlk->...ljk", dg) + np.einsum("...klj->...ljk", dg) - dg)
    dt = (np.einsum("...mjlk->...mljk", d2g) + np.einsum("...mklj->...mljk", d2g) - d2g)
    dgam = 0.5 * (np.einsum("...mil,...ljk->...mijk", dginv, t)
                  + np.einsum("...il,...mljk->...mijk", ginv, dt))
    # R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
    i, j, k, l = 0, 1, 0, 1
    R_i = (dgam[..., k, :, l, j] - dgam[..., l, :, k, j]
           + np.einsum("...im,...m->...i", gam[..., :, k, :], gam[..., :, l, j])
           - np.einsum("...im,...m->...i", gam[..., :, l, :], gam[..., :, k, j]))
    R1212 = np.einsum("...a,...a->...", g[..., i, :], R_i)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    return R1212 / det


def null_directions(g11, g12, g22):
    """Two (unnormalised) null vectors of a Lorentzian form, one per family.

    Works for plain arrays and for jets.  Neither vector vanishes while
    ``g12^2 - g11 g22 > 0``.
    """
    disc = g12 * g12 - g11 * g22
    s = jm.sqrt(disc)
    v12 = g12.v if jm.is_jet(g12) else np.asarray(g12)
    sigma = np.where(v12 >= 0, 1.0, -1.0)
    # cancellation-free roots: u/w = q/g11 and g22/q, with |q| >= sqrt(disc) > 0
    q = -(g12 + s * sigma)
    n1 = (q, g11)
    n2 = (g22, q)
    return n1, n2


def null_frame_at(metric: MetricField, p):
    """Null frame ``(V1, V2)`` with g(Vi, Vi) = 0, g(V1, V2) = 1, det > 0.

    Branch rule: V1 has positive x-component (positive y-component if the
    x-component vanishes); both vectors get the same Euclidean length.
    Returns two arrays of shape ``(..., 2)``.
    """
    if metric.signature != LORENTZIAN:
        raise SignatureError("null frames exist only for Lorentzian metrics")
    G = metric_at(metric, p)
    g11, g12, g22 = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    if np.any(g12 * g12 - g11 * g22 <= 0):
        raise SignatureError("metric is not Lorentzian at every requested point")
    n1, n2 = null_directions(g11, g12, g22)
    a = np.stack(n1, -1)
    b = np.stack(n2, -1)
    a /= np.linalg.norm(a, axis=-1, keepdims=True)
    b /= np.linalg.norm(b, axis=-1, keepdims=True)

    def canon(v):
        flip = (v[..., 0] < 0) | ((v[..., 0] == 0) & (v[..., 1] < 0))
        return np.where(flip[..., None], -v, v)

    a, b = canon(a), canon(b)

    def gprod(u, w):
        return np.einsum("...i,...ij,...j->...", u, G, w)

    def det2(u, w):
        return u[..., 0] * w[..., 1] - u[..., 1] * w[..., 0]

    # candidate A: V1 = a; candidate B: V1 = b.  Exactly one is positively oriented.
    sa = np.sign(gprod(a, b))
    V2a = sa[..., None] * b
    okA = det2(a, V2a) > 0
    V1 = np.where(okA[..., None], a, b)
    V2 = np.where(okA[..., None], V2a, sa[..., None] * a)
    k = gprod(V1, V2)
    scale = 1.0 / np.sqrt(k)
    return V1 * scale[..., None], V2 * scale[..., None]


def lie_derivative_metric(metric: MetricField, v: VectorField2D, p):
    """``(L_v g)_ij`` at ``p`` as a ``(..., 2, 2)`` array."""
    g, dg = metric_derivatives(metric, p, order=1)
    jx, jy = v.jets(p[0], p[1], order=1)
    vec = np.stack([jx.v, jy.v], -1)
    # dv[..., i, k] = d_i v^k
    dv = np.stack([np.stack([jx.x, jy.x], -1), np.stack([jx.y, jy.y], -1)], -2)
    term1 = np.einsum("...k,...kij->...ij", vec, dg)
    term2 = np.einsum("...kj,...ik->...ij", g, dv)
    return term1 + term2 + np.swapaxes(term2, -1, -2)
