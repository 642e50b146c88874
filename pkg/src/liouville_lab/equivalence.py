"""Geodesically equivalent metrics and the integrals they produce.

For a pair ``(g, gbar)`` sharing unparametrised geodesics,

    Ft = (det g / det gbar)^{2/3} g^{-1} gbar g^{-1}

is the tensor of a quadratic integral of the g-geodesic flow.  The
inverse map recovers ``gbar`` from an integral with invertible mixed tensor
``A = Ft g``: ``det A = (det g / det gbar)^{1/3}`` and
``gbar = (det A)^{-2} g A``.  Cube roots are real, so pairs of different
signature (negative determinant ratio) are handled.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import jets as jm
from .errors import NonIntegralError, OrderingError, SingularIntegralError
from .fields import ScalarField2D, VectorField2D
from .flow import (StepControl, accelerations, integrate_batch, hamiltonian,
                   unparam_geodesic_residual, velocities)
from .geometry import RIEMANNIAN, MetricField, lie_derivative_metric, metric_at
from .integrals import QuadraticIntegral, hamiltonian_integral, poisson_bracket_residual

__all__ = [
    "MetricPair", "integral_from_pair", "integral_field_from_pair", "metric_from_integral",
    "metric_field_from_integral", "riemannianize", "RiemannianPartner",
    "transfer_killing", "ProjectiveIntegral", "projective_integral",
    "screen_integrals", "superintegrability_rank", "geodesic_equivalence_check",
    "random_initial_conditions",
]

SINGULAR_TOL = 1e-10


@dataclass
class MetricPair:
    g: MetricField
    gbar: MetricField
    equivalence_residual: Optional[float] = None
    certificates: list = field(default_factory=list)


def _det(M):
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def integral_from_pair(g: MetricField, gbar: MetricField, p):
    """Coefficients ``(a, b, c)`` of the integral built from the pair at ``p``."""
    G, Gb = metric_at(g, p), metric_at(gbar, p)
    Gi = np.linalg.inv(G)
    lam = np.cbrt(_det(G) / _det(Gb)) ** 2
    Ft = lam[..., None, None] * (Gi @ Gb @ Gi)
    return Ft[..., 0, 0], 2.0 * Ft[..., 0, 1], Ft[..., 1, 1]


def _pair_tensor_jets(g, gbar, X, Y):
    g11, g12, g22 = g.component_jets(X, Y)
    h11, h12, h22 = gbar.component_jets(X, Y)
    d = g11 * g22 - g12 * g12
    db = h11 * h22 - h12 * h12
    lam = jm.cbrt(d / db) ** 2
    # g^{-1} = adj / d
    i11, i12, i22 = g22 / d, -g12 / d, g11 / d
    # M = g^{-1} gbar
    m11 = i11 * h11 + i12 * h12
    m12 = i11 * h12 + i12 * h22
    m21 = i12 * h11 + i22 * h12
    m22 = i12 * h12 + i22 * h22
    # Ft = M g^{-1}
    f11 = m11 * i11 + m12 * i12
    f12 = m11 * i12 + m12 * i22
    f22 = m21 * i12 + m22 * i22
    return lam * f11, lam * f12 * 2.0, lam * f22


def integral_field_from_pair(g: MetricField, gbar: MetricField, name="F_pair"):
    """The same integral as a field with exact derivatives (for brackets)."""
    def comp(k):
        return ScalarField2D(lambda x, y: _pair_tensor_jets(g, gbar, x, y)[k])
    return QuadraticIntegral(comp(0), comp(1), comp(2), name)


def metric_from_integral(g: MetricField, F: QuadraticIntegral, p):
    """Partner metric ``gbar`` at ``p`` as a ``(..., 2, 2)`` array.

    Raises :class:`SingularIntegralError` where ``det(Ft g)`` vanishes.
    """
    G = metric_at(g, p)
    A = F.tensor_at(*p) @ G
    dA = _det(A)
    scale = np.maximum(1.0, np.abs(A).max(axis=(-2, -1)) ** 2)
    if np.any(np.abs(dA) <= SINGULAR_TOL * scale):
        raise SingularIntegralError("mixed tensor of the integral is not invertible")
    return (G @ A) / (dA ** 2)[..., None, None]


def metric_field_from_integral(g: MetricField, F: QuadraticIntegral, signature=None):
    """``gbar`` as a :class:`MetricField` with exact derivatives."""
    def comps(x, y):
        g11, g12, g22 = g.component_jets(x, y)
        a, b, c = F.jets(x, y)
        h = b * 0.5
        # A = Ft g
        a11 = a * g11 + h * g12
        a12 = a * g12 + h * g22
        a21 = h * g11 + c * g12
        a22 = h * g12 + c * g22
        dA = a11 * a22 - a12 * a21
        w = 1.0 / (dA * dA)
        return ((g11 * a11 + g12 * a21) * w, (g11 * a12 + g12 * a22) * w,
                (g12 * a12 + g22 * a22) * w)

    fields = [ScalarField2D(lambda x, y, k=k: comps(x, y)[k]) for k in range(3)]
    if signature is None:
        return MetricField.from_components(*fields, lattice=g.lattice)
    return MetricField(*fields, signature=signature, lattice=g.lattice)


@dataclass
class RiemannianPartner:
    """Result of :func:`riemannianize`."""

    pair: MetricPair
    integral: QuadraticIntegral
    x_min: float
    y_max: float
    shift: float
    s: float
    min_integral_eigenvalue: float
    min_metric_eigenvalue: float

    def to_dict(self):
        return {"x_min": self.x_min, "y_max": self.y_max, "shift": self.shift, "s": self.s,
                "min_integral_eigenvalue": self.min_integral_eigenvalue,
                "min_metric_eigenvalue": self.min_metric_eigenvalue}


def riemannianize(system, n=64):
    """Positive-definite metric geodesically equivalent to a Lorentzian
    Liouville metric ``(X - Y)(dx^2 - dy^2)`` with ``X > Y``.

    ``s = min X + max Y`` and ``Fbar = H + F/s``.  When ``s <= 0`` both
    functions are shifted by ``k = (1 - s)/2`` first (the metric does not
    change; ``F`` becomes ``F - 2kH``), so ``s = 1``.
    """
    X, Y = system.data["X"], system.data["Y"]
    if system.data.get("eps", -1) != -1:
        raise ValueError("riemannianize needs the Lorentzian Liouville family (eps = -1)")
    x_min, _ = X.extrema(0.0, getattr(X, "period", 1.0))
    _, y_max = Y.extrema(0.0, getattr(Y, "period", 1.0))
    if not x_min > y_max:
        raise OrderingError(f"min X = {x_min:.6g} must exceed max Y = {y_max:.6g}")
    g = system.metric
    H = hamiltonian_integral(g)
    F1 = system.integral
    s = x_min + y_max
    k = 0.0
    if s <= 0:
        k = (1.0 - s) / 2.0
        F1 = F1 - H.scaled(2.0 * k)
        s = 1.0
    Fbar = (H + F1.scaled(1.0 / s)).named("F_bar")
    x, y = system.grid(n)
    T = Fbar.tensor_at(x, y)
    min_int = float(np.min(np.linalg.eigvalsh(T)))
    if not min_int > 0:
        raise OrderingError(f"F_bar is not positive definite (min eigenvalue {min_int:.3e})")
    gbar = metric_field_from_integral(g, Fbar, RIEMANNIAN)
    Gb = metric_at(gbar, (x, y))
    min_met = float(np.min(np.linalg.eigvalsh(Gb)))
    pair = MetricPair(g, gbar)
    return RiemannianPartner(pair, Fbar, float(x_min), float(y_max), k, float(s),
                             min_int, min_met)


def transfer_killing(g: MetricField, gbar: MetricField, Kbar: VectorField2D):
    """Killing field of ``g`` from a Killing field of ``gbar``:
    ``K = (det g / det gbar)^{1/3} g^{-1} gbar Kbar``."""
    def comps(x, y):
        g11, g12, g22 = g.component_jets(x, y)
        h11, h12, h22 = gbar.component_jets(x, y)
        d = g11 * g22 - g12 * g12
        lam = jm.cbrt(d / (h11 * h22 - h12 * h12))
        kx, ky = Kbar.vx(x, y), Kbar.vy(x, y)
        wx = h11 * kx + h12 * ky
        wy = h12 * kx + h22 * ky
        return (lam * (g22 * wx - g12 * wy) / d, lam * (g11 * wy - g12 * wx) / d)

    return VectorField2D(ScalarField2D(lambda x, y: comps(x, y)[0]),
                         ScalarField2D(lambda x, y: comps(x, y)[1]))


@dataclass
class ProjectiveIntegral:
    """Velocity-quadratic form ``I(xi) = (L_v g)(xi, xi) - 2/3 tr(g^{-1} L_v g) g(xi, xi)``."""

    metric: MetricField
    v: VectorField2D

    def tensor_at(self, p):
        L = lie_derivative_metric(self.metric, self.v, p)
        G = metric_at(self.metric, p)
        tr = np.trace(np.linalg.solve(G, L), axis1=-2, axis2=-1)
        return L - (2.0 / 3.0) * tr[..., None, None] * G

    def coefficients_at(self, p):
        T = self.tensor_at(p)
        return T[..., 0, 0], 2.0 * T[..., 0, 1], T[..., 1, 1]

    def on_velocity(self, x, y, vx, vy):
        T = self.tensor_at((x, y))
        return T[..., 0, 0] * vx * vx + 2 * T[..., 0, 1] * vx * vy + T[..., 1, 1] * vy * vy

    def __call__(self, x, y, px, py):
        # phase-space version: velocity = g^{-1} p
        x, y = np.asarray(x, float), np.asarray(y, float)
        Gi = np.linalg.inv(metric_at(self.metric, (x, y)))
        vx = Gi[..., 0, 0] * px + Gi[..., 0, 1] * py
        vy = Gi[..., 1, 0] * px + Gi[..., 1, 1] * py
        return self.on_velocity(x, y, vx, vy)


def projective_integral(metric, v):
    return ProjectiveIntegral(metric, v)


def screen_integrals(metric, integrals, grid, tol=1e-8):
    """Split candidates into those passing the bracket check and the names
    of those failing it."""
    good, bad, residuals = [], [], {}
    for k, F in enumerate(integrals):
        name = F.name or f"F{k}"
        r = poisson_bracket_residual(metric, F, grid)
        residuals[name] = r
        (good if r <= tol else bad).append(F if r <= tol else name)
    return good, bad, residuals


def superintegrability_rank(metric, integrals, grid, tol=1e-8, rank_tol=1e-8):
    """Number of linearly independent integrals among ``integrals``.

    Each integral becomes the vector of its sampled coefficients; the rank
    counts singular values above ``rank_tol * sigma_max``.
    """
    good, bad, _ = screen_integrals(metric, integrals, grid, tol)
    if bad:
        raise NonIntegralError(f"not integrals: {', '.join(bad)}", bad)
    rows = [np.concatenate([np.ravel(c) for c in F.coefficients_at(*grid)]) for F in good]
    if not rows:
        return 0
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def random_initial_conditions(metric, n, rng, domain_sampler, energy=0.5, max_tries=10000):
    """``n`` states with ``H = energy`` (sign included) at random points."""
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not find initial conditions with the requested energy sign")
        x, y = domain_sampler(1, rng)
        a = rng.random() * 2 * np.pi
        z = np.array([x[0], y[0], np.cos(a), np.sin(a)])
        H = hamiltonian(metric, z)
        if H * energy > 0 and abs(H) > 1e-2:
            z[2:] *= np.sqrt(energy / H)
            out.append(z)
    return np.array(out)


def geodesic_equivalence_check(pair: MetricPair, n_samples=10, T=5.0, seed=0,
                               domain_sampler=None, control: StepControl = None):
    """Integrate ``n_samples`` g-geodesics and return the largest residual
    of them as unparametrised gbar-geodesics."""
    rng = np.random.default_rng(seed)
    lattice = pair.g.lattice
    if domain_sampler is None:
        if lattice is None:
            domain_sampler = lambda k, r: (r.random(k), r.random(k))  # noqa: E731
        else:
            domain_sampler = lattice.sample_points
    z0 = random_initial_conditions(pair.g, n_samples, rng, domain_sampler)
    control = control or StepControl(error_estimate=False, store_every=10)
    worst = 0.0
    for tr in integrate_batch(pair.g, z0, T, control):
        if isinstance(tr, Exception):
            raise tr
        st = tr.states
        V = velocities(pair.g, st)
        A = accelerations(pair.g, st)
        worst = max(worst, unparam_geodesic_residual(pair.gbar, st[:, :2], V, A))
    pair.equivalence_residual = worst
    return worst
