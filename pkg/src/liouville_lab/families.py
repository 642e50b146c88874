"""Constructors for the integrable metric families, with certificates.

Local constructors return ``(metric, integral)``.  Global constructors
return a :class:`TorusSystem` whose certificates record every sampled
check; a failed check raises the matching :class:`CertificateError`
subclass carrying the full certificate list.
"""
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets as jm
from .errors import (CauchyRiemannError, CertificateError, CollisionError,
                     ConformalFactorError, DegenerateMetricError, PeriodicityError,
                     SignatureError, SymmetryError)
from .fields import (Function1D, Lattice, ScalarField2D, ScalarPeriodic1D,
                     VectorField2D, smooth_step)
from .geometry import LORENTZIAN, RIEMANNIAN, MetricField, gauss_curvature_at
from .integrals import (LinearIntegral, QuadraticIntegral, hamiltonian_integral,
                        killing_residual, poisson_bracket_residual, pullback_integral,
                        pullback_metric)

__all__ = [
    "Certificate", "NullChart", "TorusSystem", "HolomorphicData", "FoliationAngle",
    "make_liouville", "make_complex_liouville", "make_jordan_block",
    "make_global_liouville", "make_klein_liouville", "make_linear_integral_torus",
    "make_foliation_metric", "make_flat_torus", "separation",
    "jordan_profile", "liouville_profile", "mixed_profile", "reeb_profile",
    "PERIODIC_TOL", "SEPARATION_TOL", "BRACKET_TOL",
]

PERIODIC_TOL = 1e-12
SEPARATION_TOL = 1e-9
BRACKET_TOL = 1e-8
CERT_GRID = 64


@dataclass(frozen=True)
class Certificate:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "threshold": float(self.threshold), "detail": self.detail}


def _cert(name, value, threshold, detail="", below=True):
    value = float(value)
    ok = value <= threshold if below else value > threshold
    return Certificate(name, bool(ok and np.isfinite(value)), value, float(threshold), detail)


@dataclass(frozen=True)
class NullChart:
    """A global chart ``(s, t)`` in which the metric reads ``f ds dt``.

    ``to_chart`` maps old coordinates to chart coordinates; ``domain`` is a
    rectangle ``((s0, s1), (t0, t1))`` covering a fundamental domain.
    """

    f: ScalarField2D
    integral: QuadraticIntegral
    domain: tuple
    to_chart: Callable


@dataclass
class TorusSystem:
    """Metric plus integral on a torus (or a chart), with certificates."""

    metric: MetricField
    integral: QuadraticIntegral
    lattice: Optional[Lattice]
    family_tag: str
    certificates: list = field(default_factory=list)
    killing: Optional[VectorField2D] = None
    linear_integral: Optional[LinearIntegral] = None
    extra_integrals: list = field(default_factory=list)
    null_chart: Optional[NullChart] = None
    domain: Optional[tuple] = None
    data: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.certificates)

    @property
    def failed(self):
        return [c.name for c in self.certificates if not c.passed]

    @property
    def hamiltonian(self):
        return hamiltonian_integral(self.metric)

    def sample_domain(self):
        """``((x0, x1), (y0, y1))`` used for grids: the lattice cell or chart."""
        if self.domain is not None:
            return self.domain
        return None

    def grid(self, n):
        if self.lattice is not None:
            return self.lattice.grid(n)
        (x0, x1), (y0, y1) = self.domain
        s = (np.arange(n) + 0.5) / n
        X, Y = np.meshgrid(x0 + (x1 - x0) * s, y0 + (y1 - y0) * s, indexing="ij")
        return X, Y

    def random_points(self, n, rng):
        if self.lattice is not None:
            return self.lattice.sample_points(n, rng)
        (x0, x1), (y0, y1) = self.domain
        u = rng.random((n, 2))
        return x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]

    def certificate_dict(self):
        return [c.to_dict() for c in self.certificates]


_ERRORS = {
    "separation_a": CollisionError,
    "periodicity_b": PeriodicityError,
    "periodicity_x": PeriodicityError,
    "periodicity_y": PeriodicityError,
    "symmetry_y": SymmetryError,
    "conformal_factor": ConformalFactorError,
    "cauchy_riemann": CauchyRiemannError,
}


def _finalize(system):
    bad = [c for c in system.certificates if not c.passed]
    if bad:
        err = _ERRORS.get(bad[0].name, CertificateError)
        raise err(f"{system.family_tag}: certificate(s) failed: {', '.join(c.name for c in bad)}",
                  system.certificates)
    return system


def _default_interval(fn, fallback=(0.0, 1.0)):
    if isinstance(fn, ScalarPeriodic1D):
        return 0.0, fn.period
    return fallback


def separation(X: Function1D, Y: Function1D, x_interval=None, y_interval=None):
    """Gap between the ranges of X and Y; positive iff X(x) != Y(y) for all
    (x, y).  Ranges come from dense sampling plus bounded refinement."""
    xlo, xhi = X.extrema(*(x_interval or _default_interval(X)))
    ylo, yhi = Y.extrema(*(y_interval or _default_interval(Y)))
    gap = max(xlo - yhi, ylo - xhi)
    return gap, (xlo, xhi), (ylo, yhi)


# --------------------------------------------------------------------------
# local normal forms


def make_liouville(X: Function1D, Y: Function1D, eps=-1, x_interval=None, y_interval=None):
    """``g = (X - Y)(dx^2 + eps dy^2)`` with ``F = (X p_y^2 + eps Y p_x^2)/(X - Y)``."""
    if eps not in (-1, 1):
        raise ValueError("eps must be +1 or -1")
    gap, _, _ = separation(X, Y, x_interval, y_interval)
    if gap < SEPARATION_TOL:
        raise CollisionError(f"X(x) and Y(y) collide: range gap {gap:.3e}",
                             [_cert("separation_a", -gap, -SEPARATION_TOL)])
    Xf, Yf = X.of_x(), Y.of_y()
    D = Xf - Yf
    metric = MetricField(D, ScalarField2D.constant(0.0), D * float(eps),
                         LORENTZIAN if eps < 0 else RIEMANNIAN)
    integral = QuadraticIntegral(Yf * float(eps) / D, ScalarField2D.constant(0.0), Xf / D, "F")
    return metric, integral


@dataclass(frozen=True)
class HolomorphicData:
    """Polynomial ``h(z) = sum_k c_k z^k`` in ``z = x + i y``."""

    complex_coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "complex_coeffs", tuple(complex(c) for c in self.complex_coeffs))

    def __call__(self, x, y):
        z = x + 1j * y
        out = 0.0 * z + self.complex_coeffs[-1]
        for c in reversed(self.complex_coeffs[:-1]):
            out = out * z + c
        return out

    @property
    def real_part(self):
        return ScalarField2D(lambda x, y: jm.real(self(x, y)), name="Re h")

    @property
    def imag_part(self):
        return ScalarField2D(lambda x, y: jm.imag(self(x, y)), name="Im h")

    def cauchy_riemann_residual(self, x, y):
        u = self.real_part.jet(x, y, order=1)
        v = self.imag_part.jet(x, y, order=1)
        return float(max(np.max(np.abs(u.x - v.y)), np.max(np.abs(u.y + v.x))))


def make_complex_liouville(h: HolomorphicData, domain=((0.0, 1.0), (0.0, 1.0)), n=CERT_GRID):
    """``g = Im(h) dxdy``, ``F = p_x^2 - p_y^2 + 2 (Re h / Im h) p_x p_y``.

    Returns a chart system (no lattice) over ``domain``.
    """
    system = TorusSystem(None, None, None, "complex_liouville", domain=domain)
    x, y = system.grid(n)
    cr = h.cauchy_riemann_residual(x, y)
    vmin = float(np.min(h.imag_part(x, y)))
    certs = [_cert("cauchy_riemann", cr, 1e-10),
             _cert("conformal_factor", vmin, 0.0, "min Im h on grid", below=False)]
    system.certificates = certs
    if not all(c.passed for c in certs):
        return _finalize(system)
    u, v = h.real_part, h.imag_part
    system.metric = MetricField(ScalarField2D.constant(0.0), v * 0.5, ScalarField2D.constant(0.0),
                                LORENTZIAN)
    system.integral = QuadraticIntegral(ScalarField2D.constant(1.0), u * 2.0 / v,
                                        ScalarField2D.constant(-1.0), "F")
    system.null_chart = NullChart(v, system.integral, domain, lambda x, y: (x, y))
    system.certificates.append(_cert("bracket", poisson_bracket_residual(
        system.metric, system.integral, (x, y)), BRACKET_TOL))
    system.data = {"h": [[c.real, c.imag] for c in h.complex_coeffs]}
    return _finalize(system)


def make_jordan_block(Y: ScalarPeriodic1D, Yhat: Function1D, eps=1,
                      domain=((-0.4, 0.4), (0.0, 1.0)), n=CERT_GRID):
    """``g = (Yhat(y) + x Y'(y)/2) dxdy``, ``F = eps (p_x^2 - (Y/f) p_x p_y)``.

    With ``eps = 1`` the trace of the mixed tensor is ``-Y/2``.  Raises
    :class:`DegenerateMetricError` if the conformal factor vanishes on
    ``domain``.
    """
    if eps not in (-1, 1):
        raise ValueError("eps must be +1 or -1")
    dY = Y.derivative(1) if isinstance(Y, ScalarPeriodic1D) else None
    if dY is None:
        raise TypeError("Y must be a ScalarPeriodic1D (its derivative is needed analytically)")
    x_field = ScalarField2D.coordinate_x()
    f = Yhat.of_y() + x_field * dY.of_y() * 0.5
    system = TorusSystem(None, None, None, "jordan_block", domain=domain)
    x, y = system.grid(n)
    # the factor is affine in x, so the rectangle's edges bound it
    (x0, x1), (y0, y1) = domain
    ys = np.linspace(y0, y1, 8 * n + 1)
    edge = np.concatenate([f(np.full_like(ys, x0), ys), f(np.full_like(ys, x1), ys)])
    if np.any(np.sign(edge) != np.sign(edge[0])) or np.min(np.abs(edge)) < 1e-12:
        raise DegenerateMetricError("Yhat + x Y'/2 vanishes on the requested domain")
    metric = MetricField(ScalarField2D.constant(0.0), f * 0.5, ScalarField2D.constant(0.0),
                         LORENTZIAN)
    Yf = Y.of_y()
    integral = QuadraticIntegral(ScalarField2D.constant(float(eps)), Yf * float(-eps) / f,
                                 ScalarField2D.constant(0.0), "F")
    system.metric, system.integral = metric, integral
    system.null_chart = NullChart(f, integral, domain, lambda x, y: (x, y))
    system.certificates = [
        _cert("conformal_factor", float(np.min(np.abs(edge))), 0.0, "min |f| on domain edges",
              below=False),
        _cert("bracket", poisson_bracket_residual(metric, integral, (x, y)), BRACKET_TOL),
    ]
    system.data = {"Y": Y, "Yhat": Yhat, "eps": eps}
    return _finalize(system)


# --------------------------------------------------------------------------
# global families on tori


def _periodicity_residual(fn: Function1D, shift, n=256):
    if shift == 0.0:
        return 0.0
    t = np.linspace(0.0, 1.0, n, endpoint=False) * max(abs(shift), 1.0) * 3.0
    scale = max(1.0, float(np.max(np.abs(fn(t)))))
    return float(np.max(np.abs(fn(t + shift) - fn(t)))) / scale


def _lattice_invariance(metric, integral, lattice, rng, n=100):
    x, y = lattice.sample_points(n, rng)
    worst = 0.0
    fields = [metric.g11, metric.g12, metric.g22, integral.a, integral.b, integral.c]
    for k, m in ((1, 0), (0, 1)):
        xs, ys = lattice.translate(x, y, k, m)
        for fld in fields:
            v0 = fld(x, y)
            worst = max(worst, float(np.max(np.abs(fld(xs, ys) - v0) / np.maximum(1.0, np.abs(v0)))))
    return worst


def _liouville_null_chart(metric, integral, lattice, eps):
    if eps > 0:
        return None
    # s = x + y, t = x - y
    psi = lambda s, t: ((s + t) * 0.5, (s - t) * 0.5)  # noqa: E731
    jac = lambda s, t: ((0.5, 0.5), (0.5, -0.5))  # noqa: E731
    g = pullback_metric(metric, psi, jac)
    F = pullback_integral(integral, psi, jac)
    corners = lattice.matrix @ np.array([[0, 1, 0, 1], [0, 0, 1, 1]], float)
    s, t = corners[0] + corners[1], corners[0] - corners[1]
    dom = ((float(s.min()), float(s.max())), (float(t.min()), float(t.max())))
    return NullChart(g.g12 * 2.0, F, dom, lambda x, y: (x + y, x - y))


def make_global_liouville(X: ScalarPeriodic1D, Y: ScalarPeriodic1D, lattice: Lattice = None,
                          eps=-1, strict=False, seed=0, n=CERT_GRID):
    """Liouville metric descended to ``R^2 / lattice``.

    Certificates: ``periodicity_b`` (X and Y invariant under the lattice
    components), ``separation_a`` (ranges of X and Y disjoint),
    ``lattice_invariance``, ``signature`` and ``bracket``.  ``strict``
    rejects constant X or Y; lenient mode only warns.
    """
    lattice = lattice or Lattice.unit()
    certs = []
    per = max(_periodicity_residual(X, lattice.xi[0]), _periodicity_residual(X, lattice.nu[0]),
              _periodicity_residual(Y, lattice.xi[1]), _periodicity_residual(Y, lattice.nu[1]))
    certs.append(_cert("periodicity_b", per, PERIODIC_TOL,
                       "max relative change of X, Y under lattice components"))
    gap, xr, yr = separation(X, Y)
    certs.append(_cert("separation_a", -gap, -SEPARATION_TOL,
                       f"range gap {gap:.6g}; X in [{xr[0]:.6g}, {xr[1]:.6g}], "
                       f"Y in [{yr[0]:.6g}, {yr[1]:.6g}]"))
    constant = [nm for nm, fn in (("X", X), ("Y", Y))
                if isinstance(fn, ScalarPeriodic1D) and fn.is_constant()]
    if constant:
        msg = f"{', '.join(constant)} constant; the global statements need nonconstant functions"
        if strict:
            certs.append(Certificate("nonconstant", False, 1.0, 0.0, msg))
        else:
            warnings.warn(msg)
            certs.append(Certificate("nonconstant", True, 0.0, 0.0, msg + " (lenient)"))
    system = TorusSystem(None, None, lattice, "global_liouville", certs,
                         data={"X": X, "Y": Y, "eps": eps, "x_range": xr, "y_range": yr})
    if not all(c.passed for c in certs):
        return _finalize(system)
    metric, integral = make_liouville(X, Y, eps)
    metric = metric.with_lattice(lattice)
    system.metric, system.integral = metric, integral
    rng = np.random.default_rng(seed)
    certs.append(_cert("lattice_invariance", _lattice_invariance(metric, integral, lattice, rng),
                       PERIODIC_TOL))
    x, y = lattice.grid(n)
    certs.append(Certificate("signature", metric.check_signature(x, y), 0.0, 0.0,
                             f"{metric.signature} (eps = {eps})"))
    certs.append(_cert("bracket", poisson_bracket_residual(metric, integral, (x, y)), BRACKET_TOL))
    system.null_chart = _liouville_null_chart(metric, integral, lattice, eps)
    return _finalize(system)


def make_klein_liouville(X: ScalarPeriodic1D, Y: ScalarPeriodic1D, c, d, eps=-1, seed=0,
                         n=CERT_GRID):
    """Liouville metric on the oriented double cover of a Klein bottle.

    Requires ``X(x + c) = X(x)``, ``Y(y + d) = Y(y)`` and ``Y`` even.  The
    cover lattice is ``{(2c, 0), (0, d)}``; the gluing map
    ``(x, y) -> (x + c, -y)`` must preserve metric and integral.
    """
    if c == 0 or d == 0:
        raise ValueError("c and d must be nonzero")
    certs = [
        _cert("periodicity_x", _periodicity_residual(X, c), PERIODIC_TOL, "X(x + c) - X(x)"),
        _cert("periodicity_y", _periodicity_residual(Y, d), PERIODIC_TOL, "Y(y + d) - Y(y)"),
    ]
    t = np.linspace(0.0, abs(d), 257)
    sym = float(np.max(np.abs(Y(-t) - Y(t)))) / max(1.0, float(np.max(np.abs(Y(t)))))
    certs.append(_cert("symmetry_y", sym, PERIODIC_TOL, "Y(-y) - Y(y)"))
    gap, xr, yr = separation(X, Y, (0.0, abs(c)), (0.0, abs(d)))
    certs.append(_cert("separation_a", -gap, -SEPARATION_TOL, f"range gap {gap:.6g}"))
    lattice = Lattice((2.0 * c, 0.0), (0.0, float(d)))
    system = TorusSystem(None, None, lattice, "klein_liouville", certs,
                         data={"X": X, "Y": Y, "eps": eps, "c": c, "d": d,
                               "involution": "(x, y) -> (x + c, -y)"})
    if not all(cc.passed for cc in certs):
        return _finalize(system)
    metric, integral = make_liouville(X, Y, eps, (0.0, abs(c)), (0.0, abs(d)))
    metric = metric.with_lattice(lattice)
    system.metric, system.integral = metric, integral
    rng = np.random.default_rng(seed)
    certs.append(_cert("lattice_invariance", _lattice_invariance(metric, integral, lattice, rng),
                       PERIODIC_TOL))
    # gluing map and its (constant) Jacobian
    glue = lambda u, v: (u + c, -v)  # noqa: E731
    jac = lambda u, v: ((1.0, 0.0), (0.0, -1.0))  # noqa: E731
    gm, gF = pullback_metric(metric, glue, jac), pullback_integral(integral, glue, jac)
    px, py = lattice.sample_points(100, rng)
    res = 0.0
    for f0, f1 in ((metric.g11, gm.g11), (metric.g12, gm.g12), (metric.g22, gm.g22),
                   (integral.a, gF.a), (integral.b, gF.b), (integral.c, gF.c)):
        res = max(res, float(np.max(np.abs(f1(px, py) - f0(px, py)))))
    certs.append(_cert("gluing_invariance", res, PERIODIC_TOL))
    x, y = lattice.grid(n)
    certs.append(_cert("bracket", poisson_bracket_residual(metric, integral, (x, y)), BRACKET_TOL))
    system.null_chart = _liouville_null_chart(metric, integral, lattice, eps)
    if isinstance(Y, ScalarPeriodic1D) and Y.is_constant():
        system.data["note"] = ("Y constant: the integral is a combination of H and the square "
                               "of the linear integral p_x")
    return _finalize(system)


def make_linear_integral_torus(K: ScalarPeriodic1D, L: ScalarPeriodic1D, M: ScalarPeriodic1D,
                               lattice: Lattice = None, n=CERT_GRID):
    """``g = K(y) dx^2 + 2 L(y) dxdy + M(y) dy^2`` with the linear integral ``p_x``."""
    lattice = lattice or Lattice.unit()
    ys = np.linspace(0.0, 1.0, 4 * n + 1) * max(abs(lattice.xi[1]) + abs(lattice.nu[1]), 1.0)
    det = K(ys) * M(ys) - L(ys) ** 2
    if np.max(det) >= 0:
        raise SignatureError(f"K M - L^2 >= 0 somewhere (max {np.max(det):.3e}); "
                             "the metric must be Lorentzian")
    metric = MetricField(K.of_y(), L.of_y(), M.of_y(), LORENTZIAN, lattice)
    lin = LinearIntegral.constant(1.0, 0.0, "p_x")
    integral = QuadraticIntegral.constant(1.0, 0.0, 0.0, "p_x^2")
    per = max(_periodicity_residual(fn, s) for fn in (K, L, M) for s in (lattice.xi[1], lattice.nu[1]))
    x, y = lattice.grid(n)
    certs = [
        _cert("periodicity_b", per, PERIODIC_TOL),
        _cert("signature", float(np.max(det)), 0.0, "max of K M - L^2"),
        _cert("killing", float(np.max(np.abs(killing_residual(metric, lin.vector_field, (x, y))))),
              1e-12, "d/dx"),
        _cert("bracket", poisson_bracket_residual(metric, integral, (x, y)), BRACKET_TOL),
    ]
    system = TorusSystem(metric, integral, lattice, "linear_integral_torus", certs,
                         killing=lin.vector_field, linear_integral=lin,
                         data={"K": K, "L": L, "M": M})
    if L.is_constant(0.0) and L.constant_term == 0.0 and K.is_constant() and M.is_constant():
        system.extra_integrals.append(QuadraticIntegral.constant(0.0, 0.0, 1.0, "p_y^2"))
    return _finalize(system)


# --------------------------------------------------------------------------
# foliation metrics


@dataclass(frozen=True)
class FoliationAngle:
    """Leaf-direction angle ``theta(y)``; must not depend on x."""

    theta: ScalarField2D
    name: str = "theta"
    params: dict = field(default_factory=dict)

    def x_invariance_residual(self, rng, n=200):
        y = rng.random(n)
        x = rng.random(n)
        s = rng.normal(size=n) * 3.0
        return float(np.max(np.abs(self.theta(x + s, y) - self.theta(x, y))))

    def periodicity_residual(self, rng, n=200):
        """Change of ``(cos 2 theta, sin 2 theta)`` under ``y -> y + 1``;
        the metric only sees theta modulo pi."""
        x, y = rng.random(n), rng.random(n)
        t0, t1 = self.theta(x, y), self.theta(x, y + 1.0)
        return float(max(np.max(np.abs(np.cos(2 * t1) - np.cos(2 * t0))),
                         np.max(np.abs(np.sin(2 * t1) - np.sin(2 * t0)))))


def _fractional(y):
    # y - floor(y), jet-aware (the floor has zero derivative)
    v = y.v if jm.is_jet(y) else np.asarray(y)
    return y - np.floor(v)


def jordan_profile():
    return FoliationAngle(ScalarField2D(lambda x, y: 0.0 * x + 0.0 * y), "jordan")


def liouville_profile(center=np.pi / 4, amplitude=0.2):
    """theta strictly inside (0, pi/2): leaves transverse to both axes."""
    def th(x, y):
        return center + amplitude * jm.sin(2 * np.pi * y) + 0.0 * x
    return FoliationAngle(ScalarField2D(th), "liouville",
                          {"center": center, "amplitude": amplitude})


def mixed_profile(amplitude=np.pi / 4, width=0.05):
    """theta > 0 on the annulus ``frac(y) < 1/2`` and theta = 0 on the rest.

    ``theta = A s(t/w) s((1/2 - t)/w)`` with ``t = frac(y)`` and ``s`` the
    smooth step; every derivative vanishes where theta does.
    """
    def th(x, y):
        t = _fractional(y)
        return amplitude * smooth_step(t * (1.0 / width)) * smooth_step((0.5 - t) * (1.0 / width)) + 0.0 * x
    return FoliationAngle(ScalarField2D(th), "mixed", {"amplitude": amplitude, "width": width})


def reeb_profile():
    """theta turns from 0 to pi across ``frac(y) in (0, 1/2)`` and stays at
    pi on the rest; modulo pi this is smooth and periodic."""
    def th(x, y):
        t = _fractional(y)
        return np.pi * smooth_step(t * 2.0) + 0.0 * x
    return FoliationAngle(ScalarField2D(th), "reeb", {})


PROFILES = {"jordan": jordan_profile, "liouville": liouville_profile,
            "mixed": mixed_profile, "reeb": reeb_profile}


def foliation_frame(theta: FoliationAngle, x, y):
    """Leaf direction ``U1`` and its partner ``U2`` at the points."""
    t = theta.theta(x, y)
    return (np.stack([np.cos(t), np.sin(t)], -1), np.stack([-np.sin(t), np.cos(t)], -1))


def make_foliation_metric(theta: FoliationAngle, seed=0, n=CERT_GRID, tag=None):
    """Metric in which ``U1 = (cos t, sin t)`` and ``U2 = (-sin t, cos t)``
    are null with ``g(U1, U2) = 1``; ``d/dx`` is Killing and ``p_x^2`` is
    the attached integral.

    In coordinates ``g = [[-sin 2t, cos 2t], [cos 2t, sin 2t]]``.
    """
    th = theta.theta
    g11 = th.map(lambda t: -jm.sin(t * 2.0))
    g12 = th.map(lambda t: jm.cos(t * 2.0))
    g22 = th.map(lambda t: jm.sin(t * 2.0))
    lattice = Lattice.unit()
    metric = MetricField(g11, g12, g22, LORENTZIAN, lattice)
    lin = LinearIntegral.constant(1.0, 0.0, "p_x")
    integral = QuadraticIntegral.constant(1.0, 0.0, 0.0, "p_x^2")
    rng = np.random.default_rng(seed)
    x, y = lattice.grid(n)
    U1, U2 = foliation_frame(theta, x, y)
    G = np.stack([np.stack([g11(x, y), g12(x, y)], -1), np.stack([g12(x, y), g22(x, y)], -1)], -2)
    gUU = np.abs(np.einsum("...i,...ij,...j->...", U1, G, U1))
    g12U = np.abs(np.einsum("...i,...ij,...j->...", U1, G, U2) - 1.0)
    certs = [
        _cert("x_invariance", theta.x_invariance_residual(rng), 1e-14),
        _cert("periodicity_y", theta.periodicity_residual(rng), PERIODIC_TOL),
        _cert("light_like_leaves", float(np.max(gUU)), 1e-12, "g(U1, U1)"),
        _cert("frame_normalisation", float(np.max(g12U)), 1e-12, "g(U1, U2) - 1"),
        _cert("killing", float(np.max(np.abs(killing_residual(metric, lin.vector_field, (x, y))))),
              1e-12, "d/dx"),
        _cert("bracket", poisson_bracket_residual(metric, integral, (x, y)), BRACKET_TOL),
    ]
    tag = tag or f"{theta.name}_foliation"
    system = TorusSystem(metric, integral, lattice, tag, certs, killing=lin.vector_field,
                         linear_integral=lin, data={"theta": theta})
    if theta.name == "jordan":
        system.null_chart = NullChart(g12 * 2.0, integral, ((0.0, 1.0), (0.0, 1.0)),
                                      lambda x, y: (x, y))
    return _finalize(system)


def make_flat_torus(lattice: Lattice = None, n=CERT_GRID, seed=0):
    """``g = dxdy`` on ``R^2 / lattice`` with integrals ``H, p_x^2, p_y^2``."""
    lattice = lattice or Lattice.unit()
    metric = MetricField.null(1.0, lattice)
    H = hamiltonian_integral(metric)
    px2 = QuadraticIntegral.constant(1.0, 0.0, 0.0, "p_x^2")
    py2 = QuadraticIntegral.constant(0.0, 0.0, 1.0, "p_y^2")
    rng = np.random.default_rng(seed)
    x, y = lattice.sample_points(25, rng)
    gx, gy = lattice.grid(n)
    curv = float(np.max(np.abs(gauss_curvature_at(metric, (x, y)))))
    certs = [
        _cert("curvature_zero", curv, 1e-10),
        _cert("bracket", max(poisson_bracket_residual(metric, F, (gx, gy)) for F in (px2, py2)),
              BRACKET_TOL),
    ]
    corners = lattice.matrix @ np.array([[0, 1, 0, 1], [0, 0, 1, 1]], float)
    dom = ((float(corners[0].min()), float(corners[0].max())),
           (float(corners[1].min()), float(corners[1].max())))
    system = TorusSystem(metric, px2, lattice, "flat_torus", certs,
                         killing=VectorField2D.constant(1.0, 0.0),
                         linear_integral=LinearIntegral.constant(1.0, 0.0, "p_x"),
                         extra_integrals=[H, px2, py2],
                         null_chart=NullChart(ScalarField2D.constant(1.0), px2, dom,
                                              lambda x, y: (x, y)))
    return _finalize(system)
