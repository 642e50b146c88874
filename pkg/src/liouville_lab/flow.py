"""Geodesic flow as the Hamiltonian flow of ``H = 1/2 g^{ij} p_i p_j``.

The integrator is Gauss-Legendre collocation (implicit midpoint and its
higher-stage relatives; symmetric and symplectic) solved by fixed-point
iteration.  Many initial conditions are advanced together as one
``(n, 4)`` array.
"""
import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (DegenerateMetricError, IntegrationError, StationaryPointError,
                     StepUnderflowError)
from .geometry import DET_TOL, MetricField, christoffel_at

__all__ = [
    "PhaseState", "StepControl", "Trajectory", "hamiltonian", "hamiltonian_rhs",
    "integrate", "integrate_batch", "conservation_report", "velocities",
    "accelerations", "unparam_geodesic_residual", "write_trajectory_csv",
    "time_reversal_error", "fmt17",
]


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    px: float
    py: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.px, self.py])):
            raise ValueError("phase state components must be finite")

    def as_array(self):
        return np.array([self.x, self.y, self.px, self.py], dtype=float)

    @classmethod
    def from_array(cls, z):
        return cls(*(float(v) for v in z))


@dataclass(frozen=True)
class StepControl:
    """``h`` is the initial step; it is halved until the energy drift is at
    most ``tol`` or ``h`` would drop below ``h_min``.

    ``order`` 2 is implicit midpoint; 4 and 6 are the two- and three-stage
    Gauss-Legendre collocation methods, of which midpoint is the one-stage
    member.  All are symmetric and symplectic.  ``error_estimate`` reruns
    the accepted step size at ``h/2`` once and reports the Richardson
    estimate.
    """

    h: float = 1e-2
    tol: float = 1e-8
    h_min: float = 1e-6
    order: int = 6
    max_iter: int = 25
    iter_tol: float = 1e-14
    error_estimate: bool = True
    store_every: int = 1

    def __post_init__(self):
        if self.order not in (2, 4, 6):
            raise ValueError("order must be 2, 4 or 6")
        if not (0 < self.h_min <= self.h):
            raise ValueError("need 0 < h_min <= h")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, 4), universal-cover positions
    h_drift: float
    step: float
    integral_drifts: dict = field(default_factory=dict)
    error_estimate: Optional[float] = None
    lattice: object = None

    @property
    def final(self):
        return PhaseState.from_array(self.states[-1])

    def phase_states(self):
        return [PhaseState.from_array(z) for z in self.states]

    def reduced_positions(self):
        """Positions reduced into the lattice cell (for output only)."""
        if self.lattice is None:
            return self.states[:, 0].copy(), self.states[:, 1].copy()
        return self.lattice.reduce(self.states[:, 0], self.states[:, 1])


def _inverse_jets(metric, x, y):
    g11, g12, g22 = metric.jets(x, y, order=1)
    det = g11 * g22 - g12 * g12
    if np.any(~np.isfinite(det.v)) or np.any(np.abs(det.v) < DET_TOL):
        raise DegenerateMetricError("metric degenerates along the trajectory")
    return g22 / det, -g12 / det, g11 / det


def hamiltonian(metric: MetricField, s):
    """``1/2 g^{ij} p_i p_j`` for a PhaseState or an array ``(..., 4)``."""
    z = s.as_array() if isinstance(s, PhaseState) else np.asarray(s, float)
    x, y, px, py = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    g11, g12, g22 = metric.g11(x, y), metric.g12(x, y), metric.g22(x, y)
    det = g11 * g22 - g12 * g12
    if np.any(np.abs(det) < DET_TOL):
        raise DegenerateMetricError("metric is degenerate at the phase point")
    out = 0.5 * (g22 * px * px - 2 * g12 * px * py + g11 * py * py) / det
    return float(out) if np.ndim(out) == 0 else out


def hamiltonian_rhs(metric, z):
    """``(dH/dp, -dH/dx)`` for states ``z`` of shape ``(n, 4)``."""
    x, y, px, py = z[:, 0], z[:, 1], z[:, 2], z[:, 3]
    i11, i12, i22 = _inverse_jets(metric, x, y)
    out = np.empty_like(z)
    out[:, 0] = i11.v * px + i12.v * py
    out[:, 1] = i12.v * px + i22.v * py
    out[:, 2] = -0.5 * (i11.x * px * px + 2 * i12.x * px * py + i22.x * py * py)
    out[:, 3] = -0.5 * (i11.y * px * px + 2 * i12.y * px * py + i22.y * py * py)
    return out


class _IterationFailure(Exception):
    pass


def _gauss_tableau(stages):
    # Gauss-Legendre collocation; one stage is the implicit midpoint rule
    if stages == 1:
        return np.array([[0.5]]), np.array([1.0])
    if stages == 2:
        r = np.sqrt(3.0) / 6.0
        return np.array([[0.25, 0.25 - r], [0.25 + r, 0.25]]), np.array([0.5, 0.5])
    r = np.sqrt(15.0)
    A = np.array([[5 / 36, 2 / 9 - r / 15, 5 / 36 - r / 30],
                  [5 / 36 + r / 24, 2 / 9, 5 / 36 - r / 24],
                  [5 / 36 + r / 30, 2 / 9 + r / 15, 5 / 36]])
    return A, np.array([5 / 18, 4 / 9, 5 / 18])


_TABLEAUX = {2: _gauss_tableau(1), 4: _gauss_tableau(2), 6: _gauss_tableau(3)}


def _step(metric, z, h, control):
    """One collocation step for all rows of ``z`` (shape ``(n, 4)``)."""
    A, b = _TABLEAUX[control.order]
    s, n = b.size, z.shape[0]
    K = np.broadcast_to(hamiltonian_rhs(metric, z), (s, n, 4)).copy()
    scale = 1.0 + np.abs(z)
    diff = np.inf
    for _ in range(control.max_iter):
        Z = z + h * np.einsum("ij,jnk->ink", A, K)
        Knew = hamiltonian_rhs(metric, Z.reshape(s * n, 4)).reshape(s, n, 4)
        diff = np.max(np.abs(Knew - K)) * h / np.max(scale)
        K = Knew
        if not np.isfinite(diff):
            raise _IterationFailure("non-finite iterate")
        if diff <= control.iter_tol:
            break
    else:
        # accept stagnation at round-off level
        if diff > 1e3 * control.iter_tol:
            raise _IterationFailure(f"fixed-point iteration stalled at {diff:.2e}")
    return z + h * np.einsum("j,jnk->nk", b, K)


def _run_fixed(metric, z0, T, h, control):
    """Advance all rows of ``z0`` with fixed step; returns times, states and
    per-row failure time (``inf`` if none)."""
    n_steps = max(1, int(np.ceil(abs(T) / h - 1e-9)))
    h_eff = T / n_steps
    every = max(1, control.store_every)
    times = [0.0]
    out = [z0.copy()]
    z = z0.copy()
    fail_t = np.full(z0.shape[0], np.inf)
    for k in range(1, n_steps + 1):
        act = ~np.isfinite(fail_t)
        if not act.any():
            break
        try:
            z[act] = _step(metric, z[act], h_eff, control)
        except (_IterationFailure, DegenerateMetricError, FloatingPointError):
            # isolate the failing rows; keep the others going
            for r in np.flatnonzero(act):
                try:
                    z[r] = _step(metric, z[r:r + 1], h_eff, control)[0]
                except (_IterationFailure, DegenerateMetricError, FloatingPointError):
                    fail_t[r] = (k - 1) * h_eff
        if k % every == 0 or k == n_steps:
            times.append(k * h_eff)
            out.append(z.copy())
    while len(times) < (n_steps // every) + (1 if n_steps % every else 0) + 1:
        # rows all failed early: pad so shapes stay consistent
        times.append(np.nan)
        out.append(z.copy())
    return np.array(times), np.stack(out, 1), fail_t, h_eff


def integrate_batch(metric: MetricField, s0, T, control: StepControl = StepControl(),
                    integrals=None):
    """Integrate several initial conditions; returns a list of
    :class:`Trajectory` (or :class:`StepUnderflowError` instances for rows
    that could not meet the tolerance).

    ``integrals`` maps names to callables ``F(x, y, px, py)`` whose drifts
    are recorded on each trajectory.
    """
    z0 = np.atleast_2d(np.array([s.as_array() if isinstance(s, PhaseState) else s
                                 for s in (s0 if not isinstance(s0, np.ndarray) else list(s0))],
                                dtype=float))
    H0 = hamiltonian(metric, z0)
    results = [None] * z0.shape[0]
    pending = np.arange(z0.shape[0])
    h = control.h
    last_fail = {}
    while pending.size:
        times, states, fail_t, h_eff = _run_fixed(metric, z0[pending], T, h, control)
        still = []
        for j, r in enumerate(pending):
            st = states[j]
            if np.isfinite(fail_t[j]):
                last_fail[r] = fail_t[j]
                still.append(r)
                continue
            drift = float(np.max(np.abs(hamiltonian(metric, st) - H0[r])))
            if drift <= control.tol:
                results[r] = Trajectory(times, st, drift, h_eff, lattice=metric.lattice)
            else:
                last_fail[r] = float(times[-1])
                still.append(r)
        pending = np.array(still, dtype=int)
        if pending.size == 0:
            break
        if h / 2 < control.h_min:
            for r in pending:
                results[r] = StepUnderflowError(
                    f"trajectory {r}: tolerance {control.tol:g} not met with h >= {control.h_min:g}",
                    t_reached=last_fail.get(r), h=h)
            break
        h = h / 2
    if control.error_estimate:
        _richardson(metric, z0, T, control, results)
    if integrals:
        for tr in results:
            if isinstance(tr, Trajectory):
                for name, F in integrals.items():
                    tr.integral_drifts[name] = conservation_report(tr, F)
    return results


def _richardson(metric, z0, T, control, results):
    groups = {}
    for r, tr in enumerate(results):
        if isinstance(tr, Trajectory):
            groups.setdefault(tr.step, []).append(r)
    p = control.order
    for h, rows in groups.items():
        try:
            _, st, fail_t, _ = _run_fixed(metric, z0[rows], T, h / 2, control)
        except IntegrationError:
            continue
        for j, r in enumerate(rows):
            if np.isfinite(fail_t[j]):
                continue
            diff = np.max(np.abs(st[j, -1] - results[r].states[-1]))
            results[r].error_estimate = float(diff / (2 ** p - 1))


def integrate(metric: MetricField, s0, T, control: StepControl = StepControl(), integrals=None):
    """Single trajectory; raises :class:`StepUnderflowError` on failure."""
    tr = integrate_batch(metric, [s0], T, control, integrals)[0]
    if isinstance(tr, Exception):
        raise tr
    return tr


def conservation_report(traj: Trajectory, F):
    """``max_k |F(state_k) - F(state_0)|`` for any callable ``F(x, y, px, py)``."""
    z = traj.states
    vals = np.asarray(F(z[:, 0], z[:, 1], z[:, 2], z[:, 3]), float)
    return float(np.max(np.abs(vals - vals[0])))


def time_reversal_error(metric, s0, T, control: StepControl = StepControl()):
    """Integrate to ``T``, flip momenta, integrate again; distance to ``s0``."""
    z0 = s0.as_array() if isinstance(s0, PhaseState) else np.asarray(s0, float)
    fwd = integrate(metric, z0, T, control)
    z1 = fwd.states[-1] * np.array([1.0, 1.0, -1.0, -1.0])
    back = integrate(metric, z1, T, StepControl(**{**control.__dict__, "h": fwd.step,
                                                    "error_estimate": False}))
    z2 = back.states[-1] * np.array([1.0, 1.0, -1.0, -1.0])
    return float(np.max(np.abs(z2 - z0)))


def velocities(metric, states):
    """``g^{-1} p`` along states ``(n, 4)``."""
    z = np.asarray(states, float)
    return hamiltonian_rhs(metric, z)[:, :2]


def accelerations(metric, states):
    """Exact second derivative of position along the flow:
    ``d/dt (g^{ij} p_j)`` from Hamilton's equations."""
    z = np.asarray(states, float)
    x, y, px, py = z[:, 0], z[:, 1], z[:, 2], z[:, 3]
    i11, i12, i22 = _inverse_jets(metric, x, y)
    vx = i11.v * px + i12.v * py
    vy = i12.v * px + i22.v * py
    rhs = hamiltonian_rhs(metric, z)
    dpx, dpy = rhs[:, 2], rhs[:, 3]
    ax = (i11.x * vx + i11.y * vy) * px + (i12.x * vx + i12.y * vy) * py + i11.v * dpx + i12.v * dpy
    ay = (i12.x * vx + i12.y * vy) * px + (i22.x * vx + i22.y * vy) * py + i12.v * dpx + i22.v * dpy
    return np.stack([ax, ay], -1)


def unparam_geodesic_residual(metric, positions, velocities, accelerations=None, times=None):
    """Max of ``|det[a + Gamma(v, v), v]| / |v|^3`` over the samples.

    Zero exactly when the acceleration is parallel to the velocity modulo
    the metric's connection, i.e. the curve is a geodesic up to
    reparametrisation.  Without ``accelerations`` they are taken from
    second-order finite differences of ``velocities`` in ``times``.
    """
    P = np.asarray(positions, float)
    V = np.asarray(velocities, float)
    speed = np.linalg.norm(V, axis=-1)
    if np.any(speed < 1e-10):
        raise StationaryPointError("curve has (numerically) zero velocity")
    if accelerations is None:
        if times is None:
            raise ValueError("need accelerations or sample times")
        A = np.gradient(V, np.asarray(times, float), axis=0, edge_order=2)
    else:
        A = np.asarray(accelerations, float)
    G = christoffel_at(metric, (P[:, 0], P[:, 1]))
    acc = A + np.einsum("nijk,nj,nk->ni", G, V, V)
    det = acc[:, 0] * V[:, 1] - acc[:, 1] * V[:, 0]
    return float(np.max(np.abs(det) / speed ** 3))


def fmt17(v):
    return format(float(v), ".17g")


def write_trajectory_csv(path, traj: Trajectory, integrals=None, metric=None):
    """Columns ``t, x, y, px, py[, H][, named integrals]``; 17 significant digits."""
    integrals = integrals or {}
    z = traj.states
    cols = {"t": traj.times, "x": z[:, 0], "y": z[:, 1], "px": z[:, 2], "py": z[:, 3]}
    if metric is not None:
        cols["H"] = hamiltonian(metric, z)
    for name, F in integrals.items():
        cols[name] = np.asarray(F(z[:, 0], z[:, 1], z[:, 2], z[:, 3]), float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([fmt17(v) for v in row])
