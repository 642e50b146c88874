"""Geodesically equivalent partners, Killing transfer and superintegrability.

Run: python3 demos/equivalent_partner.py
"""
import numpy as np

from liouville_lab.config import build_system, load_config
from liouville_lab.equivalence import (geodesic_equivalence_check, riemannianize,
                                       superintegrability_rank, transfer_killing)
from liouville_lab.fields import VectorField2D
from liouville_lab.geometry import MetricField, gauss_curvature_at
from liouville_lab.integrals import killing_residual

s = build_system(load_config("global_liouville"))
rp = riemannianize(s)
print(f"X_min = {rp.x_min:.6f}, Y_max = {rp.y_max:.6f}")
print(f"smallest eigenvalue of the Riemannian partner: {rp.min_metric_eigenvalue:.4f}")
res = geodesic_equivalence_check(rp.pair, n_samples=10, T=5.0)
print(f"g-geodesics as unparametrised partner geodesics, worst residual {res:.2e}")

flat, euclid = MetricField.null(1.0), MetricField.constant(1.0, 0.0, 1.0)
K = transfer_killing(flat, euclid, VectorField2D.constant(1.0, 0.0))
p = (np.linspace(0, 1, 5), np.linspace(0, 1, 5))
print("d/dx of dx^2 + dy^2 transferred to dxdy:", np.round(K(*p)[0], 6),
      f"Killing residual {np.abs(killing_residual(flat, K, p)).max():.1e}")

ft = build_system(load_config("flat_torus"))
g = ft.grid(32)
print("flat torus rank:", superintegrability_rank(ft.metric, [ft.hamiltonian] + ft.extra_integrals, g),
      f"max |K| {np.abs(gauss_curvature_at(ft.metric, g)).max():.1e}")
print("Liouville torus rank:", superintegrability_rank(s.metric, [s.hamiltonian, s.integral], s.grid(32)))
