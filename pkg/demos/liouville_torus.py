"""Liouville metric on a torus: build it, check the integral, follow geodesics.

Run: python3 demos/liouville_torus.py
"""
import numpy as np

from liouville_lab.config import build_system, load_config
from liouville_lab.equivalence import random_initial_conditions
from liouville_lab.flow import integrate_batch
from liouville_lab.integrals import classify_grid, poisson_bracket_residual

s = build_system(load_config("global_liouville"))
print("metric (3 + cos 2pi x - sin 2pi y)(dx^2 - dy^2), integral F = (X p_y^2 + Y p_x^2)/(X - Y)")
for c in s.certificates:
    print(f"  certificate {c.name:<22} value {c.value:.3e}  passed {c.passed}")

grid = s.grid(64)
print(f"max |{{H, F}}| on a 64x64 grid: {poisson_bracket_residual(s.metric, s.integral, grid):.2e}")
rep = classify_grid(s.integral, s.metric, grid)
print("type fractions:", {k: round(v, 4) for k, v in rep.fractions.items()})

z0 = random_initial_conditions(s.metric, 5, np.random.default_rng(0), s.random_points)
for k, tr in enumerate(integrate_batch(s.metric, z0, 10.0, integrals={"F": s.integral})):
    print(f"geodesic {k}: H drift {tr.h_drift:.1e}, F drift {tr.integral_drifts['F']:.1e}, "
          f"end point reduced to the torus {np.round(tr.reduced_positions()[0][-1], 4)}, "
          f"{np.round(tr.reduced_positions()[1][-1], 4)}")
