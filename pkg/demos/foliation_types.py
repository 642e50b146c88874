"""Metrics built from a light-like foliation, and where the integral changes type.

The integral p_x^2 is of Jordan type where the leaves bend and of Liouville
type where they are straight lines.

Run: python3 demos/foliation_types.py
"""
from liouville_lab.config import build_system, load_config
from liouville_lab.integrals import classify_grid, is_square_of_linear

for name in ("jordan_foliation", "mixed_foliation", "reeb_foliation"):
    s = build_system(load_config(name))
    rep = classify_grid(s.integral, s.metric, s.grid(128))
    sq = is_square_of_linear(s.integral, s.metric, s.grid(32))
    print(f"{name:<18} JORDAN {rep.jordan_fraction:.4f}  "
          f"LIOUVILLE {rep.fractions['LIOUVILLE']:.4f}  "
          f"COMPLEX {rep.fractions['COMPLEX_LIOUVILLE']:.4f}  "
          f"square of a Killing momentum: {sq.field is not None}")
