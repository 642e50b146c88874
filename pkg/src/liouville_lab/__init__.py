"""Integrable geodesic flows of pseudo-Riemannian surfaces.

Metric families with quadratic first integrals, their verification,
local type classification, geodesically equivalent partners and a
conservative integrator for the geodesic flow.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .fields import Lattice, ScalarField2D, ScalarPeriodic1D, VectorField2D  # noqa: F401
from .geometry import MetricField, christoffel_at, gauss_curvature_at, null_frame_at  # noqa: F401
from .integrals import LinearIntegral, QuadraticIntegral, TypeLabel  # noqa: F401
