"""Topological pressure of trapped sets with normally hyperbolic structure.

Numerical estimators for topological pressure, Lyapunov exponents and
logarithmic unstable Jacobians of the Kerr(-de Sitter) null geodesic flow
and of analytic calibration fixtures.
"""

from .spacetime import (
    SpacetimeParams,
    PhasePoint,
    HorizonRoots,
    ConservedSet,
    ChartError,
    ParameterError,
)

__version__ = "0.1.0"
