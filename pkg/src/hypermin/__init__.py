"""Minimal helicoids and catenoids in hyperbolic 3-space.

Surface charts in the hyperboloid model, conversions to the Poincare ball
and upper half-space, fundamental forms and conjugate immersions, and a
finite-difference Jacobi-operator solver for stability and Morse index.
"""

from .lorentz import (GeometryError, Model, ModelPoint, convert,
                      hyperbolic_distance, minkowski_dot)
from .surfaces import (BallCatenoid, Helicoid, HyperbolicCatenoid,
                       ParabolicCatenoid, SphericalCatenoid, conjugate_pitch,
                       spherical_atilde_from_abar)
from .diffgeo import FundamentalForms, conjugate_forms, fundamental_forms
from .stability import (Domain, JacobiProblem, SpectrumReport, SolverError,
                        conjugacy_crosscheck, critical_neck, critical_pitch,
                        exhaustion, lambda1, morse_index)

__version__ = "0.1.0"
