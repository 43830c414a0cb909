"""Point vortices on a sphere with a conformal metric ``exp(2 rho) g0``."""

__version__ = "0.1.0"

from .sphere import Configuration, SpherePoint, VorticityVector, random_configuration
from .spectral import ConformalFactor, laplace_spectrum, random_factor
from .hamiltonian import CollisionError, MetricContext, energy, energy_round, energy_value, grad, hessian
from .dynamics import IntegratorSettings, Method, Trajectory, integrate, vector_field
from .equilibria import classify, cluster_monitor, cluster_vorticity_sums, find_fixed_points
from .invariants import check_P3, commensurability, is_thin, kappa, minimal_action
from .bands import c1_c2, inner_min
from .orbits import is_choreography, perverse_test, poincare_return, refine_periodic
from .contact import deformed_contact_check, lie_derivative_check, liouville_field, meridian_representative

__all__ = [
    "CollisionError",
    "ConformalFactor",
    "Configuration",
    "IntegratorSettings",
    "MetricContext",
    "Method",
    "SpherePoint",
    "Trajectory",
    "VorticityVector",
    "c1_c2",
    "check_P3",
    "classify",
    "cluster_monitor",
    "cluster_vorticity_sums",
    "commensurability",
    "deformed_contact_check",
    "energy",
    "energy_round",
    "energy_value",
    "find_fixed_points",
    "grad",
    "hessian",
    "inner_min",
    "integrate",
    "is_choreography",
    "is_thin",
    "kappa",
    "laplace_spectrum",
    "lie_derivative_check",
    "liouville_field",
    "meridian_representative",
    "minimal_action",
    "perverse_test",
    "poincare_return",
    "random_configuration",
    "random_factor",
    "refine_periodic",
    "vector_field",
]
