"""Spectral simulation and analytic bounds for noisy reaction-diffusion
systems on the unit torus: top Lyapunov exponent estimates, concentration
weights, and synchronization-by-noise experiments."""

__version__ = "0.1.0"

from .field import Field, GridSpec, dft, h1_seminorm, heat_semigroup, idft, l2_norm, sup_norm
from .integrator import (NoiseStream, SimConfig, Trajectory, multi_simulate,
                         simulate, step, stochastic_convolution)
from .lyapunov import (LyapunovReport, TangentState, ergodic_bound,
                       radial_decay_lower_bound, tangent_step, top_eigenvalue,
                       top_eigenvalue_dense, top_lyapunov)
from .potentials import bulk_potential, builtin_catalog, make_potential
from .theory import (GaussianMoments, bound_report, concentration_weights,
                     degenerate_bound_constants, degenerate_rate_bound,
                     det_weight_point, det_weight_sphere, first_order_rate,
                     laplace_first_order, nondegenerate_rate_bound,
                     sphere_area, sphere_gaussian_moments)

__all__ = [
    "Field", "GridSpec", "dft", "idft", "l2_norm", "sup_norm", "h1_seminorm",
    "heat_semigroup", "SimConfig", "NoiseStream", "Trajectory", "step",
    "simulate", "stochastic_convolution", "multi_simulate", "TangentState",
    "tangent_step", "top_lyapunov", "ergodic_bound", "top_eigenvalue",
    "top_eigenvalue_dense", "radial_decay_lower_bound", "LyapunovReport",
    "bulk_potential", "builtin_catalog", "make_potential", "GaussianMoments",
    "bound_report", "concentration_weights", "det_weight_point",
    "det_weight_sphere", "degenerate_bound_constants", "degenerate_rate_bound",
    "nondegenerate_rate_bound", "first_order_rate", "laplace_first_order",
    "sphere_area", "sphere_gaussian_moments",
]
