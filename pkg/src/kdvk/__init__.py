"""Pseudospectral simulator and estimate checks for the damped KdV-Kawahara equation

    u_t + alpha u_5x + beta u_3x + mu (u^2)_x + lambda (u^3)_x + a(x) u = 0

on a periodic interval.
"""
__version__ = "0.1.0"

from .spectral import (
    EquationParams,
    Field,
    GridSpec,
    dealias_product,
    dispersion_symbol,
    l2_norm,
    make_grid,
    spatial_derivative,
    transform_forward,
    transform_inverse,
)
from .gevrey import (
    AssumptionError,
    DampingProfile,
    GevreyOverflowError,
    GevreyWeight,
    RadiusFit,
    RadiusFitError,
    a_sigma_norm,
    apply_lambda_sigma,
    check_assumptions,
    constant_damping,
    cosine_bump_damping,
    estimate_radius,
    gevrey_norm,
    sine_damping,
)
from .evolution import BlowUpError, CFLError, IntegratorConfig, State, Trajectory, evolve, linear_propagator, step
from .bourgain import (
    BourgainParams,
    PicardReport,
    SpaceTimeField,
    duhamel_integral,
    make_cutoff,
    picard_iterate,
    xsb_norm,
)
from .monitors import (
    DecayVerdict,
    commutators,
    gevrey_decay_verdict,
    l2_decay_check,
    l2_identity_residual,
    radius_over_time,
    sigma_scaling_probe,
)
from .probe import (
    HypothesisError,
    ProbeConfig,
    ProbeReport,
    probe_bilinear,
    probe_damping_product,
    probe_exponential_triangle,
    probe_lipschitz_data_map,
    probe_trilinear,
    probe_weight_inequality,
)
from .config import ConfigError, RunConfig, load

__all__ = [
    "EquationParams", "Field", "GridSpec", "dealias_product", "dispersion_symbol", "l2_norm", "make_grid",
    "spatial_derivative", "transform_forward", "transform_inverse",
    "AssumptionError", "DampingProfile", "GevreyOverflowError", "GevreyWeight", "RadiusFit", "RadiusFitError",
    "a_sigma_norm", "apply_lambda_sigma", "check_assumptions", "constant_damping", "cosine_bump_damping",
    "estimate_radius", "gevrey_norm", "sine_damping",
    "BlowUpError", "CFLError", "IntegratorConfig", "State", "Trajectory", "evolve", "linear_propagator", "step",
    "BourgainParams", "PicardReport", "SpaceTimeField", "duhamel_integral", "make_cutoff", "picard_iterate",
    "xsb_norm",
    "DecayVerdict", "commutators", "gevrey_decay_verdict", "l2_decay_check", "l2_identity_residual",
    "radius_over_time", "sigma_scaling_probe",
    "HypothesisError", "ProbeConfig", "ProbeReport", "probe_bilinear", "probe_damping_product",
    "probe_exponential_triangle", "probe_lipschitz_data_map", "probe_trilinear", "probe_weight_inequality",
    "ConfigError", "RunConfig", "load",
]
