"""Numerical laboratory for S^1-invariant Kahler geometry on the sphere.

Potentials, weak geodesics, the K-energy and its convexity, finite-level
Bergman systems, and the field/perturbation machinery of the uniqueness
arguments, all at desk scale on the unit-mass model class.
"""

__version__ = "0.1.0"

from .errors import (
    CompatibilityError,
    ConfigError,
    ConvexityError,
    DescentError,
    GridMismatchError,
    KahlerLabError,
    NonSubharmonicError,
    QuadratureError,
    ResolutionError,
    SubgeodesicError,
    WindowError,
)
from .potential import (
    GridMeasure,
    RadialPotential,
    SymplecticPotential,
    TwistForm,
    inverse_legendre,
    legendre,
    moment_grid,
    moment_measure,
    ricci_reference,
    s_grid,
    scalar_curvature,
    scalar_curvature_full,
)
from .geodesic import (
    HessianField,
    MetricPath,
    endpoint_velocity,
    hmae_residual,
    mabuchi_distance,
    residual_report,
    speed_profile,
    subgeodesic_make,
    weak_geodesic,
    write_residual_csv,
)
from .functionals import (
    FunctionalReport,
    calabi_energy,
    convexity_scan,
    energy_E,
    energy_ET,
    entropy,
    entropy_legendre_gap,
    mabuchi,
    second_variation_check,
    second_variation_integrand_min,
    strict_convexity_Imu,
    subslope_check,
    twisted_F_alpha,
    twisted_F_mu,
)
from .bergman import (
    BergmanMeasure,
    BergmanSystem,
    assemble,
    bergman_measure,
    decomposition_inequality,
    disc_bergman,
    log_norm_concavity_max,
    mixed_positivity,
    mutate_log_norms,
    psh_variation_check,
    tv_convergence,
)
from .fields import (
    GradientField,
    LinearOperatorOnFunctions,
    energy_EV,
    futaki,
    hamiltonian,
    ibp_identity_check,
    inner_product,
    lichnerowicz,
    measure_moment_density,
    mobius_pullback,
    orbit_minimize,
    orbit_ray,
    perturbation_order_check,
    solve_linearized,
    twisted_csc_solve,
)
from .cli import ExperimentConfig, generate_corpus, glued_profile, run
