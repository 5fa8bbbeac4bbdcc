"""szegolab: Szego/Bergman kernels and non-isotropic geometry of model domains in C^2."""

__version__ = "0.1.0"

from .domain import (
    Potential,
    TubeProfile,
    UftReport,
    UftThresholds,
    Weight,
    build_potential,
    make_h3_counterexample,
    make_heisenberg,
    make_parabolic_tube,
    make_sharpness_tube,
    make_smoothed_polynomial,
    potential_from_profile,
    verify_uft,
    weight_from_profile,
)
from .geometry import (
    BoundaryPoint,
    MetricContext,
    ball_volume,
    cc_distance,
    lambda_integral,
    lambda_poly,
    max_direction,
    mu_invert,
    mu_star,
    rho_tilde,
    sigma_tau,
    smooth_distance,
    vandermonde_coeffs,
)
from .normalize import (
    NormalizedPotential,
    normalize_potential,
    recenter_boundary,
    twist_T,
    twist_Tkappa,
)
from .quadrature import (
    ConvexLaplaceResult,
    IntegralResult,
    QuadratureConfig,
    convex_laplace,
    integrate_1d,
    integrate_halfline_damped,
    level_set_width,
    minimize_convex,
)
from .szego import (
    EnvelopeReport,
    KernelQuery,
    KernelValue,
    bergman_kernel,
    growth_envelope,
    inner_weight_integral,
    sharpness_scan,
    tube_szego_derivative,
    tube_szego_kernel,
)
