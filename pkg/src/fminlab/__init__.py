"""fminlab: numerics for weighted-minimal hypersurfaces.

Computes the pointwise geometry of immersed hypersurfaces in two weighted
ambient models (Gaussian-weighted flat space and a round-sphere cylinder),
verifies the drift-Laplacian identities those geometries satisfy, generates
rotationally symmetric examples by shooting, and computes stability spectra
and indices.
"""

__version__ = "0.1.0"

from .ambient import GaussianSpace, OrthonormalFrame, SphereCylinder, parse_model
from .hypersurface import (
    ImmersionChart,
    evaluate_geometry,
    fminimality_residual,
    make_chart,
)
from .identities import check_identity, check_many, list_identities
from .operators import ScalarField, custom_field, field, lf_apply, weighted_laplacian
from .rotsym import (
    ProfileCurve,
    ShootConfig,
    band_verdict,
    fmin_ode_step,
    integrate_profile,
    lemA_residuals,
    load_profile,
    pinching_band,
    save_profile,
    shoot_closed,
    slice_profile,
    weighted_integral,
    weighted_volume,
)
from .spectral import (
    SpectrumResult,
    lf_index,
    rayleigh_quotient,
    slice_spectrum_closed_form,
    sturm_liouville_spectrum,
)

__all__ = [
    "GaussianSpace", "SphereCylinder", "OrthonormalFrame", "parse_model",
    "ImmersionChart", "evaluate_geometry", "fminimality_residual", "make_chart",
    "check_identity", "check_many", "list_identities",
    "ScalarField", "field", "custom_field", "weighted_laplacian", "lf_apply",
    "ProfileCurve", "ShootConfig", "fmin_ode_step", "integrate_profile",
    "shoot_closed", "slice_profile", "weighted_integral", "weighted_volume",
    "lemA_residuals", "pinching_band", "band_verdict", "save_profile",
    "load_profile",
    "SpectrumResult", "slice_spectrum_closed_form", "sturm_liouville_spectrum",
    "rayleigh_quotient", "lf_index",
]
