"""Coded-aperture ptychography: simulation, AP/DR reconstruction and spectral-gap analysis."""
from .analysis import (
    BoundCertificate,
    SpectralReport,
    apply_B_adjoint,
    certify_rate_bound,
    compute_gamma_dense,
    compute_gamma_power,
    conjugate_inversion,
    fresnel_h_symmetry,
    twin_image,
)
from .estimators import CodedDiffraction, PtychoReconstructor
from .experiments import ExperimentConfig, relative_error, relative_residual
from .field import Grid, odft, odft_adjoint, wrap_embed_add, wrap_extract
from .masks import MaskSpec, make_correlated_mask, make_fresnel_mask, make_iid_mask, make_mask
from .phantom import ObjectSpec, make_rpp, shepp_logan
from .scheme import MeasurementOperator, NoiseSpec, Scheme, build_scheme
from .solvers import (
    SolverConfig,
    SolverTrace,
    ap_fixed_point_test,
    ap_step,
    dr_step,
    project_modulus,
    project_range,
    run,
    sgn,
)

__version__ = "0.1.0"
