"""Hallucination-map analysis for linear tomographic imaging.

Decomposes reconstructions into measurement and null components of the
imaging operator, isolates prior-induced structures as hallucination maps,
localizes them with a configurable transform, and quantifies them with
region-restricted metrics.  A stylized undersampled-Fourier simulator and
a TV-regularized reconstructor are included so full pipelines can run on
synthetic data.
"""

__version__ = "0.1.0"

from .analysis import RegionSsim, SsimResult, empirical_pdf, region_ssim, rmse, ssim
from .errors import (
    DimensionsError,
    FormatError,
    HalmapError,
    ParameterError,
    SizeError,
    SolverError,
    StabilityError,
)
from .linop import (
    DEFAULT_EPSILON,
    DenseOperator,
    FftMaskOperator,
    ImageGrid,
    MaskSpec,
    OperatorDescriptor,
    SpectralDecomposition,
    apply_adjoint,
    apply_forward,
    compute_svd,
)
from .maps import (
    HallucinationReport,
    RegionStat,
    TransformConfig,
    bias_map,
    compute_report,
    error_map,
    histogram_equalize,
    meas_error_map,
    meas_hallucination_map,
    null_hallucination_map,
    otsu_threshold,
    specific_map,
)
from .recon import (
    PlsTvConfig,
    PlsTvResult,
    SweepResult,
    ingest_external,
    recon_plstv,
    recon_tp,
    sweep_lambda,
)
from .simulate import NoiseConfig, derive_seed, make_uniform_mask, simulate_measurement
from .subspace import StabilityReport, project_meas, project_null, truncated_pinv, verify_stability

__all__ = [
    "DEFAULT_EPSILON",
    "DenseOperator",
    "DimensionsError",
    "FftMaskOperator",
    "FormatError",
    "HallucinationReport",
    "HalmapError",
    "ImageGrid",
    "MaskSpec",
    "NoiseConfig",
    "OperatorDescriptor",
    "ParameterError",
    "PlsTvConfig",
    "PlsTvResult",
    "RegionSsim",
    "RegionStat",
    "SizeError",
    "SolverError",
    "SpectralDecomposition",
    "SsimResult",
    "StabilityError",
    "StabilityReport",
    "SweepResult",
    "TransformConfig",
    "apply_adjoint",
    "apply_forward",
    "bias_map",
    "compute_report",
    "compute_svd",
    "derive_seed",
    "empirical_pdf",
    "error_map",
    "histogram_equalize",
    "ingest_external",
    "make_uniform_mask",
    "meas_error_map",
    "meas_hallucination_map",
    "null_hallucination_map",
    "otsu_threshold",
    "project_meas",
    "project_null",
    "recon_plstv",
    "recon_tp",
    "region_ssim",
    "rmse",
    "simulate_measurement",
    "specific_map",
    "ssim",
    "sweep_lambda",
    "truncated_pinv",
    "verify_stability",
]
