"""unicomp: composite parameterization, Haar measure and integration for U(d) and SU(d)."""

from .decompose import GivensSolution, ResidualTooLarge, decompose, decompose_array, givens_params
from .exact import PiPower
from .groups import (
    ComplexMatrix,
    Factor,
    FrameMask,
    Group,
    InputNotSpecial,
    InputNotUnitary,
    ParamMatrix,
    ParameterRangeWarning,
    apply_factor,
    build_array,
    build_unitary,
    factor_sequence,
    frame_mask,
    generator,
)
from .haar import (
    HaarDensity,
    HaarStream,
    JacobianCheck,
    JacobianConstancy,
    ReducedMeasure,
    box_volume,
    density,
    jacobian_check,
    jacobian_constancy,
    marginal_weight,
    normalization,
    normalization_mc,
    normalization_quadrature,
    sample,
    sample_matrices,
    sample_params,
)
from .integrate import (
    CHUNK_SIZE,
    DensityMatrix,
    DesignReport,
    IntegrandError,
    InvalidDensityMatrix,
    McEstimate,
    MomentResult,
    TwirlResult,
    UnsupportedMoment,
    avg_concurrence,
    design_check,
    maximally_entangled,
    maximally_mixed,
    mc_integrate,
    mc_integrate_params,
    moment_abs_entry,
    moment_i22,
    swap_operator,
    trig_monomial,
    twirl,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Group",
    "ParamMatrix",
    "ComplexMatrix",
    "FrameMask",
    "Factor",
    "ParameterRangeWarning",
    "InputNotUnitary",
    "InputNotSpecial",
    "generator",
    "apply_factor",
    "factor_sequence",
    "build_unitary",
    "build_array",
    "frame_mask",
    "GivensSolution",
    "ResidualTooLarge",
    "givens_params",
    "decompose",
    "decompose_array",
    "PiPower",
    "HaarStream",
    "HaarDensity",
    "ReducedMeasure",
    "JacobianCheck",
    "JacobianConstancy",
    "normalization",
    "box_volume",
    "density",
    "sample",
    "sample_params",
    "sample_matrices",
    "marginal_weight",
    "jacobian_check",
    "jacobian_constancy",
    "normalization_quadrature",
    "normalization_mc",
    "CHUNK_SIZE",
    "McEstimate",
    "MomentResult",
    "DensityMatrix",
    "DesignReport",
    "TwirlResult",
    "UnsupportedMoment",
    "IntegrandError",
    "InvalidDensityMatrix",
    "mc_integrate",
    "mc_integrate_params",
    "moment_abs_entry",
    "moment_i22",
    "trig_monomial",
    "design_check",
    "twirl",
    "avg_concurrence",
    "swap_operator",
    "maximally_entangled",
    "maximally_mixed",
]
