"""Interpolation-based QR decomposition of Laurent polynomial matrices
sampled on the unit circle, for MIMO-OFDM preprocessing.

Three pipelines compute per-tone QR factors of a channel transfer matrix:
decompose everywhere (algorithm_I), decompose at a base tone set and
interpolate scaled factors (algorithm_II), or do that column by column over
nested base sets (algorithm_III). Each has a regularized variant. The cost
module prices all of them in exact rational full-multiplication counts, and
the mimo subpackage measures what the factors do to detection error rates.
"""

from .errors import (
    ConditioningError,
    DegenerateGridError,
    InfeasibleError,
    MissingDataError,
    ParameterError,
    PolyqrError,
    UnsupportedRegimeError,
)
from .lpmat import (
    LaurentPolyMatrix,
    eval_many,
    fit_from_samples,
    from_coeffs,
    tone_point,
)
from .qr import (
    QRFactors,
    augmented_qr,
    givens_qr,
    gs_qr,
    mmse_qr,
    regularized_qr,
)
from .lpmap import MappedFactors, map_forward, map_inverse
from .interp import (
    EquidistantGrid,
    InterpolationDesign,
    fir_design,
    inexact_optimize_v1,
    upsample_fft,
)
from .instrument import MultCounter
from .algos import (
    Engine,
    PerToneFactors,
    ToneSets,
    algorithm_I,
    algorithm_I_mmse,
    algorithm_II,
    algorithm_II_mmse,
    algorithm_III,
    algorithm_III_mmse,
    build_tone_sets,
)
from .cost import (
    CostParams,
    CostReport,
    break_even,
    fft_weight,
    fir_weight,
    qr_cost,
    sweep,
    table2_rows,
    total_cost,
)

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "CostParams",
    "CostReport",
    "DegenerateGridError",
    "Engine",
    "EquidistantGrid",
    "InfeasibleError",
    "InterpolationDesign",
    "LaurentPolyMatrix",
    "eval_many",
    "from_coeffs",
    "MappedFactors",
    "MissingDataError",
    "MultCounter",
    "ParameterError",
    "PerToneFactors",
    "PolyqrError",
    "QRFactors",
    "ToneSets",
    "UnsupportedRegimeError",
    "algorithm_I",
    "algorithm_I_mmse",
    "algorithm_II",
    "algorithm_II_mmse",
    "algorithm_III",
    "algorithm_III_mmse",
    "augmented_qr",
    "break_even",
    "build_tone_sets",
    "fft_weight",
    "fir_design",
    "fir_weight",
    "fit_from_samples",
    "givens_qr",
    "gs_qr",
    "inexact_optimize_v1",
    "map_forward",
    "map_inverse",
    "mmse_qr",
    "qr_cost",
    "regularized_qr",
    "sweep",
    "table2_rows",
    "tone_point",
    "total_cost",
    "upsample_fft",
    "__version__",
]
