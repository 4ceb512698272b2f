"""dynamap: long-time extrapolation of non-Markovian open-system dynamics
from short-time dynamical maps, with time-nonlocal (transfer-tensor) and
time-local (stationary-map) schemes side by side.
"""

from .errors import (
    BranchAmbiguity,
    ConfigError,
    CutoffExceedsData,
    DegenerateRates,
    DimensionMismatch,
    DynamapError,
    MemoryBudgetExceeded,
    NearSingularMap,
    NegativeFrequency,
    NonDiagonalizable,
    NonDiagonalizableCoupling,
    NotTracePreserving,
    QuadratureFailure,
    SingularBasis,
    StationaryMapFlagged,
    TruncationGuard,
    UnknownModel,
)
from .harness import (
    CompareResult,
    CompareRow,
    EmbeddingPropagator,
    LindbladPropagator,
    QuapiPropagator,
    SweepConfig,
    compare_series,
    load_config,
    observable_series,
    preset_config,
    run_compare,
    trace_distance,
)
from .lindblad import CanonicalForm, RateSeries, canonical_decompose, rate_series, reassemble
from .maps import (
    DynamicalMapSeries,
    devectorize,
    expm,
    frobenius_diff,
    from_trajectories,
    invert,
    logm,
    singular_values,
    vectorize,
)
from .models import (
    DrudeLorentzDensity,
    Embedding,
    EmbeddingSpec,
    QDPhononDensity,
    SubOhmicDensity,
    SystemSpec,
    TabulatedDensity,
    bath_correlation,
    build_embedding,
    builtin_model,
    spectral_density_eval,
)
from .numerics import DEFAULT_NUMERICS, NumericsConfig
from .propagators import (
    InfluenceCoefficients,
    embedding_propagate,
    eta_coefficients,
    quapi_propagate,
)
from .timelocal import (
    LocalMapSeries,
    SpectralStability,
    extrapolate_tl,
    local_maps,
    spectral_stability,
    stationarity_profile,
)
from .ttm import TransferTensorSeries, decompose, extrapolate, tensor_norm_profile

__version__ = "0.1.0"
