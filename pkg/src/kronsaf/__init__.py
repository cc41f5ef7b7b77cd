"""Subband adaptive filtering with Kronecker-factored weight structure.

The package bundles the building blocks for sparse-system identification,
echo cancellation, and filtered-reference active control experiments:
signal containers, heavy-tailed noise generators, a cosine-modulated
analysis bank, nearest-Kronecker-product decomposition, the adaptive
engine family, evaluation metrics, and a reproducible experiment runner
with a command-line front end.
"""

__version__ = "0.1.0"

from .anc import (
    FX_ENGINE_NAMES,
    AncScenario,
    FxLmsEngine,
    MultiAncScenario,
    make_fx_engine,
    run_anc_multi,
    run_anc_single,
)
from .config import ExperimentConfig, load_config, parse_config_text, validate_config
from .engines import (
    ENGINE_NAMES,
    AlgoConfig,
    FonspnEngine,
    NkpFonspnEngine,
    NkpNspnEngine,
    NsafEngine,
    NspnEngine,
    TnkpEngine,
    calibrate_switch_db,
    frac_order_bound,
    frac_power_real,
    g_error,
    make_engine,
    p_norm_p,
)
from .errors import (
    ConfigError,
    DesignError,
    DimensionError,
    IngestionError,
    KronsafError,
    ParameterError,
)
from .filterbank import (
    analyze_inputs,
    analyze_scalar_window,
    bank_power_response,
    design_bank,
    design_prototype,
    load_bank,
    save_bank,
    subband_signals,
)
from .metrics import (
    AnrTracker,
    LearningCurve,
    MultiAnrTracker,
    aggregate_trials,
    nmsd_db,
    nmsd_ratio,
    ratio_to_db,
    read_curve_csv,
    write_curve_csv,
)
from .nkp import (
    KronFactors,
    SvdResult,
    filtered_input_left,
    filtered_input_right,
    jacobi_svd,
    kron_synthesize,
    misalignment,
    nkp_decompose,
    random_lowrank_ir,
)
from .noise import (
    AlphaStableParams,
    ArOneParams,
    cauchy_driver,
    load_recording,
    sample_alpha_stable,
    sample_ar1,
)
from .signals import (
    ImpulseResponse,
    TapDelayLine,
    fir_filter,
    load_ir,
    load_signal,
    save_ir,
    save_signal,
    snapshot_matrix,
)
from .experiment import run_calibration, run_experiment, run_trial

__all__ = [
    "__version__",
    "AlgoConfig",
    "AlphaStableParams",
    "AncScenario",
    "AnrTracker",
    "ArOneParams",
    "ConfigError",
    "DesignError",
    "DimensionError",
    "ENGINE_NAMES",
    "ExperimentConfig",
    "FX_ENGINE_NAMES",
    "FonspnEngine",
    "FxLmsEngine",
    "ImpulseResponse",
    "IngestionError",
    "KronFactors",
    "KronsafError",
    "LearningCurve",
    "MultiAncScenario",
    "MultiAnrTracker",
    "NkpFonspnEngine",
    "NkpNspnEngine",
    "NsafEngine",
    "NspnEngine",
    "ParameterError",
    "SvdResult",
    "TapDelayLine",
    "TnkpEngine",
    "aggregate_trials",
    "analyze_inputs",
    "analyze_scalar_window",
    "bank_power_response",
    "calibrate_switch_db",
    "cauchy_driver",
    "design_bank",
    "design_prototype",
    "filtered_input_left",
    "filtered_input_right",
    "fir_filter",
    "frac_order_bound",
    "frac_power_real",
    "g_error",
    "jacobi_svd",
    "kron_synthesize",
    "load_bank",
    "load_config",
    "load_ir",
    "load_recording",
    "load_signal",
    "make_engine",
    "make_fx_engine",
    "misalignment",
    "nkp_decompose",
    "nmsd_db",
    "nmsd_ratio",
    "p_norm_p",
    "parse_config_text",
    "random_lowrank_ir",
    "ratio_to_db",
    "read_curve_csv",
    "run_anc_multi",
    "run_anc_single",
    "run_calibration",
    "run_experiment",
    "run_trial",
    "save_bank",
    "save_ir",
    "save_signal",
    "snapshot_matrix",
    "subband_signals",
    "validate_config",
    "write_curve_csv",
]
