"""ARX identification of thermal dynamics from power/temperature logs."""
from .errors import (
    ArxError,
    ConfigError,
    DataError,
    DegenerateError,
    DivergenceError,
    ParameterError,
    ParseError,
    RankError,
    SchemaError,
    SelectionError,
    ShapeError,
    SizeError,
    VersionError,
)
from .model import (
    ArxModel,
    StabilityVerdict,
    check_stability,
    load_model,
    predict_one_step,
    save_model,
    simulate_free_run,
)
from .regression import (
    ArxOrders,
    RegressionProblem,
    SvdFactors,
    ThresholdGrid,
    build_regression,
    default_threshold_grid,
    solve_least_squares,
    svd,
    truncate,
)
from .selection import (
    FitReport,
    SearchSpace,
    aic,
    fit_metric,
    grid_search,
    threshold_search,
    validate_model,
    write_candidate_table,
)
from .signals import (
    DatasetSchema,
    IdentDataset,
    Preprocessing,
    Signal,
    load_dataset,
    preprocess,
    restore,
    save_dataset,
)
from .synth import (
    FosterNetwork,
    PowerProfile,
    Scenario,
    add_measurement_noise,
    build_profile,
    generate_arx,
    simulate_foster,
)

__version__ = "0.1.0"

__all__ = [
    "ArxError",
    "ArxModel",
    "ArxOrders",
    "ConfigError",
    "DataError",
    "DatasetSchema",
    "DegenerateError",
    "DivergenceError",
    "FitReport",
    "FosterNetwork",
    "IdentDataset",
    "ParameterError",
    "ParseError",
    "PowerProfile",
    "Preprocessing",
    "RankError",
    "RegressionProblem",
    "Scenario",
    "SchemaError",
    "SearchSpace",
    "SelectionError",
    "ShapeError",
    "Signal",
    "SizeError",
    "StabilityVerdict",
    "SvdFactors",
    "ThresholdGrid",
    "VersionError",
    "add_measurement_noise",
    "aic",
    "build_profile",
    "build_regression",
    "check_stability",
    "default_threshold_grid",
    "fit_metric",
    "generate_arx",
    "grid_search",
    "load_dataset",
    "load_model",
    "predict_one_step",
    "preprocess",
    "restore",
    "save_dataset",
    "save_model",
    "simulate_foster",
    "simulate_free_run",
    "solve_least_squares",
    "svd",
    "threshold_search",
    "truncate",
    "validate_model",
    "write_candidate_table",
]
