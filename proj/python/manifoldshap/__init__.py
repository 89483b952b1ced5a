"""Python bindings for the manifoldshap C++ library."""

from ._core import (
    AcceptanceFailure,
    ConfigError,
    default_config,
    exact_shapley_from_table,
    experiment_names,
    normalize_l1,
    run_cli,
    run_experiment,
    sample_scm,
    scm_names,
    shapley_weight,
    threshold_for_mass,
    top_feature,
)

__all__ = [
    "AcceptanceFailure",
    "ConfigError",
    "default_config",
    "exact_shapley_from_table",
    "experiment_names",
    "normalize_l1",
    "run_cli",
    "run_experiment",
    "sample_scm",
    "scm_names",
    "shapley_weight",
    "threshold_for_mass",
    "top_feature",
]
