"""Fock-space semiclassics for Bose-Hubbard systems.

Thin wrapper over the C++ core; see docs/config.md for the INI format used by
run_cbs and run_cli.
"""

from ._fockscatter import (
    ConfigError,
    Model,
    __version__,
    basis_states,
    build_model,
    classical_distribution,
    default_config,
    diagonal_trajectory_sum,
    normalize_config,
    overlap_exact,
    overlap_wkb,
    run_cbs,
    run_cli,
    semiclassical_amplitude,
    shoot_fock,
    transition_probabilities_exact,
)

__all__ = [
    "ConfigError",
    "Model",
    "__version__",
    "basis_states",
    "build_model",
    "classical_distribution",
    "default_config",
    "diagonal_trajectory_sum",
    "normalize_config",
    "overlap_exact",
    "overlap_wkb",
    "run_cbs",
    "run_cli",
    "semiclassical_amplitude",
    "shoot_fock",
    "transition_probabilities_exact",
]
