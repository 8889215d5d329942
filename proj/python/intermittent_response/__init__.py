"""Intermittent maps with a critical point.

Thin wrapper over the compiled ``_core`` module. Parameters are passed as
``alpha, beta`` with 0 < alpha < 1, beta >= 1 and alpha * beta < 1.
"""

from ._core import (
    ConfigError,
    DomainError,
    a0,
    admissible,
    apply_transfer,
    cone_invariance,
    inverse_branch,
    invariant_density,
    map_deriv,
    map_eval,
    mesh_nodes,
    partial_L,
    preimage_ladder,
    response,
    response_fd,
    return_time_tail,
    run_cli,
    simulate,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "a0",
    "admissible",
    "apply_transfer",
    "cone_invariance",
    "inverse_branch",
    "invariant_density",
    "map_deriv",
    "map_eval",
    "mesh_nodes",
    "partial_L",
    "preimage_ladder",
    "response",
    "response_fd",
    "return_time_tail",
    "run_cli",
    "simulate",
]
