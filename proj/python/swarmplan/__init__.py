# Copyright (c) 2026 swarmplan authors
# SPDX-License-Identifier: Apache-2.0
"""Adaptive collaboration planning: strategy solver, group plans, simulators."""

from ._swarmplan import (
    SpecParseError,
    __version__,
    assignment_json,
    build_plan,
    check_bound,
    compare_strategies,
    expected_iterations,
    optimal_group_size,
    run_training,
    simulate_averaging,
    solve_strategy,
    validate_spec,
)

__all__ = [
    "SpecParseError",
    "__version__",
    "assignment_json",
    "build_plan",
    "check_bound",
    "compare_strategies",
    "expected_iterations",
    "optimal_group_size",
    "run_training",
    "simulate_averaging",
    "solve_strategy",
    "validate_spec",
]
