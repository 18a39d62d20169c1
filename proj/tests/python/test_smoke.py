# Copyright (c) 2026 swarmplan authors
# SPDX-License-Identifier: Apache-2.0
import json
import math

import pytest

import swarmplan


def homogeneous_spec(n=4, mbps=1000.0, rate=1.0):
    return json.dumps(
        {
            "peers": [
                {
                    "id": f"peer{i}",
                    "samples_per_sec": rate,
                    "download_mbps": mbps,
                    "upload_mbps": mbps,
                }
                for i in range(n)
            ],
            "batch_size": 1.0,
            "param_count": 1.0e6,
            "bits_per_param": 32.0,
        }
    )


def test_solve_strategy_homogeneous():
    out = swarmplan.solve_strategy(homogeneous_spec())
    assert out["steps_per_sec"] > 0
    assert all(c for c in out["compute"])
    assert math.isclose(sum(out["fractions"]), 1.0, rel_tol=1e-6)
    for f in out["fractions"]:
        assert math.isclose(f, 0.25, abs_tol=1e-6)


def test_validate_reports_bad_peer():
    spec = json.loads(homogeneous_spec())
    spec["peers"][0]["download_mbps"] = -1.0
    problems = swarmplan.validate_spec(json.dumps(spec))
    assert problems and problems[0]["peer"] == 0


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        swarmplan.solve_strategy("{not json")


def test_round_models_ordering():
    spec = homogeneous_spec(n=8)
    ar = swarmplan.simulate_averaging(spec, "allreduce")
    ps = swarmplan.simulate_averaging(spec, "parameter_server")
    assert ar > 0 and ps > ar  # one saturated server is slower than a ring


def test_groups_api():
    plan = swarmplan.build_plan(16, 4)
    assert len(plan) == 2
    assert swarmplan.optimal_group_size(16, 0.0) == 16
    assert swarmplan.expected_iterations(16, 16, 0.0) == pytest.approx(1.0)


def test_run_training_static_fleet():
    scenario = {
        "name": "smoke",
        "collaboration": json.loads(homogeneous_spec()),
        "sim": {"algorithm": "allreduce", "seed": 7},
    }
    out = swarmplan.run_training(json.dumps(scenario), hours=0.25)
    assert out["steps_total"] > 0
    assert out["retries_total"] == 0
