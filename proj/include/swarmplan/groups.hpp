// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <set>
#include <utility>
#include <vector>

namespace swarmplan::groups {

// Multi-round group averaging schedule. rounds[r] is a partition of peers
// 0..n-1 into groups; after all rounds every peer holds the global average.
struct GroupPlan {
  int n = 0;
  int m = 0;  // target group size
  std::vector<std::vector<std::vector<int>>> rounds;
};

// Deterministic plan with ceil(log_m n) rounds; within a round group sizes
// differ by at most one. Throws std::invalid_argument unless n >= 1 and
// 2 <= m <= max(n, 2).
GroupPlan build_plan(int n, int m);

struct RunResult {
  Eigen::MatrixXd values;           // n x dim, peer state after the last round
  std::vector<bool> complete;       // peer saw contributions from all n peers
  std::vector<int> coverage;        // number of peers covered per peer
  int groups_failed = 0;
};

// Executes the plan on per-peer row vectors. A group listed in `failures`
// (round, group index) makes no progress that round; its members keep their
// previous state. Weighted mean when weights are given.
RunResult run_plan(const GroupPlan& plan, const Eigen::MatrixXd& values,
                   const std::vector<double>& weights = {},
                   const std::set<std::pair<int, int>>& failures = {});

// Expected synchronous iterations until every group succeeds in all rounds,
// with per-peer failure probability p and groups of size m retrying
// independently: rounds * E[max of ceil(n/m) iid Geometric((1-p)^m)].
// Series summation, truncated when the tail falls below 1e-12; throws
// std::domain_error if the series needs more than 5e7 terms.
double expected_iterations(int n, int m, double p);

// Group size in [2, n] minimizing expected_iterations; ties prefer larger m.
int optimal_group_size(int n, double p);

}  // namespace swarmplan::groups
