// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
//
// Group averaging schedules. The grid construction (n a power of m) groups
// peers by digits of their base-m index; for ragged n that breaks down, so
// rounds merge "coverage classes" instead: peers holding identical partial
// averages. Every group takes at least one member of each class in its
// chunk, which keeps chunk members bitwise interchangeable after the round
// and makes the final average exact for any n.

#include "swarmplan/groups.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace swarmplan::groups {

namespace {

int rounds_needed(int n, int m) {
  int r = 0;
  long long reach = 1;
  while (reach < n) {
    reach *= m;
    ++r;
  }
  return r;
}

// smallest radix whose rounds_left-th power covers `remaining`
int pick_radix(int remaining, int rounds_left) {
  for (int mu = 2;; ++mu) {
    long long reach = 1;
    for (int t = 0; t < rounds_left && reach < remaining; ++t) reach *= mu;
    if (reach >= remaining) return mu;
  }
}

}  // namespace

GroupPlan build_plan(int n, int m) {
  if (n < 1) throw std::invalid_argument("build_plan: n must be >= 1");
  if (m < 2 || m > std::max(n, 2))
    throw std::invalid_argument("build_plan: m must lie in [2, max(n, 2)]");

  GroupPlan plan;
  plan.n = n;
  plan.m = m;
  int rounds = rounds_needed(n, m);

  std::vector<std::vector<int>> classes(n);
  for (int i = 0; i < n; ++i) classes[i] = {i};

  for (int t = 0; t < rounds; ++t) {
    int remaining = static_cast<int>(classes.size());
    int mu = std::min(m, pick_radix(remaining, rounds - t));
    int n_chunks = (remaining + mu - 1) / mu;
    int base_arity = remaining / n_chunks;
    int extra_chunks = remaining % n_chunks;

    std::vector<std::vector<int>> round_groups;
    std::vector<std::vector<int>> next_classes;
    int cls = 0;
    for (int c = 0; c < n_chunks; ++c) {
      int arity = base_arity + (c < extra_chunks ? 1 : 0);
      std::size_t g_count = classes[cls].size();
      for (int k = 1; k < arity; ++k)
        g_count = std::min(g_count, classes[cls + k].size());

      std::vector<std::vector<int>> chunk_groups(g_count);
      std::vector<int> merged;
      std::size_t offset = 0;
      for (int k = 0; k < arity; ++k) {
        const auto& members = classes[cls + k];
        merged.insert(merged.end(), members.begin(), members.end());
        std::size_t per = members.size() / g_count;
        std::size_t rem = members.size() % g_count;
        std::size_t next = 0;
        for (std::size_t g = 0; g < g_count; ++g) {
          std::size_t take = per + ((g + g_count - offset) % g_count < rem);
          for (std::size_t x = 0; x < take; ++x)
            chunk_groups[g].push_back(members[next++]);
        }
        offset = (offset + rem) % g_count;
      }
      for (auto& grp : chunk_groups) {
        std::sort(grp.begin(), grp.end());
        round_groups.push_back(std::move(grp));
      }
      next_classes.push_back(std::move(merged));
      cls += arity;
    }
    std::sort(round_groups.begin(), round_groups.end());
    plan.rounds.push_back(std::move(round_groups));
    classes = std::move(next_classes);
  }
  return plan;
}

RunResult run_plan(const GroupPlan& plan, const Eigen::MatrixXd& values,
                   const std::vector<double>& weights,
                   const std::set<std::pair<int, int>>& failures) {
  int n = plan.n;
  if (values.rows() != n)
    throw std::invalid_argument("run_plan: values must have one row per peer");
  if (!weights.empty() && static_cast<int>(weights.size()) != n)
    throw std::invalid_argument("run_plan: weights size mismatch");

  struct ClassState {
    Eigen::VectorXd sum;
    double weight = 0.0;
    int covered = 0;
  };
  std::map<int, ClassState> cls;
  std::vector<int> peer_class(n);
  for (int i = 0; i < n; ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    cls[i] = ClassState{values.row(i).transpose() * w, w, 1};
    peer_class[i] = i;
  }
  int next_id = n;

  RunResult out;
  for (int r = 0; r < static_cast<int>(plan.rounds.size()); ++r) {
    for (int gi = 0; gi < static_cast<int>(plan.rounds[r].size()); ++gi) {
      if (failures.count({r, gi})) {
        ++out.groups_failed;
        continue;
      }
      const auto& group = plan.rounds[r][gi];
      std::vector<int> seen;
      for (int peer : group) {
        int c = peer_class[peer];
        if (std::find(seen.begin(), seen.end(), c) == seen.end())
          seen.push_back(c);
      }
      if (seen.size() < 2) continue;
      ClassState merged;
      merged.sum = Eigen::VectorXd::Zero(values.cols());
      for (int c : seen) {
        merged.sum += cls[c].sum;
        merged.weight += cls[c].weight;
        merged.covered += cls[c].covered;
      }
      int id = next_id++;
      cls[id] = std::move(merged);
      for (int peer : group) peer_class[peer] = id;
    }
  }

  out.values.resize(n, values.cols());
  out.complete.resize(n);
  out.coverage.resize(n);
  for (int i = 0; i < n; ++i) {
    const ClassState& st = cls[peer_class[i]];
    out.values.row(i) = (st.sum / st.weight).transpose();
    out.coverage[i] = st.covered;
    out.complete[i] = st.covered == n;
  }
  return out;
}

double expected_iterations(int n, int m, double p) {
  if (n < 1) throw std::invalid_argument("expected_iterations: n must be >= 1");
  if (m < 2 || m > std::max(n, 2))
    throw std::invalid_argument("expected_iterations: m out of range");
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("expected_iterations: p must lie in [0, 1)");

  int rounds = rounds_needed(n, m);
  if (rounds == 0) return 0.0;
  int n_groups = (n + m - 1) / m;
  double q = std::pow(1.0 - p, m);  // group survives an iteration
  double r = 1.0 - q;

  // E[max of G iid Geometric(q)] = sum_k (1 - (1 - r^k)^G)
  double expect = 0.0;
  double rpow = 1.0;  // r^k
  for (long k = 0;; ++k) {
    if (k > 50000000)
      throw std::domain_error("expected_iterations: series did not converge");
    expect += 1.0 - std::pow(1.0 - rpow, n_groups);
    rpow *= r;
    if (n_groups * rpow / (1.0 - r) < 1e-12) break;
  }
  return rounds * expect;
}

int optimal_group_size(int n, double p) {
  if (n < 2) throw std::invalid_argument("optimal_group_size: n must be >= 2");
  int best_m = 2;
  double best = expected_iterations(n, 2, p);
  for (int m = 3; m <= n; ++m) {
    double e = expected_iterations(n, m, p);
    if (e <= best + 1e-12 * std::max(1.0, best)) {
      best = std::min(best, e);
      best_m = m;
    }
  }
  return best_m;
}

}  // namespace swarmplan::groups
