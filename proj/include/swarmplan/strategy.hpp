// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "swarmplan/lp.hpp"
#include "swarmplan/model.hpp"

namespace swarmplan::strategy {

// Reference formulation of the throughput program. Variable layout:
//   a(i,j) = var a_base + i*n + j      gradient flow i -> reducer j
//   g(i,j) = var g_base + i*n + j      averaged partition flow i -> j
//   c(i)   = var c_base + i            compute duty cycle
//   xi     = last variable             steps per second (scaled)
// Flows are expressed in units of the largest peer capacity, xi in units of
// the maximum possible compute throughput; scale factors are recorded so
// solutions can be mapped back to bits per second.
struct StrategyProblem {
  lp::LinearProgram prog;
  int n = 0;
  int a_base = 0, g_base = 0, c_base = 0, xi_var = 0;
  double flow_scale = 1.0;  // bits/s per flow unit
  double xi_scale = 1.0;    // steps/s per xi unit
  // row counts per constraint family, in emission order
  int rows_compute = 0;     // xi bounded by total compute rate
  int rows_aggregate = 0;   // xi bounded by per-reducer returned flow
  int rows_service = 0;     // g_ij bounded by slowest gradient arrival
  int rows_download = 0;
  int rows_upload = 0;
  int rows_link = 0;

  int a(int i, int j) const { return a_base + i * n + j; }
  int g(int i, int j) const { return g_base + i * n + j; }
  int c(int i) const { return c_base + i; }
};

// Emits the full reference program, including the n^3 service family.
StrategyProblem build_lp(const CollaborationSpec& spec);

struct SolveOptions {
  // Drop the compute term and fix c=1 for every computing peer; the result
  // describes a pure averaging round (used for round-time models).
  bool communication_only = false;
  lp::SimplexOptions simplex;
};

// Throws std::invalid_argument when validate(spec) reports violations.
StrategyAssignment solve_strategy(const CollaborationSpec& spec,
                                  const SolveOptions& opts = {});

// Closed-form averaging round models, seconds per round.
double allreduce_round_seconds(const CollaborationSpec& spec);
double parameter_server_round_seconds(const CollaborationSpec& spec,
                                      int server);
// Round time implied by the adaptive strategy (communication-only solve).
double adaptive_round_seconds(const CollaborationSpec& spec);

}  // namespace swarmplan::strategy
