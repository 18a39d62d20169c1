// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "swarmplan/model.hpp"

namespace swarmplan::netsim {

enum class Algorithm { AllReduce, ParameterServer, Adaptive };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct ChurnEvent {
  enum class Kind { Join, Leave, Fail };
  double t = 0.0;
  std::string peer_id;
  Kind kind = Kind::Join;
};

struct ChurnTrace {
  double horizon_s = 3600.0;
  std::vector<ChurnEvent> events;  // sorted by t at validation
};

ChurnTrace trace_from_json(const std::string& text);

struct SimConfig {
  Algorithm algorithm = Algorithm::Adaptive;
  bool delay_parameter_updates = true;  // overlap compute with averaging
  double refresh_s = 30.0;              // strategy re-solve period
  double catchup_s = 60.0;              // rejoin synchronization delay
  double stall_timeout_s = 600.0;
  int group_size = 0;                   // 0: single all-to-all group
  int ps_server = -1;                   // -1: best duplex bandwidth
  unsigned long seed = 1;
};

struct StepRecord {
  int step = 0;
  double t_complete = 0.0;
  double samples = 0.0;
  int active_peers = 0;
  double round_s = 0.0;
  int retries = 0;
};

struct SimTrace {
  std::vector<StepRecord> steps;
  double horizon_s = 0.0;
  int lp_solves = 0;
  int retries_total = 0;
  double samples_total = 0.0;
  // average optimizer steps per hour over [t0, t1)
  double steps_per_hour(double t0, double t1) const;
};

class TrainingStalled : public std::runtime_error {
 public:
  explicit TrainingStalled(double at)
      : std::runtime_error("no computing peers for longer than the stall "
                           "timeout (t=" + std::to_string(at) + "s)"),
        at_s(at) {}
  double at_s;
};

// Seconds for one averaging round over the full fleet. `server` only applies
// to ParameterServer (-1 picks the peer with the best duplex bandwidth).
double simulate_averaging(const CollaborationSpec& spec, Algorithm alg,
                          int server = -1);

// Deterministic event-driven run: same (spec, trace, config.seed) gives a
// bit-identical trace.
SimTrace simulate_training(const CollaborationSpec& spec,
                           const ChurnTrace& trace, const SimConfig& config);

struct StrategyComparison {
  Algorithm algorithm;
  double round_s = 0.0;
  double steps_per_hour = 0.0;
};

std::vector<StrategyComparison> compare_strategies(
    const CollaborationSpec& spec, const SimConfig& config = {});

}  // namespace swarmplan::netsim
