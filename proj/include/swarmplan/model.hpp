// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan {

// Bandwidths and flow rates are bits per second internally.
// JSON files use megabits per second (1 mbps = 1e6 bit/s).
constexpr double kMbps = 1e6;
constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct PeerSpec {
  std::string id;
  double samples_per_sec = 0.0;  // minibatch throughput while computing
  double download_bps = 0.0;
  double upload_bps = 0.0;
  bool can_compute = true;
  bool client_mode = false;  // cannot accept inbound connections
  double failure_rate = 0.0; // per averaging round
};

struct LinkLimit {
  int from = -1;
  int to = -1;
  double bps = kUnlimited;
};

struct CollaborationSpec {
  std::vector<PeerSpec> peers;
  std::vector<LinkLimit> links;  // pairs not listed are unlimited
  double batch_size = 1.0;       // samples per optimizer step
  double param_count = 0.0;
  double bits_per_param = 32.0;

  int size() const { return static_cast<int>(peers.size()); }
  double payload_bits() const { return param_count * bits_per_param; }
  double link_limit(int from, int to) const;
  void set_link_limit(int from, int to, double bps);
  int peer_index(const std::string& id) const;  // -1 when absent
};

struct Violation {
  int peer = -1;  // -1 for collaboration-level problems
  std::string field;
  std::string message;
};

// Deterministic order: collaboration-level checks first, then peers by index.
std::vector<Violation> validate(const CollaborationSpec& spec);

class SpecParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CollaborationSpec spec_from_json(const std::string& text);
std::string spec_to_json(const CollaborationSpec& spec);

// Output of the strategy optimizer. a(i,j) is the gradient flow peer i sends
// to reducer j; g(i,j) is the averaged-partition flow reducer i returns to
// peer j. Units are bits per second.
struct StrategyAssignment {
  Eigen::MatrixXd a;
  Eigen::MatrixXd g;
  std::vector<double> c_raw;       // fractional compute duty cycle
  std::vector<bool> compute;      // c_raw rounded at 1 - 1e-6
  std::vector<double> fractions;  // normalized share of aggregation per peer
  double xi = 0.0;                // optimizer steps per second
  int lp_iterations = 0;
};

std::string assignment_to_json(const CollaborationSpec& spec,
                               const StrategyAssignment& s);

}  // namespace swarmplan
