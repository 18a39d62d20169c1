// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "swarmplan/scenario.hpp"
#include "swarmplan/strategy.hpp"

using namespace swarmplan;
using namespace swarmplan::strategy;

namespace {

PeerSpec peer(const std::string& id, double samples, double down_mbps,
              double up_mbps) {
  PeerSpec p;
  p.id = id;
  p.samples_per_sec = samples;
  p.download_bps = down_mbps * kMbps;
  p.upload_bps = up_mbps * kMbps;
  return p;
}

CollaborationSpec homogeneous(int n, double samples, double mbps,
                              double batch, double params) {
  CollaborationSpec spec;
  spec.batch_size = batch;
  spec.param_count = params;
  for (int i = 0; i < n; ++i)
    spec.peers.push_back(peer("peer" + std::to_string(i), samples, mbps,
                              mbps));
  return spec;
}

CollaborationSpec load_fixture(const std::string& name) {
  return load_scenario(std::string(SWARMPLAN_SCENARIO_DIR) + "/" + name +
                       ".json")
      .collaboration;
}

// Checks the head-room identities the optimizer promises on its own output:
// steps/s within compute supply, every aggregating recipient fed a full
// model per step, and per-peer wire totals inside the advertised caps.
void check_assignment(const CollaborationSpec& spec,
                      const StrategyAssignment& s) {
  const int n = spec.size();
  const double P = spec.payload_bits();
  double cap = 1.0;
  for (const auto& p : spec.peers)
    cap = std::max(cap, std::max(p.download_bps, p.upload_bps));
  const double slack = 1e-6 * std::max(P, cap);  // solver tolerance, rescaled

  double compute_supply = 0.0;
  for (int i = 0; i < n; ++i)
    compute_supply += spec.peers[i].samples_per_sec * s.c_raw[i];
  CHECK(s.xi <= compute_supply / spec.batch_size + 1e-6);

  for (int i = 0; i < n; ++i) {
    if (!spec.peers[i].can_compute || spec.peers[i].client_mode) continue;
    double returned = 0.0;
    for (int j = 0; j < n; ++j) returned += s.g(j, i);
    CHECK(returned >= s.xi * P - slack);
  }

  for (int i = 0; i < n; ++i) {
    double in = 0.0, out = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      in += s.a(j, i) + s.g(j, i);
      out += s.a(i, j) + s.g(i, j);
    }
    CHECK(in <= spec.peers[i].download_bps + slack);
    CHECK(out <= spec.peers[i].upload_bps + slack);
    CHECK(s.fractions[i] >= 0.0);
  }
  for (const auto& l : spec.links) {
    if (!std::isfinite(l.bps)) continue;
    CHECK(s.a(l.from, l.to) + s.g(l.from, l.to) <= l.bps + slack);
  }
}

// Reference optimum over hard on/off compute assignments: pin every duty
// cycle to 0 or 1, re-solve for the best steps/s, take the best mask.
double best_binary_mask_xi(const CollaborationSpec& spec) {
  StrategyProblem sp = build_lp(spec);
  const int n = spec.size();
  std::vector<int> computing;
  for (int i = 0; i < n; ++i)
    if (spec.peers[i].can_compute && spec.peers[i].samples_per_sec > 0)
      computing.push_back(i);
  double best = 0.0;
  for (unsigned mask = 1; mask < (1u << computing.size()); ++mask) {
    lp::LinearProgram prog = sp.prog;
    for (std::size_t b = 0; b < computing.size(); ++b) {
      double v = (mask >> b) & 1u ? 1.0 : 0.0;
      prog.lower(sp.c(computing[b])) = v;
      prog.upper(sp.c(computing[b])) = v;
    }
    lp::LpSolution sol = lp::solve(prog);
    if (sol.status == lp::LpStatus::Optimal)
      best = std::max(best, sol.x(sp.xi_var) * sp.xi_scale);
  }
  return best;
}

CollaborationSpec random_small_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 2 + static_cast<int>(rng() % 2);
  CollaborationSpec spec;
  spec.batch_size = 1.0 + 3.0 * unit(rng);
  spec.param_count = 1e6 + 4e6 * unit(rng);
  for (int i = 0; i < n; ++i) {
    double down = 10.0 + 190.0 * unit(rng);
    double up = 10.0 + 190.0 * unit(rng);
    spec.peers.push_back(peer("p" + std::to_string(i),
                              0.5 + 2.5 * unit(rng), down, up));
  }
  if (unit(rng) < 0.25) spec.peers[n - 1].client_mode = true;
  return spec;
}

}  // namespace

TEST_CASE("reference program shape for two peers") {
  CollaborationSpec spec = homogeneous(2, 1.0, 100.0, 2.0, 1e6);
  spec.set_link_limit(0, 1, 20.0 * kMbps);
  spec.set_link_limit(1, 0, 30.0 * kMbps);
  StrategyProblem sp = build_lp(spec);
  CHECK(sp.n == 2);
  CHECK(sp.prog.num_vars == 2 * 4 + 2 + 1);
  CHECK(sp.rows_compute == 1);
  CHECK(sp.rows_aggregate == 2);
  CHECK(sp.rows_service == 8);  // n^2 pairs for each of the 2 computing peers
  CHECK(sp.rows_download == 2);
  CHECK(sp.rows_upload == 2);
  CHECK(sp.rows_link == 2);
  CHECK(static_cast<int>(sp.prog.rows.size()) ==
        sp.rows_compute + sp.rows_aggregate + sp.rows_service +
            sp.rows_download + sp.rows_upload + sp.rows_link);
  // the objective is the throughput variable alone
  for (int v = 0; v < sp.prog.num_vars; ++v)
    CHECK(sp.prog.objective(v) == (v == sp.xi_var ? 1.0 : 0.0));
  // variable layout round trip
  CHECK(sp.a(1, 0) == sp.a_base + 2);
  CHECK(sp.g(0, 1) == sp.g_base + 1);
  CHECK(sp.c(1) == sp.c_base + 1);
}

TEST_CASE("non-computing peers are excluded from compute families") {
  CollaborationSpec spec = homogeneous(3, 1.0, 100.0, 2.0, 1e6);
  spec.peers[2].samples_per_sec = 0.0;
  spec.peers[2].can_compute = false;
  StrategyProblem sp = build_lp(spec);
  CHECK(sp.rows_service == 9 * 2);   // only 2 peers compute
  CHECK(sp.rows_aggregate == 2);     // aggregation needs can_compute
  CHECK(sp.prog.upper(sp.c(2)) == 0.0);
  CHECK(sp.prog.upper(sp.c(0)) == 1.0);
}

TEST_CASE("client-mode peers accept no inbound flow variables") {
  CollaborationSpec spec = homogeneous(3, 1.0, 100.0, 2.0, 1e6);
  spec.peers[1].client_mode = true;
  StrategyProblem sp = build_lp(spec);
  CHECK(sp.rows_aggregate == 2);  // the client is not an aggregation target
  for (int j = 0; j < 3; ++j) {
    if (j == 1) continue;
    CHECK(sp.prog.upper(sp.a(j, 1)) == 0.0);
    CHECK(sp.prog.upper(sp.g(j, 1)) == 0.0);
  }
  CHECK(sp.prog.upper(sp.a(0, 2)) > 0.0);
}

TEST_CASE("a single computing peer runs at its own sample rate") {
  CollaborationSpec spec = homogeneous(1, 2.0, 100.0, 4.0, 1e6);
  StrategyAssignment s = solve_strategy(spec);
  CHECK(s.xi == doctest::Approx(0.5));
  CHECK(s.compute[0]);
  CHECK(s.c_raw[0] == doctest::Approx(1.0));
}

TEST_CASE("homogeneous fleet splits aggregation evenly") {
  CollaborationSpec spec = load_fixture("homogeneous8");
  StrategyAssignment s = solve_strategy(spec);
  CHECK(s.xi == doctest::Approx(0.697544642857).epsilon(1e-9));
  for (int i = 0; i < 8; ++i) {
    CHECK(s.compute[i]);
    CHECK(s.fractions[i] == doctest::Approx(0.125).epsilon(1e-6));
  }
  check_assignment(spec, s);
}

TEST_CASE("well-connected helper absorbs all aggregation") {
  CollaborationSpec spec = load_fixture("aux_server");
  StrategyAssignment s = solve_strategy(spec);
  CHECK(s.xi == doctest::Approx(1.220703125).epsilon(1e-9));
  int aux = -1;
  for (int i = 0; i < spec.size(); ++i)
    if (spec.peers[i].samples_per_sec == 0.0) aux = i;
  REQUIRE(aux >= 0);
  CHECK(s.fractions[aux] == doctest::Approx(1.0).epsilon(1e-6));
  check_assignment(spec, s);
}

TEST_CASE("frozen optimizer throughput for the benchmark fleets") {
  struct Case {
    const char* name;
    double xi;
  } cases[] = {
      {"table1_a", 0.697544642857},
      {"table1_b", 0.130208333333},
      {"table1_c", 0.244140625},
      {"table1_d", 0.217437744141},
      {"daynight", 3.0},
      {"static16", 2.0},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CollaborationSpec spec = load_fixture(c.name);
    StrategyAssignment s = solve_strategy(spec);
    CHECK(s.xi == doctest::Approx(c.xi).epsilon(1e-9));
    check_assignment(spec, s);
  }
}

TEST_CASE("solutions satisfy their own constraints on random fleets") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    CAPTURE(seed);
    CollaborationSpec spec = random_small_spec(seed);
    StrategyAssignment s = solve_strategy(spec);
    check_assignment(spec, s);
    CHECK(s.lp_iterations > 0);
  }
}

TEST_CASE("hard on/off throughput never beats the relaxed program") {
  for (std::uint64_t seed = 50; seed <= 80; ++seed) {
    CAPTURE(seed);
    CollaborationSpec spec = random_small_spec(seed);
    StrategyAssignment relaxed_free = solve_strategy(spec);
    double binary_best = best_binary_mask_xi(spec);

    // the relaxed LP (duty cycles free in [0,1]) dominates any mask
    StrategyProblem sp = build_lp(spec);
    lp::LpSolution relaxed = lp::solve(sp.prog);
    REQUIRE(relaxed.status == lp::LpStatus::Optimal);
    double relaxed_xi = relaxed.x(sp.xi_var) * sp.xi_scale;
    CHECK(relaxed_xi >= binary_best - 1e-6 * std::max(1.0, binary_best));

    // the shipped strategy uses on/off duty cycles and matches the best mask
    CHECK(relaxed_free.xi ==
          doctest::Approx(binary_best).epsilon(1e-6));
    CHECK(relaxed_free.xi <= relaxed_xi + 1e-6 * std::max(1.0, relaxed_xi));
  }
}

TEST_CASE("adding an idle helper never slows the fleet") {
  for (int n = 2; n <= 6; ++n) {
    CAPTURE(n);
    CollaborationSpec spec = homogeneous(n, 1.0, 100.0, double(n), 2e6);
    double base = solve_strategy(spec).xi;
    CollaborationSpec with_helper = spec;
    PeerSpec helper = peer("helper", 0.0, 400.0, 400.0);
    helper.can_compute = true;
    with_helper.peers.push_back(helper);
    double boosted = solve_strategy(with_helper).xi;
    CHECK(boosted >= base - 1e-9);
  }
}

TEST_CASE("client peers compute but never aggregate") {
  CollaborationSpec spec = homogeneous(4, 1.0, 100.0, 4.0, 2e6);
  spec.peers[3].client_mode = true;
  StrategyAssignment s = solve_strategy(spec);
  CHECK(s.fractions[3] == doctest::Approx(0.0));
  for (int j = 0; j < 4; ++j) {
    if (j == 3) continue;
    CHECK(s.a(j, 3) == doctest::Approx(0.0));
    CHECK(s.g(j, 3) == doctest::Approx(0.0));
  }
  // it still contributes samples
  CHECK(s.c_raw[3] > 0.0);
  check_assignment(spec, s);
}

TEST_CASE("all-reduce round model") {
  CollaborationSpec spec = homogeneous(4, 1.0, 100.0, 4.0, 25e6);
  spec.peers[2].upload_bps = 50 * kMbps;  // slowest duplex wins
  double P = spec.payload_bits();
  CHECK(allreduce_round_seconds(spec) ==
        doctest::Approx(2.0 * 0.75 * P / 50e6));
  spec.set_link_limit(0, 1, 10 * kMbps);
  CHECK(allreduce_round_seconds(spec) ==
        doctest::Approx(2.0 * 0.75 * P / 10e6));
  CollaborationSpec solo = homogeneous(1, 1.0, 100.0, 1.0, 25e6);
  CHECK(allreduce_round_seconds(solo) == doctest::Approx(0.0));
}

TEST_CASE("parameter-server round model") {
  CollaborationSpec spec = homogeneous(4, 1.0, 100.0, 4.0, 25e6);
  spec.peers[0].download_bps = 400 * kMbps;
  spec.peers[0].upload_bps = 300 * kMbps;
  double P = spec.payload_bits();
  CHECK(parameter_server_round_seconds(spec, 0) ==
        doctest::Approx(3.0 * P / 300e6));
  CHECK(parameter_server_round_seconds(spec, 1) ==
        doctest::Approx(3.0 * P / 100e6));
  CHECK_THROWS_AS(parameter_server_round_seconds(spec, 7),
                  std::invalid_argument);
  CHECK_THROWS_AS(parameter_server_round_seconds(spec, -1),
                  std::invalid_argument);
}

TEST_CASE("adaptive round time matches the two-peer closed form") {
  // two equal peers exchange half a model each way: one payload over one
  // duplex link per round
  CollaborationSpec spec = homogeneous(2, 1.0, 100.0, 2.0, 25e6);
  double P = spec.payload_bits();
  CHECK(adaptive_round_seconds(spec) ==
        doctest::Approx(P / (100e6 * 2.0)).epsilon(1e-6));
}

TEST_CASE("invalid specs are rejected by the optimizer") {
  CollaborationSpec spec = homogeneous(2, 1.0, 100.0, 2.0, 1e6);
  spec.batch_size = 0.0;
  CHECK_THROWS_AS(solve_strategy(spec), std::invalid_argument);
  CHECK_THROWS_AS(build_lp(spec), std::invalid_argument);
}

TEST_CASE("repeat strategy solves are bit identical") {
  CollaborationSpec spec = load_fixture("aux_server");
  StrategyAssignment s1 = solve_strategy(spec);
  StrategyAssignment s2 = solve_strategy(spec);
  CHECK(s1.xi == s2.xi);
  CHECK(s1.lp_iterations == s2.lp_iterations);
  for (int i = 0; i < spec.size(); ++i) {
    CHECK(s1.c_raw[i] == s2.c_raw[i]);
    CHECK(s1.fractions[i] == s2.fractions[i]);
    for (int j = 0; j < spec.size(); ++j) {
      CHECK(s1.a(i, j) == s2.a(i, j));
      CHECK(s1.g(i, j) == s2.g(i, j));
    }
  }
}
