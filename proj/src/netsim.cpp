// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <json.hpp>

#include "swarmplan/groups.hpp"
#include "swarmplan/scenario.hpp"
#include "swarmplan/strategy.hpp"

namespace swarmplan::netsim {

using json = nlohmann::ordered_json;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::AllReduce: return "allreduce";
    case Algorithm::ParameterServer: return "parameter_server";
    case Algorithm::Adaptive: return "adaptive";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "allreduce") return Algorithm::AllReduce;
  if (name == "parameter_server" || name == "ps")
    return Algorithm::ParameterServer;
  if (name == "adaptive") return Algorithm::Adaptive;
  throw SpecParseError("unknown algorithm: " + name);
}

ChurnTrace trace_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("invalid trace JSON: ") + e.what());
  }
  try {
    ChurnTrace trace;
    trace.horizon_s = j.value("horizon_s", 3600.0);
    if (j.contains("events")) {
      for (const auto& ej : j["events"]) {
        ChurnEvent ev;
        ev.t = ej.at("t").get<double>();
        ev.peer_id = ej.at("peer").get<std::string>();
        std::string kind = ej.at("kind").get<std::string>();
        if (kind == "join")
          ev.kind = ChurnEvent::Kind::Join;
        else if (kind == "leave")
          ev.kind = ChurnEvent::Kind::Leave;
        else if (kind == "fail")
          ev.kind = ChurnEvent::Kind::Fail;
        else
          throw SpecParseError("unknown churn event kind: " + kind);
        if (ev.t < 0) throw SpecParseError("churn event before t=0");
        trace.events.push_back(std::move(ev));
      }
    }
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const ChurnEvent& a, const ChurnEvent& b) {
                       return a.t < b.t;
                     });
    return trace;
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("bad trace: ") + e.what());
  }
}

namespace {

int best_duplex_peer(const CollaborationSpec& spec,
                     const std::vector<int>& members) {
  int best = -1;
  double best_bw = -1.0;
  for (int i : members) {
    double bw = std::min(spec.peers[i].download_bps, spec.peers[i].upload_bps);
    if (bw > best_bw) {
      best_bw = bw;
      best = i;
    }
  }
  return best;
}

CollaborationSpec subspec(const CollaborationSpec& spec,
                          const std::vector<int>& members) {
  CollaborationSpec sub;
  sub.batch_size = spec.batch_size;
  sub.param_count = spec.param_count;
  sub.bits_per_param = spec.bits_per_param;
  std::map<int, int> remap;
  for (int i : members) {
    remap[i] = sub.size();
    sub.peers.push_back(spec.peers[i]);
  }
  for (const auto& l : spec.links) {
    auto f = remap.find(l.from), t = remap.find(l.to);
    if (f != remap.end() && t != remap.end())
      sub.links.push_back(LinkLimit{f->second, t->second, l.bps});
  }
  return sub;
}

double canonical_u01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double simulate_averaging(const CollaborationSpec& spec, Algorithm alg,
                          int server) {
  switch (alg) {
    case Algorithm::AllReduce:
      return strategy::allreduce_round_seconds(spec);
    case Algorithm::ParameterServer: {
      if (server < 0) {
        std::vector<int> all(spec.size());
        for (int i = 0; i < spec.size(); ++i) all[i] = i;
        server = best_duplex_peer(spec, all);
      }
      return strategy::parameter_server_round_seconds(spec, server);
    }
    case Algorithm::Adaptive:
      return strategy::adaptive_round_seconds(spec);
  }
  throw std::invalid_argument("unknown algorithm");
}

namespace {

// per active-set cached timing for one algorithm
struct SetTiming {
  double compute_s = 0.0;  // batch over duty-cycled sample rate
  double comm_s = 0.0;     // averaging round
  double sample_rate = 0.0;
  bool has_compute = false;
};

SetTiming timing_for(const CollaborationSpec& spec,
                     const std::vector<int>& members, const SimConfig& cfg) {
  SetTiming out;
  CollaborationSpec sub = subspec(spec, members);
  double total_rate = 0.0;
  for (const auto& p : sub.peers)
    if (p.can_compute) total_rate += p.samples_per_sec;
  out.has_compute = total_rate > 0;
  if (!out.has_compute) return out;

  if (cfg.algorithm == Algorithm::Adaptive) {
    StrategyAssignment s = strategy::solve_strategy(sub);
    double duty_rate = 0.0;
    for (int i = 0; i < sub.size(); ++i)
      duty_rate += sub.peers[i].samples_per_sec * s.c_raw[i];
    out.sample_rate = duty_rate;
    out.compute_s = spec.batch_size / duty_rate;
    // slowest recipient's delivery rate from the returned flows
    double worst = kUnlimited;
    for (int i = 0; i < sub.size(); ++i) {
      const auto& p = sub.peers[i];
      if (!p.can_compute || p.client_mode) continue;
      double inflow = 0.0;
      for (int j = 0; j < sub.size(); ++j) inflow += s.g(j, i);
      worst = std::min(worst, inflow);
    }
    out.comm_s = std::isfinite(worst) && worst > 0
                     ? sub.payload_bits() / worst
                     : 0.0;
  } else {
    out.sample_rate = total_rate;
    out.compute_s = spec.batch_size / total_rate;
    if (cfg.algorithm == Algorithm::AllReduce) {
      out.comm_s = sub.size() > 1 ? strategy::allreduce_round_seconds(sub) : 0;
    } else {
      int server = cfg.ps_server;
      if (server >= 0) {
        // configured server may be offline; fall back to best member
        auto it = std::find(members.begin(), members.end(), server);
        server = it == members.end()
                     ? -1
                     : int(it - members.begin());
      }
      if (server < 0) {
        std::vector<int> all(sub.size());
        for (int i = 0; i < sub.size(); ++i) all[i] = i;
        server = best_duplex_peer(sub, all);
      }
      out.comm_s =
          sub.size() > 1
              ? strategy::parameter_server_round_seconds(sub, server)
              : 0.0;
    }
  }
  return out;
}

}  // namespace

SimTrace simulate_training(const CollaborationSpec& spec,
                           const ChurnTrace& trace, const SimConfig& config) {
  {
    auto violations = validate(spec);
    if (!violations.empty())
      throw std::invalid_argument("simulate_training: invalid spec: " +
                                  violations.front().field + ": " +
                                  violations.front().message);
  }
  int n = spec.size();
  std::vector<char> active(n, 1);
  std::vector<double> ready_at(n, 0.0);
  for (const auto& ev : trace.events) {
    int idx = spec.peer_index(ev.peer_id);
    if (idx < 0)
      throw std::invalid_argument("trace references unknown peer: " +
                                  ev.peer_id);
    if (ev.kind == ChurnEvent::Kind::Join) active[idx] = 0;
  }

  std::mt19937_64 rng(config.seed);
  std::map<std::vector<int>, SetTiming> cache;
  SimTrace out;
  out.horizon_s = trace.horizon_s;

  double t = 0.0;
  std::size_t ev_i = 0;
  int step = 0;
  double no_compute_since = -1.0;

  const auto apply_events_until = [&](double until) {
    while (ev_i < trace.events.size() && trace.events[ev_i].t <= until) {
      const auto& ev = trace.events[ev_i++];
      int idx = spec.peer_index(ev.peer_id);
      switch (ev.kind) {
        case ChurnEvent::Kind::Join:
          if (!active[idx]) {
            active[idx] = 1;
            ready_at[idx] = ev.t + config.catchup_s;
          }
          break;
        case ChurnEvent::Kind::Leave:
          active[idx] = 0;
          break;
        case ChurnEvent::Kind::Fail:
          break;  // transient; handled as a mid-round retry below
      }
    }
  };

  apply_events_until(0.0);
  while (t < trace.horizon_s) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (active[i] && ready_at[i] <= t) members.push_back(i);

    bool compute_ok = false;
    for (int i : members) {
      const auto& p = spec.peers[i];
      if (p.can_compute && p.samples_per_sec > 0) compute_ok = true;
    }
    if (!compute_ok) {
      if (no_compute_since < 0) no_compute_since = t;
      // jump to whatever happens next: an event or a peer finishing catch-up
      double next_t = kUnlimited;
      if (ev_i < trace.events.size())
        next_t = trace.events[ev_i].t;
      for (int i = 0; i < n; ++i)
        if (active[i] && ready_at[i] > t)
          next_t = std::min(next_t, ready_at[i]);
      if (next_t - no_compute_since > config.stall_timeout_s ||
          next_t == kUnlimited)
        throw TrainingStalled(no_compute_since + config.stall_timeout_s);
      t = next_t;
      apply_events_until(t);
      continue;
    }
    no_compute_since = -1.0;

    auto it = cache.find(members);
    if (it == cache.end()) {
      it = cache.emplace(members, timing_for(spec, members, config)).first;
      ++out.lp_solves;
    }
    const SetTiming& tm = it->second;

    double base = config.delay_parameter_updates
                      ? std::max(tm.compute_s, tm.comm_s)
                      : tm.compute_s + tm.comm_s;

    // departures and faults inside the averaging window trigger group-local
    // retries at a per-attempt cost of one plan round
    int retries = 0;
    double penalty = 0.0;
    if (tm.comm_s > 0 && members.size() > 1) {
      int m_g = config.group_size > 0
                    ? std::min<int>(config.group_size, members.size())
                    : static_cast<int>(members.size());
      groups::GroupPlan plan =
          groups::build_plan(static_cast<int>(members.size()), m_g);
      int plan_rounds = std::max(static_cast<int>(plan.rounds.size()), 1);
      for (std::size_t k = ev_i;
           k < trace.events.size() && !plan.rounds.empty(); ++k) {
        const auto& ev = trace.events[k];
        if (ev.t >= t + base) break;
        if (ev.kind == ChurnEvent::Kind::Join) continue;
        int idx = spec.peer_index(ev.peer_id);
        auto pos = std::find(members.begin(), members.end(), idx);
        if (pos == members.end()) continue;
        // group of the disrupted peer in the first plan round
        int local = static_cast<int>(pos - members.begin());
        double q_fail = 0.0;
        for (const auto& grp : plan.rounds.front()) {
          if (std::find(grp.begin(), grp.end(), local) == grp.end()) continue;
          double survive = 1.0;
          for (int g_local : grp)
            survive *= 1.0 - spec.peers[members[g_local]].failure_rate;
          q_fail = 1.0 - survive;
          break;
        }
        int attempts = 1;
        if (q_fail > 0.0) {
          double u = canonical_u01(rng);
          attempts = 1 + static_cast<int>(std::floor(std::log1p(-u) /
                                                     std::log(q_fail)));
          attempts = std::min(attempts, 10000);
        }
        retries += attempts;
        penalty += attempts * (tm.comm_s / plan_rounds);
      }
    }

    double dur = base + penalty;
    double samples = config.delay_parameter_updates ? tm.sample_rate * dur
                                                    : spec.batch_size;
    ++step;
    out.steps.push_back(StepRecord{step, t + dur, samples,
                                   static_cast<int>(members.size()), dur,
                                   retries});
    out.retries_total += retries;
    out.samples_total += samples;
    t += dur;
    apply_events_until(t);
  }
  return out;
}

double SimTrace::steps_per_hour(double t0, double t1) const {
  if (t1 <= t0) return 0.0;
  int count = 0;
  for (const auto& s : steps)
    if (s.t_complete > t0 && s.t_complete <= t1) ++count;
  return count * 3600.0 / (t1 - t0);
}

std::vector<StrategyComparison> compare_strategies(
    const CollaborationSpec& spec, const SimConfig& config) {
  std::vector<StrategyComparison> out;
  std::vector<int> all(spec.size());
  for (int i = 0; i < spec.size(); ++i) all[i] = i;
  for (Algorithm alg : {Algorithm::AllReduce, Algorithm::ParameterServer,
                        Algorithm::Adaptive}) {
    SimConfig cfg = config;
    cfg.algorithm = alg;
    SetTiming tm = timing_for(spec, all, cfg);
    StrategyComparison cmp;
    cmp.algorithm = alg;
    // round time reported from the standalone averaging model so the two
    // views of one fleet agree
    cmp.round_s = simulate_averaging(spec, alg, config.ps_server);
    double step_s = config.delay_parameter_updates
                        ? std::max(tm.compute_s, tm.comm_s)
                        : tm.compute_s + tm.comm_s;
    cmp.steps_per_hour = step_s > 0 ? 3600.0 / step_s : 0.0;
    out.push_back(cmp);
  }
  return out;
}

}  // namespace swarmplan::netsim
