// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace swarmplan {

using json = nlohmann::ordered_json;

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("invalid scenario JSON: ") + e.what());
  }
  Scenario sc;
  try {
    sc.name = j.value("name", std::string("unnamed"));
    if (!j.contains("collaboration"))
      throw SpecParseError("scenario is missing the collaboration block");
    sc.collaboration = spec_from_json(j["collaboration"].dump());
    if (j.contains("trace") && !j["trace"].is_null())
      sc.trace = netsim::trace_from_json(j["trace"].dump());
    if (j.contains("sim") && !j["sim"].is_null()) {
      const json& s = j["sim"];
      if (s.contains("algorithm"))
        sc.sim.algorithm =
            netsim::algorithm_from_name(s["algorithm"].get<std::string>());
      sc.sim.delay_parameter_updates =
          s.value("delay_parameter_updates", sc.sim.delay_parameter_updates);
      sc.sim.refresh_s = s.value("refresh_s", sc.sim.refresh_s);
      sc.sim.catchup_s = s.value("catchup_s", sc.sim.catchup_s);
      sc.sim.stall_timeout_s = s.value("stall_timeout_s", sc.sim.stall_timeout_s);
      sc.sim.group_size = s.value("group_size", sc.sim.group_size);
      sc.sim.ps_server = s.value("ps_server", sc.sim.ps_server);
      sc.sim.seed = s.value("seed", sc.sim.seed);
    }
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("bad scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("SWARM_PLANNER_LOG");
    if (!env) return LogLevel::Off;
    std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Off;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << "\n";
}

}  // namespace swarmplan
