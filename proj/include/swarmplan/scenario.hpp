// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "swarmplan/log.hpp"
#include "swarmplan/model.hpp"
#include "swarmplan/netsim.hpp"

namespace swarmplan {

// On-disk scenario: collaboration spec plus optional churn trace and
// simulation settings.
struct Scenario {
  std::string name;
  CollaborationSpec collaboration;
  std::optional<netsim::ChurnTrace> trace;
  netsim::SimConfig sim;
};

Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);  // SpecParseError on failure

}  // namespace swarmplan
