// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace swarmplan {

// Minimal stderr logger, level from SWARM_PLANNER_LOG (off|info|debug).
enum class LogLevel { Off = 0, Info = 1, Debug = 2 };
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace swarmplan
