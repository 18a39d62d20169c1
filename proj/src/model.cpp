// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace swarmplan {

using json = nlohmann::ordered_json;

double CollaborationSpec::link_limit(int from, int to) const {
  for (const auto& l : links)
    if (l.from == from && l.to == to) return l.bps;
  return kUnlimited;
}

void CollaborationSpec::set_link_limit(int from, int to, double bps) {
  for (auto& l : links) {
    if (l.from == from && l.to == to) {
      l.bps = bps;
      return;
    }
  }
  links.push_back(LinkLimit{from, to, bps});
}

int CollaborationSpec::peer_index(const std::string& id) const {
  for (int i = 0; i < size(); ++i)
    if (peers[i].id == id) return i;
  return -1;
}

std::vector<Violation> validate(const CollaborationSpec& spec) {
  std::vector<Violation> out;
  auto flag = [&out](int peer, const char* field, std::string msg) {
    out.push_back(Violation{peer, field, std::move(msg)});
  };

  if (spec.peers.empty()) flag(-1, "peers", "at least one peer is required");
  if (!(spec.batch_size > 0) || !std::isfinite(spec.batch_size))
    flag(-1, "batch_size", "must be positive");
  if (!(spec.param_count > 0) || !std::isfinite(spec.param_count))
    flag(-1, "param_count", "must be positive");
  if (!(spec.bits_per_param > 0) || !std::isfinite(spec.bits_per_param))
    flag(-1, "bits_per_param", "must be positive");

  double total_rate = 0.0;
  for (const auto& p : spec.peers)
    if (p.can_compute) total_rate += p.samples_per_sec;
  if (!spec.peers.empty() && total_rate <= 0.0)
    flag(-1, "peers", "no peer contributes compute throughput");

  std::set<std::string> ids;
  for (int i = 0; i < spec.size(); ++i) {
    const auto& p = spec.peers[i];
    if (p.id.empty()) flag(i, "id", "peer id must not be empty");
    if (!ids.insert(p.id).second) flag(i, "id", "duplicate peer id: " + p.id);
    if (p.samples_per_sec < 0 || !std::isfinite(p.samples_per_sec))
      flag(i, "samples_per_sec", "must be non-negative and finite");
    if (!p.can_compute && p.samples_per_sec > 0)
      flag(i, "samples_per_sec",
           "peer cannot compute but has a nonzero compute rate");
    if (!(p.download_bps > 0)) flag(i, "download_bps", "must be positive");
    if (!(p.upload_bps > 0)) flag(i, "upload_bps", "must be positive");
    if (!(p.failure_rate >= 0 && p.failure_rate < 1))
      flag(i, "failure_rate", "must lie in [0, 1)");
  }

  for (const auto& l : spec.links) {
    if (l.from < 0 || l.from >= spec.size() || l.to < 0 || l.to >= spec.size())
      flag(-1, "links", "link references an unknown peer");
    else if (l.from == l.to)
      flag(-1, "links", "self links are not allowed (" +
                            spec.peers[l.from].id + ")");
    if (!(l.bps >= 0)) flag(-1, "links", "link capacity must be non-negative");
  }
  return out;
}

namespace {

double mbps_field(const json& j, const char* key, double fallback_mbps,
                  bool required) {
  if (!j.contains(key)) {
    if (required) throw SpecParseError(std::string("missing field: ") + key);
    return fallback_mbps * kMbps;
  }
  if (!j[key].is_number())
    throw SpecParseError(std::string("field must be a number: ") + key);
  return j[key].get<double>() * kMbps;
}

}  // namespace

CollaborationSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    CollaborationSpec spec;
    spec.batch_size = j.value("batch_size", 1.0);
    if (!j.contains("param_count"))
      throw SpecParseError("missing field: param_count");
    spec.param_count = j["param_count"].get<double>();
    spec.bits_per_param = j.value("bits_per_param", 32.0);
    if (!j.contains("peers") || !j["peers"].is_array())
      throw SpecParseError("missing peers array");
    for (const auto& pj : j["peers"]) {
      PeerSpec p;
      if (!pj.contains("id")) throw SpecParseError("peer without id");
      p.id = pj["id"].get<std::string>();
      p.samples_per_sec = pj.value("samples_per_sec", 0.0);
      p.download_bps = mbps_field(pj, "download_mbps", 0.0, true);
      p.upload_bps = mbps_field(pj, "upload_mbps", 0.0, true);
      p.can_compute = pj.value("can_compute", true);
      p.client_mode = pj.value("client_mode", false);
      p.failure_rate = pj.value("failure_rate", 0.0);
      spec.peers.push_back(std::move(p));
    }
    if (j.contains("links")) {
      for (const auto& lj : j["links"]) {
        LinkLimit l;
        std::string from = lj.at("from").get<std::string>();
        std::string to = lj.at("to").get<std::string>();
        l.from = spec.peer_index(from);
        l.to = spec.peer_index(to);
        if (l.from < 0 || l.to < 0)
          throw SpecParseError("link references unknown peer: " + from + "->" +
                               to);
        l.bps = mbps_field(lj, "mbps", 0.0, true);
        spec.links.push_back(l);
      }
    }
    return spec;
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("bad collaboration spec: ") + e.what());
  }
}

std::string spec_to_json(const CollaborationSpec& spec) {
  json j;
  j["batch_size"] = spec.batch_size;
  j["param_count"] = spec.param_count;
  j["bits_per_param"] = spec.bits_per_param;
  j["peers"] = json::array();
  for (const auto& p : spec.peers) {
    json pj;
    pj["id"] = p.id;
    pj["samples_per_sec"] = p.samples_per_sec;
    pj["download_mbps"] = p.download_bps / kMbps;
    pj["upload_mbps"] = p.upload_bps / kMbps;
    pj["can_compute"] = p.can_compute;
    pj["client_mode"] = p.client_mode;
    pj["failure_rate"] = p.failure_rate;
    j["peers"].push_back(std::move(pj));
  }
  if (!spec.links.empty()) {
    j["links"] = json::array();
    for (const auto& l : spec.links) {
      json lj;
      lj["from"] = spec.peers[l.from].id;
      lj["to"] = spec.peers[l.to].id;
      lj["mbps"] = l.bps / kMbps;
      j["links"].push_back(std::move(lj));
    }
  }
  return j.dump(2);
}

std::string assignment_to_json(const CollaborationSpec& spec,
                               const StrategyAssignment& s) {
  json j;
  j["steps_per_sec"] = s.xi;
  j["lp_iterations"] = s.lp_iterations;
  j["peers"] = json::array();
  int n = spec.size();
  for (int i = 0; i < n; ++i) {
    json pj;
    pj["id"] = spec.peers[i].id;
    pj["compute"] = s.compute[i];
    pj["compute_fraction"] = s.c_raw[i];
    pj["aggregation_fraction"] = s.fractions[i];
    j["peers"].push_back(std::move(pj));
  }
  auto matrix = [n](const Eigen::MatrixXd& mat) {
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
      json row = json::array();
      for (int k = 0; k < n; ++k) row.push_back(mat(i, k));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["gradient_flow_bps"] = matrix(s.a);
  j["partition_flow_bps"] = matrix(s.g);
  return j.dump(2);
}

}  // namespace swarmplan
