// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "swarmplan/model.hpp"

using namespace swarmplan;

namespace {

CollaborationSpec small_spec() {
  CollaborationSpec spec;
  spec.batch_size = 4.0;
  spec.param_count = 1e6;
  spec.bits_per_param = 32.0;
  PeerSpec a;
  a.id = "a";
  a.samples_per_sec = 1.0;
  a.download_bps = 100 * kMbps;
  a.upload_bps = 50 * kMbps;
  PeerSpec b = a;
  b.id = "b";
  b.samples_per_sec = 2.0;
  spec.peers = {a, b};
  return spec;
}

bool has_violation(const std::vector<Violation>& v, int peer,
                   const std::string& field) {
  for (const auto& item : v)
    if (item.peer == peer && item.field == field) return true;
  return false;
}

}  // namespace

TEST_CASE("validate accepts a well-formed collaboration") {
  CHECK(validate(small_spec()).empty());
}

TEST_CASE("validate flags collaboration-level problems") {
  CollaborationSpec spec = small_spec();
  spec.batch_size = 0.0;
  spec.param_count = -1.0;
  spec.bits_per_param = std::numeric_limits<double>::infinity();
  auto v = validate(spec);
  CHECK(has_violation(v, -1, "batch_size"));
  CHECK(has_violation(v, -1, "param_count"));
  CHECK(has_violation(v, -1, "bits_per_param"));

  CollaborationSpec empty;
  empty.param_count = 1e6;
  CHECK(has_violation(validate(empty), -1, "peers"));
}

TEST_CASE("validate requires some compute throughput") {
  CollaborationSpec spec = small_spec();
  for (auto& p : spec.peers) {
    p.samples_per_sec = 0.0;
    p.can_compute = false;
  }
  CHECK(has_violation(validate(spec), -1, "peers"));
}

TEST_CASE("validate flags per-peer problems with the peer index") {
  CollaborationSpec spec = small_spec();
  spec.peers[1].id = "a";  // duplicate
  auto v = validate(spec);
  CHECK(has_violation(v, 1, "id"));

  spec = small_spec();
  spec.peers[0].samples_per_sec = -1.0;
  spec.peers[1].download_bps = 0.0;
  v = validate(spec);
  CHECK(has_violation(v, 0, "samples_per_sec"));
  CHECK(has_violation(v, 1, "download_bps"));

  spec = small_spec();
  spec.peers[0].can_compute = false;  // but samples_per_sec stays positive
  CHECK(has_violation(validate(spec), 0, "samples_per_sec"));

  spec = small_spec();
  spec.peers[1].failure_rate = 1.0;
  CHECK(has_violation(validate(spec), 1, "failure_rate"));
  spec.peers[1].failure_rate = -0.1;
  CHECK(has_violation(validate(spec), 1, "failure_rate"));
}

TEST_CASE("validate flags malformed links") {
  CollaborationSpec spec = small_spec();
  spec.links.push_back({0, 5, 10 * kMbps});
  CHECK(has_violation(validate(spec), -1, "links"));

  spec = small_spec();
  spec.links.push_back({1, 1, 10 * kMbps});
  CHECK(has_violation(validate(spec), -1, "links"));

  spec = small_spec();
  spec.links.push_back({0, 1, -3.0});
  CHECK(has_violation(validate(spec), -1, "links"));
}

TEST_CASE("validate reports collaboration problems before peer problems") {
  CollaborationSpec spec = small_spec();
  spec.batch_size = -1.0;
  spec.peers[1].upload_bps = 0.0;
  auto v = validate(spec);
  REQUIRE(v.size() >= 2);
  // same input, same ordered report every time
  auto v2 = validate(spec);
  REQUIRE(v.size() == v2.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i].peer == v2[i].peer);
    CHECK(v[i].field == v2[i].field);
  }
  std::size_t first_peer = v.size(), last_collab = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].peer >= 0) first_peer = std::min(first_peer, i);
    if (v[i].peer < 0) last_collab = std::max(last_collab, i);
  }
  CHECK(last_collab < first_peer);
}

TEST_CASE("link limits default to unlimited and can be overwritten") {
  CollaborationSpec spec = small_spec();
  CHECK(spec.link_limit(0, 1) == kUnlimited);
  spec.set_link_limit(0, 1, 7 * kMbps);
  CHECK(spec.link_limit(0, 1) == doctest::Approx(7e6));
  CHECK(spec.link_limit(1, 0) == kUnlimited);  // directional
  spec.set_link_limit(0, 1, 9 * kMbps);
  CHECK(spec.link_limit(0, 1) == doctest::Approx(9e6));
  CHECK(spec.links.size() == 1);
}

TEST_CASE("peer_index finds peers by id") {
  CollaborationSpec spec = small_spec();
  CHECK(spec.peer_index("a") == 0);
  CHECK(spec.peer_index("b") == 1);
  CHECK(spec.peer_index("zzz") == -1);
}

TEST_CASE("payload_bits multiplies parameters by their width") {
  CollaborationSpec spec = small_spec();
  spec.param_count = 25.6e6;
  spec.bits_per_param = 16.0;
  CHECK(spec.payload_bits() == doctest::Approx(4.096e8));
}

TEST_CASE("spec_from_json converts megabits to bits per second") {
  const char* text = R"({
    "batch_size": 2.0,
    "param_count": 1000.0,
    "peers": [
      {"id": "x", "samples_per_sec": 1.5,
       "download_mbps": 100.0, "upload_mbps": 25.0}
    ]
  })";
  CollaborationSpec spec = spec_from_json(text);
  REQUIRE(spec.size() == 1);
  CHECK(spec.peers[0].download_bps == doctest::Approx(100e6));
  CHECK(spec.peers[0].upload_bps == doctest::Approx(25e6));
  // defaults
  CHECK(spec.bits_per_param == doctest::Approx(32.0));
  CHECK(spec.peers[0].can_compute);
  CHECK(!spec.peers[0].client_mode);
  CHECK(spec.peers[0].failure_rate == doctest::Approx(0.0));
}

TEST_CASE("spec_from_json resolves links by peer id") {
  const char* text = R"({
    "param_count": 1000.0,
    "peers": [
      {"id": "x", "samples_per_sec": 1.0,
       "download_mbps": 10.0, "upload_mbps": 10.0},
      {"id": "y", "samples_per_sec": 1.0,
       "download_mbps": 10.0, "upload_mbps": 10.0}
    ],
    "links": [{"from": "y", "to": "x", "mbps": 3.0}]
  })";
  CollaborationSpec spec = spec_from_json(text);
  CHECK(spec.link_limit(1, 0) == doctest::Approx(3e6));
  CHECK(spec.link_limit(0, 1) == kUnlimited);
}

TEST_CASE("spec_from_json rejects malformed input") {
  CHECK_THROWS_AS(spec_from_json("not json at all"), SpecParseError);
  CHECK_THROWS_AS(spec_from_json("{}"), SpecParseError);  // no param_count
  CHECK_THROWS_AS(spec_from_json(R"({"param_count": 1, "peers": 5})"),
                  SpecParseError);
  CHECK_THROWS_AS(
      spec_from_json(
          R"({"param_count": 1, "peers": [{"samples_per_sec": 1}]})"),
      SpecParseError);  // peer without id
  CHECK_THROWS_AS(
      spec_from_json(
          R"({"param_count": 1, "peers": [{"id": "x", "download_mbps": 1,
              "upload_mbps": 1}],
              "links": [{"from": "x", "to": "ghost", "mbps": 1}]})"),
      SpecParseError);
  CHECK_THROWS_AS(
      spec_from_json(
          R"({"param_count": 1, "peers": [{"id": "x",
              "download_mbps": "fast", "upload_mbps": 1}]})"),
      SpecParseError);
}

TEST_CASE("spec JSON round trip preserves every field") {
  CollaborationSpec spec = small_spec();
  spec.peers[0].client_mode = true;
  spec.peers[0].can_compute = true;
  spec.peers[1].failure_rate = 0.25;
  spec.set_link_limit(0, 1, 12.5 * kMbps);
  CollaborationSpec back = spec_from_json(spec_to_json(spec));
  REQUIRE(back.size() == spec.size());
  CHECK(back.batch_size == doctest::Approx(spec.batch_size));
  CHECK(back.param_count == doctest::Approx(spec.param_count));
  CHECK(back.bits_per_param == doctest::Approx(spec.bits_per_param));
  for (int i = 0; i < spec.size(); ++i) {
    CHECK(back.peers[i].id == spec.peers[i].id);
    CHECK(back.peers[i].samples_per_sec ==
          doctest::Approx(spec.peers[i].samples_per_sec));
    CHECK(back.peers[i].download_bps ==
          doctest::Approx(spec.peers[i].download_bps));
    CHECK(back.peers[i].upload_bps ==
          doctest::Approx(spec.peers[i].upload_bps));
    CHECK(back.peers[i].can_compute == spec.peers[i].can_compute);
    CHECK(back.peers[i].client_mode == spec.peers[i].client_mode);
    CHECK(back.peers[i].failure_rate ==
          doctest::Approx(spec.peers[i].failure_rate));
  }
  REQUIRE(back.links.size() == 1);
  CHECK(back.link_limit(0, 1) == doctest::Approx(12.5e6));
  // serialization itself is deterministic
  CHECK(spec_to_json(spec) == spec_to_json(spec));
}
