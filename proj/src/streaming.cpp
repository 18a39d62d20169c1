// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/streaming.hpp"

#include <algorithm>
#include <climits>
#include <fstream>

#include <json.hpp>

namespace swarmplan::streaming {

using json = nlohmann::ordered_json;

ShardCatalog catalog_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid catalog JSON: ") +
                                e.what());
  }
  ShardCatalog catalog;
  try {
    for (const auto& sj : j.at("sources")) {
      SourceSpec src;
      src.id = sj.at("id").get<std::string>();
      src.weight = sj.value("weight", 1.0);
      if (!(src.weight >= 0))
        throw std::invalid_argument("source weight must be non-negative: " +
                                    src.id);
      if (sj.contains("shards")) {
        for (const auto& shj : sj["shards"]) {
          ShardInfo sh;
          sh.id = shj.at("id").get<std::string>();
          sh.n_examples = shj.value("n_examples", 0L);
          sh.uri = shj.value("uri", std::string());
          src.shards.push_back(std::move(sh));
        }
      }
      catalog.sources.push_back(std::move(src));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad catalog: ") + e.what());
  }
  return catalog;
}

std::string catalog_to_json(const ShardCatalog& catalog) {
  json j;
  j["sources"] = json::array();
  for (const auto& src : catalog.sources) {
    json sj;
    sj["id"] = src.id;
    sj["weight"] = src.weight;
    sj["shards"] = json::array();
    for (const auto& sh : src.shards) {
      json shj;
      shj["id"] = sh.id;
      shj["n_examples"] = sh.n_examples;
      shj["uri"] = sh.uri;
      sj["shards"].push_back(std::move(shj));
    }
    j["sources"].push_back(std::move(sj));
  }
  return j.dump(2);
}

int InMemoryMetadataStore::adjust(const std::string& shard_id, int delta) {
  std::lock_guard<std::mutex> lock(mu_);
  int& c = counts_[shard_id];
  c += delta;
  if (c < 0) c = 0;
  return c;
}

int InMemoryMetadataStore::count(const std::string& shard_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = counts_.find(shard_id);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, int>> InMemoryMetadataStore::snapshot()
    const {
  std::lock_guard<std::mutex> lock(mu_);
  return {counts_.begin(), counts_.end()};
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be > 0");
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

std::string choose_next_shard(const MetadataStore& store,
                              const std::vector<std::string>& candidates,
                              std::mt19937_64& rng) {
  if (candidates.empty())
    throw std::invalid_argument("choose_next_shard: no candidates");
  int best = INT_MAX;
  std::vector<const std::string*> ties;
  for (const auto& id : candidates) {
    int c = store.count(id);
    if (c < best) {
      best = c;
      ties.clear();
    }
    if (c == best) ties.push_back(&id);
  }
  return *ties[uniform_below(rng, ties.size())];
}

std::optional<std::string> evict_if_full(const MetadataStore& store,
                                         const std::vector<LocalShard>& local,
                                         std::size_t capacity) {
  if (local.size() < capacity) return std::nullopt;
  const LocalShard* victim = nullptr;
  int victim_count = -1;
  for (const auto& sh : local) {
    int c = store.count(sh.id);
    if (c > victim_count ||
        (c == victim_count && victim && sh.fetched_at < victim->fetched_at)) {
      victim = &sh;
      victim_count = c;
    }
  }
  if (!victim) return std::nullopt;
  return victim->id;
}

std::vector<std::string> FileShardStore::read_shard(const ShardInfo& shard) {
  std::ifstream in(shard.uri);
  if (!in)
    throw ShardUnavailable("cannot open shard file: " + shard.uri);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(line);
  return rows;
}

void InMemoryShardStore::put(const std::string& shard_id,
                             std::vector<std::string> rows) {
  rows_[shard_id] = std::move(rows);
}

std::vector<std::string> InMemoryShardStore::read_shard(
    const ShardInfo& shard) {
  auto it = rows_.find(shard.id);
  if (it == rows_.end())
    throw ShardUnavailable("shard has no stored rows: " + shard.id);
  return it->second;
}

ShuffledStream::ShuffledStream(const ShardCatalog& catalog, ShardStore& store,
                               StreamConfig config,
                               const MetadataStore* replicas)
    : store_(store), replicas_(replicas), config_(config), rng_(config.seed) {
  if (config_.buffer_capacity == 0)
    throw std::invalid_argument("buffer capacity must be positive");
  for (const auto& src : catalog.sources) {
    Cursor cur;
    cur.source = src;
    cur.done = src.shards.empty();
    cursors_.push_back(std::move(cur));
  }
  buffer_.reserve(config_.buffer_capacity);
  while (buffer_.size() < config_.buffer_capacity && pull_into_buffer()) {
  }
}

std::optional<Record> ShuffledStream::cursor_next(Cursor& cur) {
  while (!cur.done) {
    if (!cur.loaded) {
      const ShardInfo& sh = cur.source.shards[cur.shard];
      if (replicas_ && replicas_->count(sh.id) <= 0)
        throw ShardUnavailable("no replica holds shard " + sh.id +
                               " of source " + cur.source.id);
      cur.rows = store_.read_shard(sh);
      cur.row = 0;
      cur.loaded = true;
    }
    if (cur.row < cur.rows.size()) {
      Record rec;
      rec.payload = cur.rows[cur.row];
      rec.source_id = cur.source.id;
      rec.shard_id = cur.source.shards[cur.shard].id;
      rec.index = static_cast<long>(cur.row);
      ++cur.row;
      return rec;
    }
    cur.loaded = false;
    if (++cur.shard >= cur.source.shards.size()) cur.done = true;
  }
  return std::nullopt;
}

bool ShuffledStream::pull_into_buffer() {
  // weighted pick among sources that still have data, renormalized each draw
  for (;;) {
    double total = 0.0;
    for (const auto& cur : cursors_)
      if (!cur.done) total += cur.source.weight;
    if (total <= 0.0) return false;
    double u = double(rng_() >> 11) * 0x1.0p-53 * total;
    Cursor* pick = nullptr;
    for (auto& cur : cursors_) {
      if (cur.done) continue;
      u -= cur.source.weight;
      pick = &cur;
      if (u < 0) break;
    }
    auto rec = cursor_next(*pick);
    if (rec) {
      buffer_.push_back(std::move(*rec));
      return true;
    }
    // source ran dry exactly at the shard boundary; try again
  }
}

std::optional<Record> ShuffledStream::next() {
  if (buffer_.empty()) return std::nullopt;
  std::size_t slot = uniform_below(rng_, buffer_.size());
  Record out = std::move(buffer_[slot]);
  buffer_[slot] = std::move(buffer_.back());
  buffer_.pop_back();
  pull_into_buffer();
  return out;
}

std::vector<Record> ShuffledStream::next_batch(std::size_t k) {
  std::vector<Record> out;
  out.reserve(k);
  while (out.size() < k) {
    auto rec = next();
    if (!rec) break;
    out.push_back(std::move(*rec));
  }
  if (out.empty() && k > 0)
    throw SourceExhausted("all shards consumed and the buffer is empty");
  return out;
}

}  // namespace swarmplan::streaming
