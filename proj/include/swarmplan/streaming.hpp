// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan::streaming {

class ShardUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SourceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ShardInfo {
  std::string id;
  long n_examples = 0;
  std::string uri;
};

struct SourceSpec {
  std::string id;
  double weight = 1.0;
  std::vector<ShardInfo> shards;
};

struct ShardCatalog {
  std::vector<SourceSpec> sources;
};

ShardCatalog catalog_from_json(const std::string& text);
std::string catalog_to_json(const ShardCatalog& catalog);

// Replica registry shared by the swarm. Implementations must be safe for
// concurrent callers; adjust returns the post-update count.
class MetadataStore {
 public:
  virtual ~MetadataStore() = default;
  virtual int adjust(const std::string& shard_id, int delta) = 0;
  virtual int count(const std::string& shard_id) const = 0;
  virtual std::vector<std::pair<std::string, int>> snapshot() const = 0;
};

class InMemoryMetadataStore : public MetadataStore {
 public:
  int adjust(const std::string& shard_id, int delta) override;
  int count(const std::string& shard_id) const override;
  std::vector<std::pair<std::string, int>> snapshot() const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, int> counts_;
};

// Next shard for a peer to fetch: least replicated among `candidates`,
// uniform among ties. Throws std::invalid_argument on an empty candidate set.
std::string choose_next_shard(const MetadataStore& store,
                              const std::vector<std::string>& candidates,
                              std::mt19937_64& rng);

struct LocalShard {
  std::string id;
  double fetched_at = 0.0;
};

// Which local shard to drop when the cache is full: the most replicated,
// oldest fetch among ties. Returns nullopt when under capacity.
std::optional<std::string> evict_if_full(const MetadataStore& store,
                                         const std::vector<LocalShard>& local,
                                         std::size_t capacity);

struct Record {
  std::string payload;
  std::string source_id;
  std::string shard_id;
  long index = 0;  // position within the shard
};

// Supplies shard contents. FileShardStore treats uri as a path to a
// newline-delimited text file.
class ShardStore {
 public:
  virtual ~ShardStore() = default;
  virtual std::vector<std::string> read_shard(const ShardInfo& shard) = 0;
};

class FileShardStore : public ShardStore {
 public:
  std::vector<std::string> read_shard(const ShardInfo& shard) override;
};

class InMemoryShardStore : public ShardStore {
 public:
  void put(const std::string& shard_id, std::vector<std::string> rows);
  std::vector<std::string> read_shard(const ShardInfo& shard) override;

 private:
  std::map<std::string, std::vector<std::string>> rows_;
};

struct StreamConfig {
  std::size_t buffer_capacity = 10000;
  unsigned long seed = 1;
};

// Weighted mixture over sources with a shuffle buffer on top. The buffer is
// filled at construction; each draw emits a uniformly chosen buffered record
// and backfills it by picking a source by weight (renormalized over the
// non-exhausted sources) and pulling that source's next record. Shard
// availability is checked against the metadata store when one is attached:
// entering a shard whose replica count is zero raises ShardUnavailable.
class ShuffledStream {
 public:
  ShuffledStream(const ShardCatalog& catalog, ShardStore& store,
                 StreamConfig config, const MetadataStore* replicas = nullptr);

  std::optional<Record> next();
  // Up to k records; throws SourceExhausted when nothing is left at all.
  std::vector<Record> next_batch(std::size_t k);

  std::size_t buffered() const { return buffer_.size(); }

 private:
  struct Cursor {
    SourceSpec source;
    std::size_t shard = 0;
    std::size_t row = 0;
    std::vector<std::string> rows;
    bool loaded = false;
    bool done = false;
  };

  bool pull_into_buffer();
  std::optional<Record> cursor_next(Cursor& cur);

  ShardStore& store_;
  const MetadataStore* replicas_;
  StreamConfig config_;
  std::vector<Cursor> cursors_;
  std::vector<Record> buffer_;
  std::mt19937_64 rng_;
};

// Uniform integer in [0, n) from the engine's raw 64-bit output; avoids the
// unspecified std::uniform_int_distribution mapping so streams reproduce
// across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

}  // namespace swarmplan::streaming
