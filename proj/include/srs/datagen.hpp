#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srs/random.hpp"
#include "srs/types.hpp"

namespace srs {

// How a source groups records into minibatches: a fixed count, or runs of
// equal values in a bucket column (e.g. one day of data per batch).
struct BatchSpec {
  std::size_t fixed_size = 1;
  std::string bucket_column;

  bool bucketed() const { return !bucket_column.empty(); }
};

// A replayable record source: next_batch() until empty, reset() to replay.
// Two passes with the same construction yield identical sequences.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual std::optional<Minibatch> next_batch() = 0;
  virtual void reset() = 0;
};

Dataset read_all(StreamSource& source);
Dataset read_prefix(StreamSource& source, std::size_t count);

// Columns that form the stratum id (joined with '|') and the value column.
struct CsvSchema {
  std::vector<std::string> stratum_columns;
  std::string value_column;
};

// Replays a CSV file in row order. The file is parsed once up front;
// malformed rows raise ParseError with their line number, absent columns
// raise MissingColumn.
class CsvReplaySource : public StreamSource {
 public:
  CsvReplaySource(const std::string& path, CsvSchema schema, BatchSpec batch);

  std::optional<Minibatch> next_batch() override;
  void reset() override { position_ = 0; }

  std::size_t record_count() const { return records_.size(); }

 private:
  std::vector<Record> records_;
  std::vector<std::string> buckets_;  // parallel to records_ in bucket mode
  BatchSpec batch_;
  std::size_t position_ = 0;
};

// 20-strata-by-default Gaussian stream with one planted change: records
// round-robin across strata, values ~ Normal(mean, sigma_j), and the chosen
// stratum switches to changed_sigma from record index change_at on.
struct SyntheticConfig {
  std::uint64_t num_strata = 20;
  double base_sigma = 1.0;
  std::uint64_t changed_stratum = 12;  // 1-based
  double changed_sigma = 20.0;
  std::uint64_t change_at = 10000;
  std::uint64_t total_records = 50000;
  double mean = 1.0;
};

class SyntheticSource : public StreamSource {
 public:
  SyntheticSource(SyntheticConfig config, std::uint64_t seed,
                  std::size_t batch_size);

  std::optional<Minibatch> next_batch() override;
  void reset() override;

 private:
  SyntheticConfig config_;
  std::uint64_t seed_;
  std::size_t batch_size_;
  std::uint64_t position_ = 0;
  Rng rng_;
};

// The hard case for streaming samplers: r strata whose spreads are identical
// and tiny, then one closing element that blows up stratum 1's spread.
// Stratum i emits one copy of i+eps followed by alpha-1 copies of i, with
// eps = 1/(r-1); the final element is 2-eps in stratum 1. Deterministic.
class AdversarialSource : public StreamSource {
 public:
  AdversarialSource(std::uint64_t num_strata, std::uint64_t alpha,
                    std::size_t batch_size);

  std::optional<Minibatch> next_batch() override;
  void reset() override { position_ = 0; }

  std::uint64_t record_count() const { return num_strata_ * alpha_ + 1; }

 private:
  Record record_at(std::uint64_t index) const;

  std::uint64_t num_strata_;
  std::uint64_t alpha_;
  std::size_t batch_size_;
  std::uint64_t position_ = 0;
};

}  // namespace srs
