#pragma once

#include <cstdint>

#include "srs/random.hpp"
#include "srs/sample.hpp"
#include "srs/types.hpp"

namespace srs {

// Common surface for the streaming samplers: feed minibatches, snapshot the
// current stratified sample (with stats) at boundaries.
class StreamSampler {
 public:
  virtual ~StreamSampler() = default;
  virtual void process(const Minibatch& batch) = 0;
  virtual StratifiedSample snapshot() const = 0;
  virtual const StatsMap& stats() const = 0;
};

// Locally variance-optimal streaming stratified sampler. The first M
// elements are loaded verbatim; afterwards an element enters its stratum only
// when its key clears the stratum threshold d, and every admission is paid
// for by a variance-optimal eviction (single-element rule for one admission,
// the full reduction solve for a batch of them).
class SVoilaSampler : public StreamSampler {
 public:
  SVoilaSampler(std::size_t budget, std::uint64_t seed);

  void process(const Minibatch& batch) override;
  void process(const Record& record);

  bool initialized() const { return sample_.total_size() >= budget_; }
  std::size_t budget() const { return budget_; }
  const StratifiedSample& sample() const { return sample_; }
  StratifiedSample snapshot() const override { return sample_; }
  const StatsMap& stats() const override { return sample_.stats; }

 private:
  void evict_one();
  void evict_to_targets(const Allocation& targets);

  StratifiedSample sample_;
  std::size_t budget_;
  std::size_t stored_ = 0;  // fill-phase progress; stays at budget afterwards
  Rng rng_;
};

// Streaming baseline with uniform allocation: admissions use the same key
// thresholds, and every minibatch boundary trims strata above their equal
// (recursively redistributed) share.
class SSUnifSampler : public StreamSampler {
 public:
  SSUnifSampler(std::size_t budget, std::uint64_t seed);

  void process(const Minibatch& batch) override;
  void process(const Record& record);

  StratifiedSample snapshot() const override { return sample_; }
  const StatsMap& stats() const override { return sample_.stats; }
  const StratifiedSample& sample() const { return sample_; }

 private:
  StratifiedSample sample_;
  std::size_t budget_;
  Rng rng_;
};

// Plain bottom-k reservoir over the whole stream: keeps the M smallest-keyed
// elements regardless of stratum.
class ReservoirSampler : public StreamSampler {
 public:
  ReservoirSampler(std::size_t budget, std::uint64_t seed);

  void process(const Minibatch& batch) override;
  void process(const Record& record);

  StratifiedSample snapshot() const override;
  const StatsMap& stats() const override { return stats_; }
  const PerStratumSample& pool() const { return pool_; }

 private:
  PerStratumSample pool_;  // single global store ordered by key
  StatsMap stats_;
  std::size_t budget_;
  Rng rng_;
};

}  // namespace srs
