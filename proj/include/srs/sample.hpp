#pragma once

#include <cassert>
#include <cstddef>
#include <map>
#include <set>
#include <utility>

#include "srs/errors.hpp"
#include "srs/types.hpp"

namespace srs {

// One stratum's sample, ordered by key: O(log s) insert and delete-max.
// All retained keys stay at or below the eviction threshold d, which only
// ever moves down. Equal keys (a measure-zero event that replayed fixtures
// can still produce) are kept in arrival order and the most recent arrival
// counts as the largest.
class PerStratumSample {
 public:
  PerStratumSample() = default;
  explicit PerStratumSample(StratumId id) : stratum_(std::move(id)) {}

  const StratumId& stratum() const { return stratum_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  double threshold() const { return threshold_; }
  bool admits(double key) const { return key <= threshold_; }

  void insert(WeightedRecord rec) {
    assert(rec.key <= threshold_);
    records_.insert(std::move(rec));
  }

  WeightedRecord pop_largest() {
    if (records_.empty()) throw NothingToEvict("stratum sample is empty");
    auto it = std::prev(records_.end());
    WeightedRecord rec = *it;
    records_.erase(it);
    return rec;
  }

  const WeightedRecord& largest() const {
    if (records_.empty()) throw NothingToEvict("stratum sample is empty");
    return *std::prev(records_.end());
  }

  void lower_threshold(double d) {
    assert(d <= threshold_);
    threshold_ = d;
  }

  double value_sum() const {
    double s = 0.0;
    for (const auto& r : records_) s += r.value;
    return s;
  }

  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

 private:
  struct KeyLess {
    bool operator()(const WeightedRecord& a, const WeightedRecord& b) const {
      return a.key < b.key;
    }
  };

  StratumId stratum_;
  double threshold_ = 1.0;
  std::multiset<WeightedRecord, KeyLess> records_;
};

// A full stratified sample: per-stratum stores plus the running statistics
// of everything observed, under a total budget of M records.
struct StratifiedSample {
  std::map<StratumId, PerStratumSample> samples;
  StatsMap stats;
  std::size_t budget = 0;

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [id, s] : samples) n += s.size();
    return n;
  }

  std::map<StratumId, double> sizes() const {
    std::map<StratumId, double> out;
    for (const auto& [id, s] : samples) out[id] = static_cast<double>(s.size());
    return out;
  }
};

}  // namespace srs
