#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace srs {

// Opaque stratum identifier with a total, deterministic order. Backed by a
// string so ids that come out of data files ("US|co") and numeric ids from
// generators share one representation.
struct StratumId {
  std::string value;

  StratumId() = default;
  explicit StratumId(std::string v) : value(std::move(v)) {}
  static StratumId of(std::uint64_t n) { return StratumId(std::to_string(n)); }

  auto operator<=>(const StratumId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const StratumId& id) {
  return os << id.value;
}

// Single-pass running moments for one stratum (Welford update). The spread is
// the population variance: m2 / count, divisor n, not n - 1. Everything
// downstream (allocation weights, variance evaluation) relies on that
// convention.
struct StratumStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the running mean

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
    if (m2 < 0.0) m2 = 0.0;
  }

  double variance() const {
    return count == 0 ? 0.0 : m2 / static_cast<double>(count);
  }
  double stddev() const { return std::sqrt(variance()); }

  // n_i * sigma_i, the weight this stratum carries in allocation decisions.
  double weight() const { return static_cast<double>(count) * stddev(); }
};

// Combines moments of two disjoint observation sets.
StratumStats merge(const StratumStats& a, const StratumStats& b);

using StatsMap = std::map<StratumId, StratumStats>;

// A stream element tagged with its sampling key, uniform in the open (0,1).
struct WeightedRecord {
  StratumId stratum;
  double value = 0.0;
  double key = 0.0;
};

struct Record {
  StratumId stratum;
  double value = 0.0;
};

using Dataset = std::vector<Record>;
using Minibatch = std::vector<Record>;

// Per-stratum sample sizes under a total budget. Entries are real-valued for
// solver output and integral after integerization.
struct Allocation {
  std::map<StratumId, double> entries;
  double budget = 0.0;

  double total() const {
    double t = 0.0;
    for (const auto& [id, v] : entries) t += v;
    return t;
  }

  double at(const StratumId& id) const {
    auto it = entries.find(id);
    return it == entries.end() ? 0.0 : it->second;
  }
};

}  // namespace srs
