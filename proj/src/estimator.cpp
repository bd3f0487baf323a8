#include "srs/estimator.hpp"

#include <cmath>

#include "srs/errors.hpp"

namespace srs {

double estimate_mean(const StratifiedSample& sample,
                     const std::optional<std::set<StratumId>>& subset) {
  double weighted = 0.0;
  double population = 0.0;
  for (const auto& [id, st] : sample.stats) {
    if (subset && !subset->count(id)) continue;
    if (st.count == 0) continue;
    const double n = static_cast<double>(st.count);
    auto it = sample.samples.find(id);
    const std::size_t s = it == sample.samples.end() ? 0 : it->second.size();
    double stratum_mean;
    if (s > 0) {
      stratum_mean = it->second.value_sum() / static_cast<double>(s);
    } else if (st.stddev() == 0.0) {
      stratum_mean = st.mean;  // all values equal; the stats mean is exact
    } else {
      throw EmptyScopeStratum("stratum " + id.value +
                              " is in scope but has no sample");
    }
    weighted += n * stratum_mean;
    population += n;
  }
  if (population == 0.0) {
    throw EmptyScopeStratum("no observed stratum in scope");
  }
  return weighted / population;
}

VarianceReport variance_of_estimate(const StatsMap& stats,
                                    const std::map<StratumId, double>& sizes) {
  VarianceReport report;
  double n_total = 0.0;
  double sizes_total = 0.0;
  for (const auto& [id, st] : stats) n_total += static_cast<double>(st.count);
  for (const auto& [id, st] : stats) {
    const double n = static_cast<double>(st.count);
    const double var = st.variance();
    auto it = sizes.find(id);
    const double s = it == sizes.end() ? 0.0 : it->second;
    sizes_total += s;
    double term = 0.0;
    if (n > 0.0 && var > 0.0) {
      if (s <= 0.0) {
        throw UndefinedVariance("stratum " + id.value +
                                " has positive weight but no sample");
      }
      term = n * (n - s) * var / s;
    }
    report.per_stratum_terms[id] = term;
  }
  report.used_budget = static_cast<std::int64_t>(std::llround(sizes_total));
  if (n_total == 0.0) return report;
  double sum = 0.0;
  for (auto& [id, term] : report.per_stratum_terms) {
    term /= n_total * n_total;
    sum += term;
  }
  report.total_variance = sum;
  return report;
}

double relative_error(double approx, double exact) {
  if (exact == 0.0) throw ZeroExact("exact value is zero");
  return std::abs(approx - exact) / std::abs(exact);
}

double exact_mean(const Dataset& dataset,
                  const std::optional<std::set<StratumId>>& subset) {
  double sum = 0.0;
  std::uint64_t count = 0;
  for (const auto& rec : dataset) {
    if (subset && !subset->count(rec.stratum)) continue;
    sum += rec.value;
    ++count;
  }
  if (count == 0) throw EmptyScope("no records in scope");
  return sum / static_cast<double>(count);
}

}  // namespace srs
