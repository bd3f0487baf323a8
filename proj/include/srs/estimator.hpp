#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>

#include "srs/sample.hpp"
#include "srs/types.hpp"

namespace srs {

struct VarianceReport {
  double total_variance = 0.0;
  std::map<StratumId, double> per_stratum_terms;
  std::int64_t used_budget = 0;
};

// Stratified estimate of the population mean: sum n_i * ybar_i / sum n_i over
// the strata in scope (all observed strata when no subset is given). A
// stratum with an empty sample is usable only when its spread is zero, in
// which case its recorded mean stands in; otherwise EmptyScopeStratum.
double estimate_mean(const StratifiedSample& sample,
                     const std::optional<std::set<StratumId>>& subset = {});

// Variance of the stratified mean estimator:
//   V = (1/n^2) * sum_i n_i (n_i - s_i) sigma_i^2 / s_i
// Terms with sigma_i = 0 are zero regardless of s_i. Throws UndefinedVariance
// when a stratum with positive weight has no sample.
VarianceReport variance_of_estimate(const StatsMap& stats,
                                    const std::map<StratumId, double>& sizes);

// |approx - exact| / |exact|; exact must be nonzero.
double relative_error(double approx, double exact);

// Exact mean over the in-scope records of a dataset.
double exact_mean(const Dataset& dataset,
                  const std::optional<std::set<StratumId>>& subset = {});

}  // namespace srs
