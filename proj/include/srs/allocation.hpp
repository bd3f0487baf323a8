#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "srs/types.hpp"

namespace srs {

struct StratumSummary {
  StratumId id;
  std::uint64_t count = 0;  // n_i
  double sigma = 0.0;       // sigma_i

  double weight() const { return static_cast<double>(count) * sigma; }
};

// Per-stratum population summaries plus the total budget M.
struct AllocationInput {
  std::vector<StratumSummary> strata;
  std::uint64_t budget = 0;

  std::uint64_t total_count() const;
  double total_weight() const;
};

AllocationInput allocation_input(const StatsMap& stats, std::uint64_t budget);

// Classic Neyman allocation: entries proportional to n_i * sigma_i. Ignores
// stratum boundedness, so entries may exceed n_i; that is the point of the
// baseline. Throws AllZeroWeights when every n_i * sigma_i is zero.
Allocation neyman(const AllocationInput& input);

// Neyman, then caps each stratum at n_i and re-splits the unused budget
// equally among uncapped strata, repeating until no stratum exceeds its n_i.
Allocation neyman_plus(const AllocationInput& input);

// Entries proportional to n_i. Throws EmptyPopulation when all n_i are zero.
Allocation proportional(const AllocationInput& input);

// Equal split M/r, capping strata at n_i and re-splitting the surplus among
// uncapped strata until fixpoint. Sums to min(M, sum n_i).
Allocation uniform_redistribute(const AllocationInput& input);

// Largest-remainder rounding: floor every entry, then hand the remaining
// units one at a time to strata in decreasing fractional-part order (ties by
// StratumId), skipping strata already at their cap. The result sums to
// `total` exactly. Throws InfeasibleBudget when the caps cannot absorb it.
Allocation integerize_to_total(const Allocation& alloc,
                               const std::map<StratumId, double>& caps,
                               double total);

// As above with total = min(alloc.budget, sum of caps).
Allocation integerize(const Allocation& alloc,
                      const std::map<StratumId, double>& caps);

// Uncapped variant; total = alloc.budget.
Allocation integerize(const Allocation& alloc);

// Rounding for variance-driven allocations: floor every entry, then hand the
// remaining units out by the largest marginal drop of sum w_i^2 / s_i, i.e.
// w_i^2 / (c (c+1)) at current count c, with a positive-weight stratum at
// zero always served first. Optimal among integer vectors above the floors;
// in particular it never starves a stratum the objective still needs. Ties
// prefer the larger weight, then the smaller StratumId.
Allocation integerize_by_gain(const Allocation& alloc,
                              const std::map<StratumId, double>& weights,
                              const std::map<StratumId, double>& caps,
                              double total);

// 1 - cos(a, b) over the union of both stratum sets (missing entries read as
// zero). Throws ZeroVector when either vector has no nonzero entry.
double cosine_distance(const Allocation& a, const Allocation& b);

}  // namespace srs
