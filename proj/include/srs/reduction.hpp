#pragma once

#include <vector>

#include "srs/types.hpp"

namespace srs {

struct ReductionEntry {
  StratumId id;
  double weight = 0.0;  // n_i * sigma_i
  double size = 0.0;    // current sample size s_i
};

// A sample-size reduction problem: shrink per-stratum sizes to sum to
// `target` while increasing the estimator variance as little as possible,
// i.e. minimize sum of weight^2 / size' subject to 0 <= size' <= size.
struct ReductionInstance {
  std::vector<ReductionEntry> strata;
  double target = 0.0;

  double total_size() const;
};

// Chooses the stratum whose loss of one element raises the variance least:
// argmin of weight^2 / (s (s-1)) over strata with s >= 1. A stratum holding a
// single element with positive weight is a last resort (the increase is
// unbounded), and zero-weight strata are free evictions. Ties prefer the
// largest current size, then the smallest StratumId. Throws NothingToEvict
// when every size is zero.
StratumId single_ssr(const ReductionInstance& instance);

// Recursive solver: strata not oversized under the current budget keep their
// size; the rest are solved again under the residual budget, bottoming out in
// a Neyman split. Real-valued output. Throws InfeasibleTarget when the
// target exceeds the current total.
Allocation ssr(const ReductionInstance& instance);

// Iterative solver with the same output as ssr: sorts strata by
// size/weight, walks the prefix of not-oversized strata using precomputed
// suffix weight sums, and assigns Neyman shares to the remainder. O(r log r).
Allocation fast_ssr(const ReductionInstance& instance);

// Exhaustive integer oracle, gated to r <= 5 and total size <= 20: enumerates
// every feasible integer vector and returns one minimizing the objective
// (a positive-weight stratum cut to zero scores infinity). Throws
// InstanceTooLarge beyond the gate.
Allocation brute_force_reduction(const ReductionInstance& instance);

// Objective value sum_{w_i > 0} w_i^2 / s'_i; +infinity if any positive-weight
// stratum has s'_i = 0.
double reduction_objective(const ReductionInstance& instance,
                           const Allocation& alloc);

// First-order optimality certificate for the continuous program: feasibility,
// one common ratio w_i/s'_i = lambda across strata strictly inside their
// bounds, and w_i/s_i >= lambda for strata held at their cap (a capped
// stratum must want at least as much as the interior ones).
bool kkt_check(const ReductionInstance& instance, const Allocation& alloc,
               double tol);

}  // namespace srs
