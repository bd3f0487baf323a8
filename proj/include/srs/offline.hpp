#pragma once

#include <cstdint>
#include <string>

#include "srs/allocation.hpp"
#include "srs/sample.hpp"
#include "srs/types.hpp"

namespace srs {

enum class Policy { voila, neyman, neyman_plus, proportional };

Policy parse_policy(const std::string& name);
std::string policy_name(Policy policy);

// First pass over a dataset: per-stratum counts and moments.
StatsMap dataset_stats(const Dataset& dataset);

// Variance-optimal allocation for possibly bounded strata: reduce the whole
// population (sample sizes n_i, zero variance) to min(M, sum n_i). Reduces to
// the Neyman split when every stratum is abundant. Real-valued.
Allocation voila_allocate(const AllocationInput& input);

struct PolicyAllocations {
  Allocation real;     // the policy's raw allocation
  Allocation integer;  // the integer sample sizes the policy reports
  Allocation stored;   // what actually gets materialized (integer, <= n_i)
};

// Allocations per policy from population summaries. The Neyman baseline
// reports plain floors and keeps oversized entries; they are truncated at n_i
// only in `stored`, deliberately leaving part of the budget unused. The
// other policies integerize by largest remainder under caps n_i. When the
// whole population fits the budget every policy keeps everything.
PolicyAllocations policy_allocations(Policy policy,
                                     const AllocationInput& input);

// Second pass: per-stratum bottom-k by key, yielding a uniform
// without-replacement sample of exactly alloc[i] records per stratum.
// Requires integral alloc with alloc[i] <= n_i.
StratifiedSample materialize(const Dataset& dataset, const Allocation& alloc,
                             std::uint64_t seed);

struct PipelineResult {
  PolicyAllocations allocations;
  StratifiedSample sample;
};

// Two passes: stats, then allocation per policy, then materialization.
PipelineResult offline_pipeline(const Dataset& dataset, Policy policy,
                                std::uint64_t budget, std::uint64_t seed);

}  // namespace srs
