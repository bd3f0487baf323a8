#include "srs/offline.hpp"

#include <algorithm>
#include <cmath>

#include "srs/errors.hpp"
#include "srs/random.hpp"
#include "srs/reduction.hpp"

namespace srs {

Policy parse_policy(const std::string& name) {
  if (name == "voila") return Policy::voila;
  if (name == "neyman") return Policy::neyman;
  if (name == "neyman_plus") return Policy::neyman_plus;
  if (name == "proportional") return Policy::proportional;
  throw Error("unknown policy: " + name);
}

std::string policy_name(Policy policy) {
  switch (policy) {
    case Policy::voila: return "voila";
    case Policy::neyman: return "neyman";
    case Policy::neyman_plus: return "neyman_plus";
    case Policy::proportional: return "proportional";
  }
  return "?";
}

StatsMap dataset_stats(const Dataset& dataset) {
  StatsMap stats;
  for (const auto& rec : dataset) {
    stats[rec.stratum].add(rec.value);
  }
  return stats;
}

Allocation voila_allocate(const AllocationInput& input) {
  ReductionInstance inst;
  inst.strata.reserve(input.strata.size());
  double total = 0.0;
  for (const auto& s : input.strata) {
    inst.strata.push_back({s.id, s.weight(), static_cast<double>(s.count)});
    total += static_cast<double>(s.count);
  }
  inst.target = std::min(static_cast<double>(input.budget), total);
  Allocation out = fast_ssr(inst);
  out.budget = static_cast<double>(input.budget);
  return out;
}

PolicyAllocations policy_allocations(Policy policy,
                                     const AllocationInput& input) {
  PolicyAllocations out;
  if (input.total_count() <= input.budget) {
    out.real.budget = static_cast<double>(input.budget);
    for (const auto& s : input.strata) {
      out.real.entries[s.id] = static_cast<double>(s.count);
    }
    out.integer = out.real;
    out.stored = out.real;
    return out;
  }

  std::map<StratumId, double> caps;
  for (const auto& s : input.strata) {
    caps[s.id] = static_cast<double>(s.count);
  }

  std::map<StratumId, double> weights;
  for (const auto& s : input.strata) {
    weights[s.id] = s.weight();
  }
  const double full_total =
      std::min(static_cast<double>(input.budget),
               static_cast<double>(input.total_count()));

  switch (policy) {
    case Policy::voila:
      out.real = voila_allocate(input);
      out.integer = integerize_by_gain(out.real, weights, caps, full_total);
      out.stored = out.integer;
      break;
    case Policy::neyman: {
      out.real = neyman(input);
      // The baseline reports plain floors, no remainder redistribution; its
      // oversized entries are truncated at n_i only when stored.
      out.integer.budget = out.real.budget;
      out.stored.budget = out.real.budget;
      for (const auto& [id, v] : out.real.entries) {
        out.integer.entries[id] = std::floor(v);
        out.stored.entries[id] = std::min(std::floor(v), caps[id]);
      }
      break;
    }
    case Policy::neyman_plus:
      out.real = neyman_plus(input);
      out.integer = integerize(out.real, caps);
      out.stored = out.integer;
      break;
    case Policy::proportional:
      out.real = proportional(input);
      out.integer = integerize(out.real, caps);
      out.stored = out.integer;
      break;
  }
  return out;
}

StratifiedSample materialize(const Dataset& dataset, const Allocation& alloc,
                             std::uint64_t seed) {
  StratifiedSample out;
  out.stats = dataset_stats(dataset);
  out.budget = static_cast<std::size_t>(std::llround(alloc.total()));
  std::map<StratumId, std::size_t> want;
  for (const auto& [id, v] : alloc.entries) {
    if (v != std::floor(v)) {
      throw AllocationInfeasible("materialize needs an integer allocation");
    }
    auto it = out.stats.find(id);
    const std::uint64_t n = it == out.stats.end() ? 0 : it->second.count;
    if (v > static_cast<double>(n)) {
      throw AllocationInfeasible("allocation for stratum " + id.value +
                                 " exceeds its population");
    }
    want[id] = static_cast<std::size_t>(v);
    out.samples.emplace(id, PerStratumSample(id));
  }
  Rng rng(seed);
  for (const auto& rec : dataset) {
    const double key = rng.open_unit();
    auto it = want.find(rec.stratum);
    if (it == want.end() || it->second == 0) continue;
    auto& store = out.samples.at(rec.stratum);
    if (store.size() < it->second) {
      store.insert({rec.stratum, rec.value, key});
    } else if (key < store.largest().key) {
      store.pop_largest();
      store.insert({rec.stratum, rec.value, key});
    }
  }
  return out;
}

PipelineResult offline_pipeline(const Dataset& dataset, Policy policy,
                                std::uint64_t budget, std::uint64_t seed) {
  if (dataset.empty()) throw EmptyPopulation("dataset is empty");
  const StatsMap stats = dataset_stats(dataset);
  PipelineResult result;
  result.allocations =
      policy_allocations(policy, allocation_input(stats, budget));
  result.sample = materialize(dataset, result.allocations.stored, seed);
  return result;
}

}  // namespace srs
