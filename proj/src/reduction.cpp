#include "srs/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "srs/errors.hpp"

namespace srs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate(const ReductionInstance& inst) {
  double total = 0.0;
  for (const auto& e : inst.strata) {
    if (e.weight < 0.0 || e.size < 0.0) {
      throw Error("negative weight or size in reduction instance");
    }
    total += e.size;
  }
  if (inst.target < 0.0) throw InfeasibleTarget("negative target");
  if (inst.target > total + 1e-9 * std::max(1.0, total)) {
    throw InfeasibleTarget("target exceeds current total size");
  }
}

// Cuts zero-weight strata down to a common level c with sum min(s_i, c) =
// `keep`, draining the largest sizes first. Their variance terms are zero, so
// any split is optimal; this one matches what repeated single evictions with
// the largest-size tie rule would do.
void drain_to_common_level(const std::vector<const ReductionEntry*>& strata,
                           double keep, Allocation& out) {
  std::vector<double> sizes;
  sizes.reserve(strata.size());
  double total = 0.0;
  for (const auto* e : strata) {
    sizes.push_back(e->size);
    total += e->size;
  }
  if (strata.empty()) return;
  if (keep >= total) {
    for (const auto* e : strata) out.entries[e->id] = e->size;
    return;
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  // Find the level c in [sizes[k+1], sizes[k]) where the k+1 largest sizes,
  // cut to c, absorb the whole reduction.
  double level = 0.0;
  double above = 0.0;  // sum of the sizes strictly above the candidate level
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    above += sizes[k];
    const double next = k + 1 < sizes.size() ? sizes[k + 1] : 0.0;
    const double cut_here = total - keep;
    // With k+1 strata capped at c: removed mass = above - (k+1)c.
    const double c = (above - cut_here) / static_cast<double>(k + 1);
    if (c >= next) {
      level = std::max(c, 0.0);
      break;
    }
  }
  for (const auto* e : strata) {
    out.entries[e->id] = std::min(e->size, level);
  }
}

struct Node {
  const ReductionEntry* entry;
  double ratio;  // size / weight
};

void ssr_recurse(std::vector<const ReductionEntry*> strata, double target,
                 Allocation& out) {
  if (strata.empty()) return;
  double wsum = 0.0;
  for (const auto* e : strata) wsum += e->weight;

  std::vector<const ReductionEntry*> oversized;
  double kept = 0.0;
  for (const auto* e : strata) {
    const double share = target * e->weight / wsum;
    if (e->size > share) {
      oversized.push_back(e);
    } else {
      out.entries[e->id] = e->size;
      kept += e->size;
    }
  }
  if (oversized.size() == strata.size()) {
    for (const auto* e : strata) {
      out.entries[e->id] = target * e->weight / wsum;
    }
    return;
  }
  if (!oversized.empty()) {
    ssr_recurse(std::move(oversized), target - kept, out);
  }
}

// Splits the instance on weight positivity and resolves the zero-weight part;
// returns the positive-weight strata and their target, or no target when the
// positive part is fully kept.
struct Split {
  std::vector<const ReductionEntry*> positive;
  double positive_target = 0.0;
  bool positive_solved = false;
};

Split split_zero_weight(const ReductionInstance& inst, Allocation& out) {
  Split sp;
  std::vector<const ReductionEntry*> zero;
  double positive_size = 0.0;
  for (const auto& e : inst.strata) {
    if (e.weight > 0.0) {
      sp.positive.push_back(&e);
      positive_size += e.size;
    } else {
      zero.push_back(&e);
    }
  }
  if (positive_size <= inst.target) {
    // Positive-weight strata keep everything; zero-weight strata absorb the
    // entire cut.
    for (const auto* e : sp.positive) out.entries[e->id] = e->size;
    drain_to_common_level(zero, inst.target - positive_size, out);
    sp.positive_solved = true;
  } else {
    // Zero-weight strata are cut first; the positive part solves the full
    // target.
    for (const auto* e : zero) out.entries[e->id] = 0.0;
    sp.positive_target = inst.target;
  }
  return sp;
}

}  // namespace

double ReductionInstance::total_size() const {
  double t = 0.0;
  for (const auto& e : strata) t += e.size;
  return t;
}

StratumId single_ssr(const ReductionInstance& instance) {
  const ReductionEntry* best = nullptr;
  double best_delta = kInf;
  for (const auto& e : instance.strata) {
    if (e.size < 1.0) continue;
    double delta;
    if (e.weight <= 0.0) {
      delta = 0.0;
    } else if (e.size > 1.0) {
      delta = e.weight * e.weight / (e.size * (e.size - 1.0));
    } else {
      delta = kInf;
    }
    if (best == nullptr || delta < best_delta ||
        (delta == best_delta &&
         (e.size > best->size || (e.size == best->size && e.id < best->id)))) {
      best = &e;
      best_delta = delta;
    }
  }
  if (best == nullptr) throw NothingToEvict("every stratum sample is empty");
  return best->id;
}

Allocation ssr(const ReductionInstance& instance) {
  validate(instance);
  Allocation out;
  out.budget = instance.target;
  Split sp = split_zero_weight(instance, out);
  if (!sp.positive_solved) {
    ssr_recurse(std::move(sp.positive), sp.positive_target, out);
  }
  return out;
}

Allocation fast_ssr(const ReductionInstance& instance) {
  validate(instance);
  Allocation out;
  out.budget = instance.target;
  Split sp = split_zero_weight(instance, out);
  if (sp.positive_solved) return out;

  std::vector<Node> q;
  q.reserve(sp.positive.size());
  for (const auto* e : sp.positive) {
    q.push_back({e, e->size / e->weight});
  }
  std::sort(q.begin(), q.end(), [](const Node& a, const Node& b) {
    if (a.ratio != b.ratio) return a.ratio < b.ratio;
    return a.entry->id < b.entry->id;
  });
  // suffix[i] = total weight of q[i..end); the Neyman denominator of every
  // walk segment is one of these.
  std::vector<double> suffix(q.size() + 1, 0.0);
  for (std::size_t i = q.size(); i-- > 0;) {
    suffix[i] = suffix[i + 1] + q[i].entry->weight;
  }

  // Walk the prefix of not-oversized strata. Within a segment the budget and
  // denominator are fixed; when the next stratum is oversized under them, the
  // segment ends and both rebase, mirroring one recursion step of ssr.
  std::size_t i = 0;
  double seg_budget = sp.positive_target;
  double seg_denom = suffix[0];
  double remaining = sp.positive_target;
  while (i < q.size()) {
    const double share = seg_budget * q[i].entry->weight / seg_denom;
    if (q[i].entry->size > share) break;
    out.entries[q[i].entry->id] = q[i].entry->size;
    remaining -= q[i].entry->size;
    if (i + 1 < q.size()) {
      const double next_share =
          seg_budget * q[i + 1].entry->weight / seg_denom;
      if (q[i + 1].entry->size > next_share) {
        seg_budget = remaining;
        seg_denom = suffix[i + 1];
      }
    }
    ++i;
  }
  for (std::size_t j = i; j < q.size(); ++j) {
    out.entries[q[j].entry->id] = seg_budget * q[j].entry->weight / seg_denom;
  }
  return out;
}

double reduction_objective(const ReductionInstance& instance,
                           const Allocation& alloc) {
  double obj = 0.0;
  for (const auto& e : instance.strata) {
    if (e.weight <= 0.0) continue;
    const double s = alloc.at(e.id);
    if (s <= 0.0) return kInf;
    obj += e.weight * e.weight / s;
  }
  return obj;
}

namespace {

struct BruteState {
  Allocation best;
  double best_obj = kInf;
  bool found = false;
};

void enumerate_vectors(const ReductionInstance& inst, std::size_t idx,
                       double remaining, Allocation& current, double acc,
                       BruteState& state) {
  const auto& strata = inst.strata;
  if (idx == strata.size()) {
    if (remaining != 0.0) return;
    if (!state.found || acc < state.best_obj) {
      state.found = true;
      state.best_obj = acc;
      state.best = current;
    }
    return;
  }
  double tail_capacity = 0.0;
  for (std::size_t j = idx; j < strata.size(); ++j) {
    tail_capacity += strata[j].size;
  }
  if (tail_capacity < remaining) return;
  const double max_here = std::min(strata[idx].size, remaining);
  for (double v = 0.0; v <= max_here; v += 1.0) {
    double term = 0.0;
    if (strata[idx].weight > 0.0) {
      term = v > 0.0 ? strata[idx].weight * strata[idx].weight / v : kInf;
    }
    current.entries[strata[idx].id] = v;
    enumerate_vectors(inst, idx + 1, remaining - v, current, acc + term,
                      state);
  }
}

}  // namespace

Allocation brute_force_reduction(const ReductionInstance& instance) {
  validate(instance);
  if (instance.strata.size() > 5 || instance.total_size() > 20.0) {
    throw InstanceTooLarge("brute force is gated to r <= 5, total size <= 20");
  }
  for (const auto& e : instance.strata) {
    if (e.size != std::floor(e.size)) {
      throw InstanceTooLarge("brute force needs integer sizes");
    }
  }
  if (instance.target != std::floor(instance.target)) {
    throw InstanceTooLarge("brute force needs an integer target");
  }
  BruteState state;
  state.best.budget = instance.target;
  Allocation current;
  current.budget = instance.target;
  enumerate_vectors(instance, 0, instance.target, current, 0.0, state);
  Allocation out = state.best;
  out.budget = instance.target;
  return out;
}

bool kkt_check(const ReductionInstance& instance, const Allocation& alloc,
               double tol) {
  // Feasibility.
  double total = 0.0;
  for (const auto& e : instance.strata) {
    const double s = alloc.at(e.id);
    if (s < -tol || s > e.size + tol) return false;
    total += s;
  }
  const double slack =
      tol * std::max<double>(1.0, static_cast<double>(instance.strata.size()));
  if (std::abs(total - instance.target) > slack) return false;
  if (instance.target <= tol) return true;  // only the zero vector fits

  // Stationarity over positive-weight strata: interior ones share a common
  // ratio lambda = w/s', capped ones must sit at w/s >= lambda.
  std::vector<double> interior;
  std::vector<double> capped;
  for (const auto& e : instance.strata) {
    if (e.weight <= 0.0) continue;
    const double s = alloc.at(e.id);
    if (s >= e.size - tol) {
      capped.push_back(e.weight / e.size);
    } else if (s > tol) {
      interior.push_back(e.weight / s);
    } else {
      // A positive-weight stratum cut to zero while room remained cannot be
      // optimal (its term is unbounded).
      if (e.size > tol) return false;
    }
  }
  if (interior.empty()) return true;
  std::nth_element(interior.begin(), interior.begin() + interior.size() / 2,
                   interior.end());
  const double lambda = interior[interior.size() / 2];
  for (double r : interior) {
    if (std::abs(r - lambda) > tol) return false;
  }
  for (double r : capped) {
    if (r < lambda - tol) return false;
  }
  return true;
}

}  // namespace srs
