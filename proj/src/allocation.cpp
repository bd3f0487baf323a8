#include "srs/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srs/errors.hpp"

namespace srs {

std::uint64_t AllocationInput::total_count() const {
  std::uint64_t n = 0;
  for (const auto& s : strata) n += s.count;
  return n;
}

double AllocationInput::total_weight() const {
  double w = 0.0;
  for (const auto& s : strata) w += s.weight();
  return w;
}

AllocationInput allocation_input(const StatsMap& stats, std::uint64_t budget) {
  AllocationInput input;
  input.budget = budget;
  input.strata.reserve(stats.size());
  for (const auto& [id, st] : stats) {
    input.strata.push_back({id, st.count, st.stddev()});
  }
  return input;
}

Allocation neyman(const AllocationInput& input) {
  if (input.strata.empty()) throw EmptyPopulation("no strata");
  const double wsum = input.total_weight();
  if (wsum <= 0.0) throw AllZeroWeights("all n_i * sigma_i are zero");
  Allocation out;
  out.budget = static_cast<double>(input.budget);
  for (const auto& s : input.strata) {
    out.entries[s.id] = out.budget * s.weight() / wsum;
  }
  return out;
}

Allocation neyman_plus(const AllocationInput& input) {
  if (input.strata.empty()) throw EmptyPopulation("no strata");
  const double budget = static_cast<double>(input.budget);
  Allocation out;
  out.budget = budget;
  if (static_cast<double>(input.total_count()) <= budget) {
    for (const auto& s : input.strata) {
      out.entries[s.id] = static_cast<double>(s.count);
    }
    return out;
  }

  out = neyman(input);
  out.budget = budget;
  // Cap bounded strata at n_i and split the unused budget equally among the
  // rest. The bonus can bound further strata, so repeat until stable; each
  // round caps at least one stratum, so this ends within r rounds.
  std::map<StratumId, bool> capped;
  for (;;) {
    bool changed = false;
    for (const auto& s : input.strata) {
      if (capped[s.id]) continue;
      if (out.entries[s.id] > static_cast<double>(s.count)) {
        out.entries[s.id] = static_cast<double>(s.count);
        capped[s.id] = true;
        changed = true;
      }
    }
    if (!changed) break;
    std::size_t open = 0;
    for (const auto& s : input.strata) {
      if (!capped[s.id]) ++open;
    }
    if (open == 0) break;
    const double bonus = (budget - out.total()) / static_cast<double>(open);
    for (const auto& s : input.strata) {
      if (!capped[s.id]) out.entries[s.id] += bonus;
    }
  }
  return out;
}

Allocation proportional(const AllocationInput& input) {
  if (input.strata.empty()) throw EmptyPopulation("no strata");
  const double nsum = static_cast<double>(input.total_count());
  if (nsum <= 0.0) throw EmptyPopulation("all strata are empty");
  Allocation out;
  out.budget = static_cast<double>(input.budget);
  for (const auto& s : input.strata) {
    out.entries[s.id] = out.budget * static_cast<double>(s.count) / nsum;
  }
  return out;
}

Allocation uniform_redistribute(const AllocationInput& input) {
  if (input.strata.empty()) throw EmptyPopulation("no strata");
  const double budget = static_cast<double>(input.budget);
  Allocation out;
  out.budget = budget;

  std::map<StratumId, bool> capped;
  for (;;) {
    double capped_total = 0.0;
    std::size_t open = 0;
    for (const auto& s : input.strata) {
      if (capped[s.id]) {
        capped_total += static_cast<double>(s.count);
      } else {
        ++open;
      }
    }
    if (open == 0) break;
    const double share = (budget - capped_total) / static_cast<double>(open);
    bool changed = false;
    for (const auto& s : input.strata) {
      if (!capped[s.id] && static_cast<double>(s.count) < share) {
        capped[s.id] = true;
        changed = true;
      }
    }
    if (!changed) {
      for (const auto& s : input.strata) {
        if (!capped[s.id]) out.entries[s.id] = share;
      }
      break;
    }
  }
  for (const auto& s : input.strata) {
    if (capped[s.id]) out.entries[s.id] = static_cast<double>(s.count);
  }
  return out;
}

Allocation integerize_to_total(const Allocation& alloc,
                               const std::map<StratumId, double>& caps,
                               double total) {
  const auto cap_of = [&caps](const StratumId& id) {
    auto it = caps.find(id);
    return it == caps.end() ? std::numeric_limits<double>::infinity()
                            : it->second;
  };

  double cap_sum = 0.0;
  for (const auto& [id, v] : alloc.entries) cap_sum += cap_of(id);
  const double target = std::round(total);
  if (cap_sum < target - 1e-9) {
    throw InfeasibleBudget("caps sum below the requested integer total");
  }

  Allocation out;
  out.budget = target;
  struct Frac {
    StratumId id;
    double frac;
  };
  std::vector<Frac> fracs;
  double assigned = 0.0;
  for (const auto& [id, v] : alloc.entries) {
    const double fl = std::floor(v);
    const double capped = std::min(fl, cap_of(id));
    out.entries[id] = capped;
    assigned += capped;
    fracs.push_back({id, v - fl});
  }
  std::sort(fracs.begin(), fracs.end(), [](const Frac& a, const Frac& b) {
    if (a.frac != b.frac) return a.frac > b.frac;
    return a.id < b.id;
  });

  double remaining = target - assigned;
  while (remaining >= 0.5) {
    bool progressed = false;
    for (const auto& f : fracs) {
      if (remaining < 0.5) break;
      if (out.entries[f.id] + 1.0 <= cap_of(f.id)) {
        out.entries[f.id] += 1.0;
        remaining -= 1.0;
        progressed = true;
      }
    }
    if (!progressed) {
      throw InfeasibleBudget("caps sum below the requested integer total");
    }
  }
  return out;
}

Allocation integerize(const Allocation& alloc,
                      const std::map<StratumId, double>& caps) {
  double cap_sum = 0.0;
  for (const auto& [id, v] : alloc.entries) {
    auto it = caps.find(id);
    cap_sum += it == caps.end() ? std::numeric_limits<double>::infinity()
                                : it->second;
  }
  return integerize_to_total(alloc, caps, std::min(alloc.budget, cap_sum));
}

Allocation integerize(const Allocation& alloc) {
  return integerize_to_total(alloc, {}, alloc.budget);
}

Allocation integerize_by_gain(const Allocation& alloc,
                              const std::map<StratumId, double>& weights,
                              const std::map<StratumId, double>& caps,
                              double total) {
  const auto cap_of = [&caps](const StratumId& id) {
    auto it = caps.find(id);
    return it == caps.end() ? std::numeric_limits<double>::infinity()
                            : it->second;
  };
  const auto weight_of = [&weights](const StratumId& id) {
    auto it = weights.find(id);
    return it == weights.end() ? 0.0 : it->second;
  };

  Allocation out;
  out.budget = std::round(total);
  double assigned = 0.0;
  for (const auto& [id, v] : alloc.entries) {
    const double fl = std::min(std::floor(v), cap_of(id));
    out.entries[id] = fl;
    assigned += fl;
  }

  const auto gain = [&](const StratumId& id) {
    const double w = weight_of(id);
    if (w <= 0.0) return 0.0;
    const double c = out.entries[id];
    if (c <= 0.0) return std::numeric_limits<double>::infinity();
    return w * w / (c * (c + 1.0));
  };

  double remaining = out.budget - assigned;
  while (remaining >= 0.5) {
    const StratumId* best = nullptr;
    double best_gain = -1.0;
    for (const auto& [id, v] : out.entries) {
      if (v + 1.0 > cap_of(id)) continue;
      const double g = gain(id);
      const bool better =
          best == nullptr || g > best_gain ||
          (g == best_gain && (weight_of(id) > weight_of(*best) ||
                              (weight_of(id) == weight_of(*best) &&
                               id < *best)));
      if (better) {
        best = &id;
        best_gain = g;
      }
    }
    if (best == nullptr) {
      throw InfeasibleBudget("caps sum below the requested integer total");
    }
    out.entries[*best] += 1.0;
    remaining -= 1.0;
  }
  return out;
}

double cosine_distance(const Allocation& a, const Allocation& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [id, va] : a.entries) {
    na += va * va;
    dot += va * b.at(id);
  }
  for (const auto& [id, vb] : b.entries) nb += vb * vb;
  if (na <= 0.0 || nb <= 0.0) throw ZeroVector("allocation vector is zero");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(1.0 - c, 0.0, 1.0);
}

}  // namespace srs
