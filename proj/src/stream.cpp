#include "srs/stream.hpp"

#include <cassert>
#include <cmath>

#include "srs/allocation.hpp"
#include "srs/errors.hpp"
#include "srs/reduction.hpp"

namespace srs {

namespace {

ReductionInstance current_instance(const StratifiedSample& sample,
                                   double target) {
  ReductionInstance inst;
  inst.target = target;
  inst.strata.reserve(sample.samples.size());
  for (const auto& [id, store] : sample.samples) {
    inst.strata.push_back({id, sample.stats.at(id).weight(),
                           static_cast<double>(store.size())});
  }
  return inst;
}

PerStratumSample& stratum_store(StratifiedSample& sample,
                                const StratumId& id) {
  auto it = sample.samples.find(id);
  if (it == sample.samples.end()) {
    // Unseen stratum: fresh store with threshold 1, so its first element is
    // always admitted.
    it = sample.samples.emplace(id, PerStratumSample(id)).first;
  }
  return it->second;
}

// Trims every stratum above its target to the target, remembering the
// smallest key discarded in the round as the new threshold.
void trim_to_targets(StratifiedSample& sample, const Allocation& targets) {
  for (auto& [id, store] : sample.samples) {
    const double want = targets.at(id);
    if (static_cast<double>(store.size()) <= want) continue;
    double smallest_discarded = store.threshold();
    while (static_cast<double>(store.size()) > want) {
      smallest_discarded = store.pop_largest().key;
    }
    store.lower_threshold(smallest_discarded);
  }
}

}  // namespace

SVoilaSampler::SVoilaSampler(std::size_t budget, std::uint64_t seed)
    : budget_(budget), rng_(seed) {
  if (budget_ == 0) throw Error("budget must be at least 1");
  sample_.budget = budget_;
}

void SVoilaSampler::process(const Record& record) {
  process(Minibatch{record});
}

void SVoilaSampler::process(const Minibatch& batch) {
  if (batch.empty()) throw Error("minibatch must not be empty");
  std::size_t admitted = 0;
  for (const auto& rec : batch) {
    sample_.stats[rec.stratum].add(rec.value);
    auto& store = stratum_store(sample_, rec.stratum);
    const double key = rng_.open_unit();
    if (stored_ < budget_) {
      store.insert({rec.stratum, rec.value, key});  // still filling up
      ++stored_;
      continue;
    }
    if (store.admits(key)) {
      store.insert({rec.stratum, rec.value, key});
      ++admitted;
    }
  }
  if (admitted == 1) {
    evict_one();
  } else if (admitted > 1) {
    ReductionInstance inst =
        current_instance(sample_, static_cast<double>(budget_));
    Allocation real = fast_ssr(inst);
    std::map<StratumId, double> caps;
    std::map<StratumId, double> weights;
    for (const auto& e : inst.strata) {
      caps[e.id] = e.size;
      weights[e.id] = e.weight;
    }
    evict_to_targets(integerize_by_gain(real, weights, caps,
                                        static_cast<double>(budget_)));
  }
  assert(sample_.total_size() == stored_);
}

void SVoilaSampler::evict_one() {
  const StratumId victim =
      single_ssr(current_instance(sample_, static_cast<double>(budget_)));
  auto& store = sample_.samples.at(victim);
  const WeightedRecord evicted = store.pop_largest();
  store.lower_threshold(evicted.key);
}

void SVoilaSampler::evict_to_targets(const Allocation& targets) {
  trim_to_targets(sample_, targets);
}

SSUnifSampler::SSUnifSampler(std::size_t budget, std::uint64_t seed)
    : budget_(budget), rng_(seed) {
  if (budget_ == 0) throw Error("budget must be at least 1");
  sample_.budget = budget_;
}

void SSUnifSampler::process(const Record& record) {
  process(Minibatch{record});
}

void SSUnifSampler::process(const Minibatch& batch) {
  if (batch.empty()) throw Error("minibatch must not be empty");
  for (const auto& rec : batch) {
    sample_.stats[rec.stratum].add(rec.value);
    auto& store = stratum_store(sample_, rec.stratum);
    const double key = rng_.open_unit();
    if (store.admits(key)) {
      store.insert({rec.stratum, rec.value, key});
    }
  }
  // Boundary rebalance: trim strata above their uniform (redistributed,
  // integerized) share.
  std::map<StratumId, double> caps;
  for (const auto& [id, st] : sample_.stats) {
    caps[id] = static_cast<double>(st.count);
  }
  const Allocation targets = integerize(
      uniform_redistribute(allocation_input(sample_.stats, budget_)), caps);
  trim_to_targets(sample_, targets);
}

ReservoirSampler::ReservoirSampler(std::size_t budget, std::uint64_t seed)
    : budget_(budget), rng_(seed) {
  if (budget_ == 0) throw Error("budget must be at least 1");
}

void ReservoirSampler::process(const Record& record) {
  stats_[record.stratum].add(record.value);
  const double key = rng_.open_unit();
  if (pool_.size() < budget_) {
    pool_.insert({record.stratum, record.value, key});
  } else if (key < pool_.largest().key) {
    pool_.pop_largest();
    pool_.insert({record.stratum, record.value, key});
  }
}

void ReservoirSampler::process(const Minibatch& batch) {
  for (const auto& rec : batch) process(rec);
}

StratifiedSample ReservoirSampler::snapshot() const {
  StratifiedSample out;
  out.budget = budget_;
  out.stats = stats_;
  for (const auto& [id, st] : stats_) {
    out.samples.emplace(id, PerStratumSample(id));
  }
  for (const auto& rec : pool_) {
    out.samples.at(rec.stratum).insert(rec);
  }
  return out;
}

}  // namespace srs
