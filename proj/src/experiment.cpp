#include "srs/experiment.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "srs/allocation.hpp"
#include "srs/errors.hpp"
#include "srs/estimator.hpp"
#include "srs/stream.hpp"

namespace srs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

MethodSpec MethodSpec::parse(const std::string& token) {
  MethodSpec spec;
  std::string head = token;
  std::string arg;
  if (auto pos = token.find(':'); pos != std::string::npos) {
    head = token.substr(0, pos);
    arg = token.substr(pos + 1);
  }
  if (head == "voila") spec.kind = Kind::voila;
  else if (head == "neyman") spec.kind = Kind::neyman;
  else if (head == "neyman_plus") spec.kind = Kind::neyman_plus;
  else if (head == "proportional") spec.kind = Kind::proportional;
  else if (head == "svoila") spec.kind = Kind::svoila;
  else if (head == "reservoir") spec.kind = Kind::reservoir;
  else if (head == "ssunif") spec.kind = Kind::ssunif;
  else throw Error("unknown method: " + token);

  if (!arg.empty()) {
    if (spec.kind != Kind::svoila && spec.kind != Kind::ssunif) {
      throw Error("method " + head + " takes no batch argument");
    }
    if (arg == "batch") {
      spec.source_batches = true;
    } else {
      const long b = std::stol(arg);
      if (b < 1) throw Error("batch size must be at least 1");
      spec.batch_size = static_cast<std::size_t>(b);
    }
  }
  return spec;
}

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::voila: return "voila";
    case Kind::neyman: return "neyman";
    case Kind::neyman_plus: return "neyman_plus";
    case Kind::proportional: return "proportional";
    case Kind::reservoir: return "reservoir";
    case Kind::svoila:
      return source_batches ? "svoila:batch"
                            : "svoila:" + std::to_string(batch_size);
    case Kind::ssunif:
      return batch_size == 1 ? "ssunif"
                             : "ssunif:" + std::to_string(batch_size);
  }
  return "?";
}

bool MethodSpec::streaming() const {
  return kind == Kind::svoila || kind == Kind::reservoir ||
         kind == Kind::ssunif;
}

Policy MethodSpec::policy() const {
  switch (kind) {
    case Kind::voila: return Policy::voila;
    case Kind::neyman: return Policy::neyman;
    case Kind::neyman_plus: return Policy::neyman_plus;
    case Kind::proportional: return Policy::proportional;
    default: throw Error("not an offline method");
  }
}

std::unique_ptr<StreamSource> make_source(const SourceSpec& spec,
                                          std::uint64_t seed,
                                          const MethodSpec& method,
                                          std::size_t checkpoint_every) {
  // Offline replays just need a chunk size, but it must divide the
  // checkpoint interval so offline checkpoints land on the exact marks.
  // Streaming methods dictate their own minibatch size unless they follow
  // the source's boundaries.
  std::size_t batch = checkpoint_every > 0 ? checkpoint_every : 1024;
  if (method.streaming() && !method.source_batches) {
    batch = method.batch_size;
  }
  switch (spec.kind) {
    case SourceSpec::Kind::csv: {
      BatchSpec bs = spec.batch;
      if (!(method.streaming() && method.source_batches) && !bs.bucketed()) {
        bs.fixed_size = batch;
      }
      return std::make_unique<CsvReplaySource>(spec.path, spec.schema, bs);
    }
    case SourceSpec::Kind::synthetic: {
      std::size_t b = method.source_batches
                          ? std::max<std::size_t>(spec.batch.fixed_size, 1)
                          : batch;
      return std::make_unique<SyntheticSource>(spec.synthetic, seed, b);
    }
    case SourceSpec::Kind::adversarial: {
      std::size_t b = method.source_batches
                          ? std::max<std::size_t>(spec.batch.fixed_size, 1)
                          : batch;
      return std::make_unique<AdversarialSource>(spec.adversarial_strata,
                                                 spec.adversarial_alpha, b);
    }
  }
  throw Error("unknown source kind");
}

namespace {

std::unique_ptr<StreamSampler> make_sampler(const MethodSpec& method,
                                            std::size_t budget,
                                            std::uint64_t seed) {
  switch (method.kind) {
    case MethodSpec::Kind::svoila:
      return std::make_unique<SVoilaSampler>(budget, seed);
    case MethodSpec::Kind::reservoir:
      return std::make_unique<ReservoirSampler>(budget, seed);
    case MethodSpec::Kind::ssunif:
      return std::make_unique<SSUnifSampler>(budget, seed);
    default:
      return nullptr;
  }
}

struct RawPoint {
  std::size_t checkpoint = 0;
  std::size_t elements_seen = 0;
  std::map<StratumId, double> allocation;
  double variance = 0.0;
  double cosine_to_voila = 0.0;
  double relative_error = 0.0;
  double batch_seconds = 0.0;
};

Allocation as_allocation(const std::map<StratumId, double>& sizes,
                         double budget) {
  Allocation a;
  a.entries = sizes;
  a.budget = budget;
  return a;
}

double safe_cosine(const Allocation& a, const Allocation& b) {
  try {
    return cosine_distance(a, b);
  } catch (const ZeroVector&) {
    return kNaN;
  }
}

double safe_variance(const StatsMap& stats,
                     const std::map<StratumId, double>& sizes) {
  try {
    return variance_of_estimate(stats, sizes).total_variance;
  } catch (const UndefinedVariance&) {
    return kInf;
  }
}

// One (method, seed) replay. Checkpoints are evaluated at minibatch
// boundaries once the record mark is crossed; with checkpoint_every == 0,
// after every batch.
std::vector<RawPoint> run_one(const ExperimentConfig& config,
                              const MethodSpec& method, std::uint64_t seed) {
  auto source = make_source(config.source, seed, method, config.checkpoint_every);
  source->reset();
  auto sampler = make_sampler(method, config.budget, seed);

  StatsMap exact_stats;
  double exact_sum = 0.0;
  std::uint64_t exact_count = 0;

  std::vector<RawPoint> points;
  std::size_t seen = 0;
  std::size_t batches_since_checkpoint = 0;
  double seconds_since_checkpoint = 0.0;
  std::size_t next_checkpoint = 1;

  const auto emit = [&](std::size_t index) {
    RawPoint pt;
    pt.checkpoint = index;
    pt.elements_seen = seen;
    const AllocationInput input = allocation_input(exact_stats, config.budget);
    const Allocation voila_ref = voila_allocate(input);

    if (sampler) {
      const StratifiedSample snap = sampler->snapshot();
      pt.allocation = snap.sizes();
      pt.variance = safe_variance(exact_stats, pt.allocation);
      pt.cosine_to_voila = safe_cosine(
          as_allocation(pt.allocation, static_cast<double>(config.budget)),
          voila_ref);
      try {
        pt.relative_error =
            relative_error(estimate_mean(snap),
                           exact_sum / static_cast<double>(exact_count));
      } catch (const Error&) {
        pt.relative_error = kNaN;
      }
    } else {
      const PolicyAllocations allocs =
          policy_allocations(method.policy(), input);
      pt.allocation = allocs.stored.entries;
      pt.variance = safe_variance(exact_stats, pt.allocation);
      pt.cosine_to_voila = safe_cosine(allocs.stored, voila_ref);
      // Query error needs a real sample: rescan the prefix and materialize.
      auto prefix_source = make_source(config.source, seed, method, config.checkpoint_every);
      const Dataset prefix = read_prefix(*prefix_source, seen);
      const StratifiedSample sample = materialize(
          prefix, allocs.stored, seed * 1000003ULL + index);
      try {
        pt.relative_error =
            relative_error(estimate_mean(sample),
                           exact_sum / static_cast<double>(exact_count));
      } catch (const Error&) {
        pt.relative_error = kNaN;
      }
    }
    pt.batch_seconds = batches_since_checkpoint == 0
                           ? 0.0
                           : seconds_since_checkpoint /
                                 static_cast<double>(batches_since_checkpoint);
    batches_since_checkpoint = 0;
    seconds_since_checkpoint = 0.0;
    points.push_back(std::move(pt));
  };

  while (auto batch = source->next_batch()) {
    const auto t0 = std::chrono::steady_clock::now();
    if (sampler) sampler->process(*batch);
    const auto t1 = std::chrono::steady_clock::now();
    seconds_since_checkpoint +=
        std::chrono::duration<double>(t1 - t0).count();
    ++batches_since_checkpoint;
    for (const auto& rec : *batch) {
      exact_stats[rec.stratum].add(rec.value);
      exact_sum += rec.value;
    }
    exact_count += batch->size();
    seen += batch->size();

    if (config.checkpoint_every == 0) {
      emit(next_checkpoint++);
    } else {
      while (seen >= next_checkpoint * config.checkpoint_every) {
        emit(next_checkpoint++);
      }
    }
  }
  return points;
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config) {
  if (config.methods.empty()) throw Error("no methods given");
  if (config.budget < 1) throw Error("budget must be at least 1");
  if (config.seeds.empty()) throw Error("no seeds given");

  std::vector<MetricsRecord> records;
  for (const auto& method : config.methods) {
    // points[seed][i] aligned by construction: same source, same marks.
    std::vector<std::vector<RawPoint>> per_seed;
    per_seed.reserve(config.seeds.size());
    for (const auto seed : config.seeds) {
      per_seed.push_back(run_one(config, method, seed));
    }
    const std::size_t count = per_seed.front().size();
    for (const auto& pts : per_seed) {
      if (pts.size() != count) {
        throw Error("checkpoint misalignment across seeds");
      }
    }
    const double norm = static_cast<double>(config.seeds.size());
    for (std::size_t i = 0; i < count; ++i) {
      MetricsRecord rec;
      rec.checkpoint = per_seed.front()[i].checkpoint;
      rec.elements_seen = per_seed.front()[i].elements_seen;
      rec.method = method.name();
      for (const auto& pts : per_seed) {
        const RawPoint& pt = pts[i];
        rec.variance += pt.variance / norm;
        rec.cosine_to_voila += pt.cosine_to_voila / norm;
        rec.relative_error += pt.relative_error / norm;
        rec.batch_seconds += pt.batch_seconds / norm;
        for (const auto& [id, v] : pt.allocation) {
          rec.allocation[id] += v / norm;
        }
      }
      records.push_back(std::move(rec));
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const MetricsRecord& a, const MetricsRecord& b) {
                     return a.checkpoint < b.checkpoint;
                   });
  return records;
}

namespace {

nlohmann::json to_json(const MetricsRecord& rec, bool timings) {
  nlohmann::json alloc = nlohmann::json::object();
  for (const auto& [id, v] : rec.allocation) alloc[id.value] = v;
  nlohmann::json j{{"checkpoint", rec.checkpoint},
                   {"elements_seen", rec.elements_seen},
                   {"method", rec.method},
                   {"allocation", std::move(alloc)},
                   {"variance", rec.variance},
                   {"cosine_to_voila", rec.cosine_to_voila},
                   {"relative_error", rec.relative_error}};
  if (timings) j["batch_seconds"] = rec.batch_seconds;
  return j;
}

std::string csv_number(double v) {
  if (std::isnan(v) || std::isinf(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_jsonl(const std::vector<MetricsRecord>& records, std::ostream& out,
                 bool timings) {
  for (const auto& rec : records) {
    out << to_json(rec, timings).dump() << '\n';
  }
}

void write_csv(const std::vector<MetricsRecord>& records, std::ostream& out,
               bool timings) {
  out << "checkpoint,elements_seen,method,variance,cosine_to_voila,"
         "relative_error,allocation";
  if (timings) out << ",batch_seconds";
  out << '\n';
  for (const auto& rec : records) {
    out << rec.checkpoint << ',' << rec.elements_seen << ',' << rec.method
        << ',' << csv_number(rec.variance) << ','
        << csv_number(rec.cosine_to_voila) << ','
        << csv_number(rec.relative_error) << ',';
    out << '"';
    bool first = true;
    for (const auto& [id, v] : rec.allocation) {
      if (!first) out << ';';
      first = false;
      out << id.value << ':' << csv_number(v);
    }
    out << '"';
    if (timings) out << ',' << csv_number(rec.batch_seconds);
    out << '\n';
  }
}

}  // namespace srs
