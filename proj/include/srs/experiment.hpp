#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "srs/datagen.hpp"
#include "srs/offline.hpp"
#include "srs/types.hpp"

namespace srs {

struct SourceSpec {
  enum class Kind { csv, synthetic, adversarial };
  Kind kind = Kind::synthetic;

  // csv
  std::string path;
  CsvSchema schema;
  BatchSpec batch;  // source-defined batching (bucket column or fixed size)

  // synthetic
  SyntheticConfig synthetic;

  // adversarial
  std::uint64_t adversarial_strata = 4;
  std::uint64_t adversarial_alpha = 64;
};

struct MethodSpec {
  enum class Kind {
    voila,
    neyman,
    neyman_plus,
    proportional,
    svoila,
    reservoir,
    ssunif
  };
  Kind kind = Kind::svoila;
  std::size_t batch_size = 1;  // streaming minibatch size
  bool source_batches = false;  // svoila:batch — use the source's boundaries

  // Accepts voila | neyman | neyman_plus | proportional | reservoir |
  // svoila[:b|:batch] | ssunif[:b].
  static MethodSpec parse(const std::string& token);
  std::string name() const;
  bool streaming() const;
  bool offline() const { return !streaming(); }
  Policy policy() const;  // offline kinds only
};

struct ExperimentConfig {
  SourceSpec source;
  std::vector<MethodSpec> methods;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t checkpoint_every = 0;  // records per checkpoint; 0 = every batch
  std::string output;                // handled by the CLI
  bool timings = false;
};

// One aggregated metrics line: one per (checkpoint, method), averaged over
// seeds. Undefined values (a sampler missing a live stratum entirely) come
// out as inf/NaN and serialize as null.
struct MetricsRecord {
  std::size_t checkpoint = 0;
  std::size_t elements_seen = 0;
  std::string method;
  std::map<StratumId, double> allocation;
  double variance = 0.0;
  double cosine_to_voila = 0.0;
  double relative_error = 0.0;
  double batch_seconds = 0.0;
};

// Builds the source for one (method, seed) replay. Streaming methods get
// their own minibatch size unless they asked for the source's boundaries.
std::unique_ptr<StreamSource> make_source(const SourceSpec& spec,
                                          std::uint64_t seed,
                                          const MethodSpec& method,
                                          std::size_t checkpoint_every = 0);

// Replays the source once per (method, seed), snapshots metrics at
// checkpoints, and averages across seeds. Offline policies are evaluated on
// the same prefixes the streaming methods have seen; their query error comes
// from materializing over a fresh scan of the prefix.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& config);

void write_jsonl(const std::vector<MetricsRecord>& records, std::ostream& out,
                 bool timings);
void write_csv(const std::vector<MetricsRecord>& records, std::ostream& out,
               bool timings);

}  // namespace srs
