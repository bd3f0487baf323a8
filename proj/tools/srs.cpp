// Command-line driver: allocation policies, sample-size reduction, offline
// and streaming samplers, data generators, and the experiment runner.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "srs/allocation.hpp"
#include "srs/datagen.hpp"
#include "srs/errors.hpp"
#include "srs/estimator.hpp"
#include "srs/experiment.hpp"
#include "srs/offline.hpp"
#include "srs/reduction.hpp"
#include "srs/stream.hpp"

namespace {

using nlohmann::json;

json alloc_to_json(const srs::Allocation& alloc) {
  json j = json::object();
  for (const auto& [id, v] : alloc.entries) j[id.value] = v;
  return j;
}

void emit(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(path);
    if (!out) throw srs::Error("cannot write " + path);
    out << j.dump(2) << "\n";
  }
}

// stats csv: header stratum,count,sigma
srs::AllocationInput read_stats_csv(const std::string& path,
                                    std::uint64_t budget) {
  srs::CsvSchema schema;
  schema.stratum_columns = {"stratum"};
  schema.value_column = "count";
  srs::CsvReplaySource counts(path, schema, srs::BatchSpec{1, ""});
  schema.value_column = "sigma";
  srs::CsvReplaySource sigmas(path, schema, srs::BatchSpec{1, ""});

  srs::AllocationInput input;
  input.budget = budget;
  auto cbatch = counts.next_batch();
  auto sbatch = sigmas.next_batch();
  while (cbatch && sbatch) {
    const auto& c = cbatch->front();
    const auto& s = sbatch->front();
    input.strata.push_back(
        {c.stratum, static_cast<std::uint64_t>(c.value), s.value});
    cbatch = counts.next_batch();
    sbatch = sigmas.next_batch();
  }
  return input;
}

// instance csv: header stratum,weight,size
srs::ReductionInstance read_instance_csv(const std::string& path,
                                         double target) {
  srs::CsvSchema schema;
  schema.stratum_columns = {"stratum"};
  schema.value_column = "weight";
  srs::CsvReplaySource weights(path, schema, srs::BatchSpec{1, ""});
  schema.value_column = "size";
  srs::CsvReplaySource sizes(path, schema, srs::BatchSpec{1, ""});

  srs::ReductionInstance inst;
  inst.target = target;
  auto wbatch = weights.next_batch();
  auto sbatch = sizes.next_batch();
  while (wbatch && sbatch) {
    inst.strata.push_back(
        {wbatch->front().stratum, wbatch->front().value, sbatch->front().value});
    wbatch = weights.next_batch();
    sbatch = sizes.next_batch();
  }
  return inst;
}

void write_dataset_csv(const srs::Dataset& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw srs::Error("cannot write " + path);
  out << "stratum,value\n";
  out.precision(17);
  for (const auto& rec : records) {
    out << rec.stratum.value << ',' << rec.value << '\n';
  }
}

void write_sample_csv(const srs::StratifiedSample& sample,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw srs::Error("cannot write " + path);
  out << "stratum,value,key\n";
  out.precision(17);
  for (const auto& [id, store] : sample.samples) {
    for (const auto& rec : store) {
      out << id.value << ',' << rec.value << ',' << rec.key << '\n';
    }
  }
}

void add_source_options(CLI::App* cmd, srs::SourceSpec& spec,
                        std::string& kind) {
  cmd->add_option("--source", kind,
                  "record source: csv, synthetic, or adversarial");
  cmd->add_option("--data", spec.path, "csv input path");
  cmd->add_option("--stratum-column", spec.schema.stratum_columns,
                  "csv column(s) forming the stratum id");
  cmd->add_option("--value-column", spec.schema.value_column,
                  "csv value column");
  cmd->add_option("--bucket-column", spec.batch.bucket_column,
                  "csv column whose runs of equal values form minibatches");
  cmd->add_option("--source-batch", spec.batch.fixed_size,
                  "source minibatch size (for svoila:batch)");
  cmd->add_option("--num-strata", spec.synthetic.num_strata);
  cmd->add_option("--base-sigma", spec.synthetic.base_sigma);
  cmd->add_option("--changed-stratum", spec.synthetic.changed_stratum);
  cmd->add_option("--changed-sigma", spec.synthetic.changed_sigma);
  cmd->add_option("--change-at", spec.synthetic.change_at);
  cmd->add_option("--total-records", spec.synthetic.total_records);
  cmd->add_option("--mean", spec.synthetic.mean);
  cmd->add_option("--strata", spec.adversarial_strata,
                  "adversarial stratum count");
  cmd->add_option("--alpha", spec.adversarial_alpha,
                  "adversarial per-stratum count");
}

srs::SourceSpec::Kind parse_source_kind(const std::string& kind) {
  if (kind == "csv") return srs::SourceSpec::Kind::csv;
  if (kind == "synthetic") return srs::SourceSpec::Kind::synthetic;
  if (kind == "adversarial") return srs::SourceSpec::Kind::adversarial;
  throw srs::Error("unknown source kind: " + kind);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_config_file(const std::string& path, srs::ExperimentConfig& config,
                       std::string& source_kind, std::string& methods,
                       std::string& seeds, std::string& csv_out) {
  std::ifstream in(path);
  if (!in) throw srs::Error("cannot open config " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw srs::Error(path + ":" + std::to_string(line_no) +
                       ": expected key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "source") source_kind = value;
    else if (key == "path") config.source.path = value;
    else if (key == "stratum_columns")
      config.source.schema.stratum_columns = split_list(value);
    else if (key == "value_column") config.source.schema.value_column = value;
    else if (key == "bucket_column") config.source.batch.bucket_column = value;
    else if (key == "batch_fixed")
      config.source.batch.fixed_size = std::stoull(value);
    else if (key == "num_strata")
      config.source.synthetic.num_strata = std::stoull(value);
    else if (key == "base_sigma")
      config.source.synthetic.base_sigma = std::stod(value);
    else if (key == "changed_stratum")
      config.source.synthetic.changed_stratum = std::stoull(value);
    else if (key == "changed_sigma")
      config.source.synthetic.changed_sigma = std::stod(value);
    else if (key == "change_at")
      config.source.synthetic.change_at = std::stoull(value);
    else if (key == "total_records")
      config.source.synthetic.total_records = std::stoull(value);
    else if (key == "mean") config.source.synthetic.mean = std::stod(value);
    else if (key == "r")
      config.source.adversarial_strata = std::stoull(value);
    else if (key == "alpha")
      config.source.adversarial_alpha = std::stoull(value);
    else if (key == "methods") methods = value;
    else if (key == "budget") config.budget = std::stoull(value);
    else if (key == "seeds") seeds = value;
    else if (key == "checkpoint_every")
      config.checkpoint_every = std::stoull(value);
    else if (key == "output") config.output = value;
    else if (key == "csv") csv_out = value;
    else if (key == "timings") config.timings = value == "1" || value == "true";
    else
      throw srs::Error(path + ":" + std::to_string(line_no) +
                       ": unknown key " + key);
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"stratified random sampling toolkit"};
  app.require_subcommand(1);

  // allocate
  auto* allocate = app.add_subcommand(
      "allocate", "compute an allocation from per-stratum stats");
  std::string alloc_stats, alloc_policy = "voila", alloc_out;
  std::uint64_t alloc_budget = 0;
  allocate->add_option("--stats", alloc_stats,
                       "csv with header stratum,count,sigma")->required();
  allocate->add_option("--policy", alloc_policy,
                       "voila | neyman | neyman_plus | proportional");
  allocate->add_option("--budget", alloc_budget, "total sample size M")
      ->required();
  allocate->add_option("--output", alloc_out, "write JSON here");

  // reduce
  auto* reduce = app.add_subcommand(
      "reduce", "variance-optimal sample size reduction");
  std::string reduce_instance, reduce_method = "fast", reduce_out;
  double reduce_target = 0.0;
  bool reduce_oracle = false;
  reduce->add_option("--instance", reduce_instance,
                     "csv with header stratum,weight,size")->required();
  reduce->add_option("--target", reduce_target, "target total size")
      ->required();
  reduce->add_option("--method", reduce_method, "fast | recursive");
  reduce->add_flag("--oracle", reduce_oracle,
                   "cross-check fast against recursive and the optimality "
                   "certificate");
  reduce->add_option("--output", reduce_out, "write JSON here");

  // sample-offline
  auto* offline = app.add_subcommand(
      "sample-offline", "two-pass stratified sample of a csv dataset");
  srs::SourceSpec off_spec;
  std::string off_kind = "csv";
  add_source_options(offline, off_spec, off_kind);
  std::string off_policy = "voila", off_output, off_alloc_out;
  std::uint64_t off_budget = 0, off_seed = 1;
  offline->add_option("--policy", off_policy);
  offline->add_option("--budget", off_budget)->required();
  offline->add_option("--seed", off_seed);
  offline->add_option("--output", off_output, "sample csv path")->required();
  offline->add_option("--allocation-out", off_alloc_out);

  // stream
  auto* stream = app.add_subcommand(
      "stream", "run a streaming sampler over a source");
  srs::SourceSpec stream_spec;
  std::string stream_kind = "csv";
  add_source_options(stream, stream_spec, stream_kind);
  std::string stream_method = "svoila:1", stream_output, stream_snapshots;
  std::uint64_t stream_budget = 0, stream_seed = 1;
  stream->add_option("--method", stream_method,
                     "svoila[:b|:batch] | reservoir | ssunif[:b]");
  stream->add_option("--budget", stream_budget)->required();
  stream->add_option("--seed", stream_seed);
  stream->add_option("--output", stream_output, "final sample csv path");
  stream->add_option("--snapshots", stream_snapshots,
                     "jsonl of (allocation, stats, variance) per boundary");

  // gen-synthetic
  auto* gen_syn = app.add_subcommand("gen-synthetic",
                                     "write the synthetic Gaussian stream");
  srs::SourceSpec syn_spec;
  std::string syn_kind = "synthetic";
  add_source_options(gen_syn, syn_spec, syn_kind);
  std::string syn_output;
  std::uint64_t syn_seed = 1;
  gen_syn->add_option("--seed", syn_seed);
  gen_syn->add_option("--output", syn_output)->required();

  // gen-adversarial
  auto* gen_adv = app.add_subcommand("gen-adversarial",
                                     "write the hard stream for streaming "
                                     "samplers");
  std::uint64_t adv_r = 4, adv_alpha = 64;
  std::string adv_output;
  gen_adv->add_option("--strata", adv_r);
  gen_adv->add_option("--alpha", adv_alpha);
  gen_adv->add_option("--output", adv_output)->required();

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "relative error of a sample csv against its dataset");
  srs::SourceSpec eval_spec;
  std::string eval_kind = "csv";
  add_source_options(evaluate, eval_spec, eval_kind);
  std::string eval_sample, eval_strata, eval_out;
  evaluate->add_option("--sample", eval_sample, "sample csv path")->required();
  evaluate->add_option("--subset", eval_strata,
                       "comma-separated stratum ids to query");
  evaluate->add_option("--output", eval_out);

  // run
  auto* run = app.add_subcommand("run", "full experiment: methods x seeds");
  srs::ExperimentConfig config;
  std::string run_kind = "synthetic", run_methods, run_seeds = "1";
  std::string run_config_path, run_csv;
  add_source_options(run, config.source, run_kind);
  run->add_option("--config", run_config_path, "key=value config file");
  run->add_option("--methods", run_methods, "comma-separated method list");
  run->add_option("--budget", config.budget);
  run->add_option("--seeds", run_seeds, "comma-separated seed list");
  run->add_option("--checkpoint-every", config.checkpoint_every,
                  "records between checkpoints (0 = every batch)");
  run->add_option("--output", config.output, "jsonl path (default stdout)");
  run->add_option("--csv", run_csv, "also mirror metrics to csv");
  run->add_flag("--timings", config.timings,
                "include wall-clock batch timings in the output");

  CLI11_PARSE(app, argc, argv);

  if (allocate->parsed()) {
    const srs::AllocationInput input =
        read_stats_csv(alloc_stats, alloc_budget);
    const srs::PolicyAllocations allocs =
        srs::policy_allocations(srs::parse_policy(alloc_policy), input);
    json j{{"policy", alloc_policy},
           {"budget", alloc_budget},
           {"real", alloc_to_json(allocs.real)},
           {"integer", alloc_to_json(allocs.integer)},
           {"stored", alloc_to_json(allocs.stored)}};
    emit(j, alloc_out);
    return 0;
  }

  if (reduce->parsed()) {
    const srs::ReductionInstance inst =
        read_instance_csv(reduce_instance, reduce_target);
    srs::Allocation result;
    if (reduce_method == "fast") {
      result = srs::fast_ssr(inst);
    } else if (reduce_method == "recursive") {
      result = srs::ssr(inst);
    } else {
      throw srs::Error("unknown reduce method: " + reduce_method);
    }
    json j{{"target", reduce_target},
           {"method", reduce_method},
           {"sizes", alloc_to_json(result)}};
    if (reduce_oracle) {
      const srs::Allocation other = reduce_method == "fast"
                                        ? srs::ssr(inst)
                                        : srs::fast_ssr(inst);
      double max_delta = 0.0;
      for (const auto& [id, v] : result.entries) {
        max_delta = std::max(max_delta, std::abs(v - other.at(id)));
      }
      const bool certified = srs::kkt_check(inst, result, 1e-6);
      j["oracle"] = {{"max_componentwise_delta", max_delta},
                     {"certified_optimal", certified}};
      if (max_delta > 1e-9 || !certified) {
        std::cerr << "oracle mismatch\n" << j.dump(2) << "\n";
        return 1;
      }
    }
    emit(j, reduce_out);
    return 0;
  }

  if (offline->parsed()) {
    srs::SourceSpec spec = off_spec;
    spec.kind = parse_source_kind(off_kind);
    auto source = srs::make_source(spec, off_seed, srs::MethodSpec::parse("voila"));
    const srs::Dataset data = srs::read_all(*source);
    const srs::PipelineResult result = srs::offline_pipeline(
        data, srs::parse_policy(off_policy), off_budget, off_seed);
    write_sample_csv(result.sample, off_output);
    if (!off_alloc_out.empty()) {
      json j{{"policy", off_policy},
             {"real", alloc_to_json(result.allocations.real)},
             {"integer", alloc_to_json(result.allocations.integer)},
             {"stored", alloc_to_json(result.allocations.stored)}};
      emit(j, off_alloc_out);
    }
    return 0;
  }

  if (stream->parsed()) {
    srs::SourceSpec spec = stream_spec;
    spec.kind = parse_source_kind(stream_kind);
    const srs::MethodSpec method = srs::MethodSpec::parse(stream_method);
    if (!method.streaming()) {
      throw srs::Error("stream needs a streaming method");
    }
    auto source = srs::make_source(spec, stream_seed, method);
    std::unique_ptr<srs::StreamSampler> sampler;
    switch (method.kind) {
      case srs::MethodSpec::Kind::svoila:
        sampler = std::make_unique<srs::SVoilaSampler>(stream_budget,
                                                       stream_seed);
        break;
      case srs::MethodSpec::Kind::reservoir:
        sampler = std::make_unique<srs::ReservoirSampler>(stream_budget,
                                                          stream_seed);
        break;
      default:
        sampler = std::make_unique<srs::SSUnifSampler>(stream_budget,
                                                       stream_seed);
        break;
    }
    std::ofstream snapshots;
    if (!stream_snapshots.empty()) {
      snapshots.open(stream_snapshots);
      if (!snapshots) throw srs::Error("cannot write " + stream_snapshots);
    }
    std::size_t seen = 0;
    while (auto batch = source->next_batch()) {
      sampler->process(*batch);
      seen += batch->size();
      if (snapshots.is_open()) {
        const srs::StratifiedSample snap = sampler->snapshot();
        json stats = json::object();
        for (const auto& [id, st] : snap.stats) {
          stats[id.value] = {{"count", st.count},
                             {"mean", st.mean},
                             {"sigma", st.stddev()}};
        }
        double variance;
        try {
          variance = srs::variance_of_estimate(snap.stats, snap.sizes())
                         .total_variance;
        } catch (const srs::UndefinedVariance&) {
          variance = std::numeric_limits<double>::infinity();
        }
        json alloc = json::object();
        for (const auto& [id, v] : snap.sizes()) alloc[id.value] = v;
        snapshots << json{{"elements_seen", seen},
                          {"allocation", std::move(alloc)},
                          {"stats", std::move(stats)},
                          {"variance", variance}}
                         .dump()
                  << '\n';
      }
    }
    if (!stream_output.empty()) {
      write_sample_csv(sampler->snapshot(), stream_output);
    }
    return 0;
  }

  if (gen_syn->parsed()) {
    srs::SyntheticSource source(syn_spec.synthetic, syn_seed, 1024);
    write_dataset_csv(srs::read_all(source), syn_output);
    return 0;
  }

  if (gen_adv->parsed()) {
    srs::AdversarialSource source(adv_r, adv_alpha, 1024);
    write_dataset_csv(srs::read_all(source), adv_output);
    return 0;
  }

  if (evaluate->parsed()) {
    srs::SourceSpec spec = eval_spec;
    spec.kind = parse_source_kind(eval_kind);
    auto source =
        srs::make_source(spec, 1, srs::MethodSpec::parse("voila"));
    const srs::Dataset data = srs::read_all(*source);

    srs::CsvSchema sample_schema;
    sample_schema.stratum_columns = {"stratum"};
    sample_schema.value_column = "value";
    srs::CsvReplaySource sample_source(eval_sample, sample_schema,
                                       srs::BatchSpec{1024, ""});
    const srs::Dataset sample_records = srs::read_all(sample_source);

    srs::StratifiedSample sample;
    sample.stats = srs::dataset_stats(data);
    for (const auto& rec : sample_records) {
      auto [it, inserted] =
          sample.samples.emplace(rec.stratum, srs::PerStratumSample(rec.stratum));
      it->second.insert({rec.stratum, rec.value, 0.5});
    }
    sample.budget = sample_records.size();

    std::optional<std::set<srs::StratumId>> subset;
    if (!eval_strata.empty()) {
      subset.emplace();
      for (const auto& id : split_list(eval_strata)) {
        subset->insert(srs::StratumId(id));
      }
    }
    const double estimate = srs::estimate_mean(sample, subset);
    const double exact = srs::exact_mean(data, subset);
    json j{{"estimate", estimate},
           {"exact", exact},
           {"relative_error", srs::relative_error(estimate, exact)}};
    emit(j, eval_out);
    return 0;
  }

  if (run->parsed()) {
    std::string run_csv_from_config;
    if (!run_config_path.empty()) {
      apply_config_file(run_config_path, config, run_kind, run_methods,
                        run_seeds, run_csv_from_config);
    }
    if (run_csv.empty()) run_csv = run_csv_from_config;
    config.source.kind = parse_source_kind(run_kind);
    for (const auto& token : split_list(run_methods)) {
      config.methods.push_back(srs::MethodSpec::parse(token));
    }
    config.seeds.clear();
    for (const auto& token : split_list(run_seeds)) {
      config.seeds.push_back(std::stoull(token));
    }
    const std::vector<srs::MetricsRecord> records =
        srs::run_experiment(config);
    if (config.output.empty()) {
      srs::write_jsonl(records, std::cout, config.timings);
    } else {
      std::ofstream out(config.output);
      if (!out) throw srs::Error("cannot write " + config.output);
      srs::write_jsonl(records, out, config.timings);
    }
    if (!run_csv.empty()) {
      std::ofstream out(run_csv);
      if (!out) throw srs::Error("cannot write " + run_csv);
      srs::write_csv(records, out, config.timings);
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
