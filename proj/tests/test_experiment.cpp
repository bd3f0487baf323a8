#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srs/errors.hpp"
#include "srs/experiment.hpp"

using srs::ExperimentConfig;
using srs::MethodSpec;
using srs::MetricsRecord;
using srs::StratumId;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig config;
  config.source.kind = srs::SourceSpec::Kind::synthetic;
  config.source.synthetic.num_strata = 5;
  config.source.synthetic.changed_stratum = 3;
  config.source.synthetic.change_at = 2000;
  config.source.synthetic.total_records = 6000;
  config.budget = 100;
  config.seeds = {1, 2};
  config.checkpoint_every = 1000;
  return config;
}

std::string jsonl_of(const ExperimentConfig& config) {
  std::ostringstream os;
  srs::write_jsonl(srs::run_experiment(config), os, config.timings);
  return os.str();
}

int run_cli(const std::string& args, std::string& out) {
  const auto path = std::filesystem::temp_directory_path() / "srs_cli_out.txt";
  const std::string cmd =
      std::string(SRS_CLI_BIN) + " " + args + " > " + path.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return rc;
}

}  // namespace

TEST_CASE("method tokens parse and print consistently") {
  CHECK(MethodSpec::parse("svoila:100").batch_size == 100);
  CHECK(MethodSpec::parse("svoila:100").name() == "svoila:100");
  CHECK(MethodSpec::parse("svoila").name() == "svoila:1");
  CHECK(MethodSpec::parse("svoila:batch").source_batches);
  CHECK(MethodSpec::parse("neyman_plus").offline());
  CHECK(MethodSpec::parse("reservoir").streaming());
  CHECK(MethodSpec::parse("ssunif:50").batch_size == 50);
  CHECK_THROWS_AS(MethodSpec::parse("bogus"), srs::Error);
  CHECK_THROWS_AS(MethodSpec::parse("neyman:5"), srs::Error);
}

TEST_CASE("one method and one checkpoint produce exactly one line") {
  ExperimentConfig config = small_config();
  config.source.synthetic.total_records = 500;
  config.source.synthetic.change_at = 400;
  config.checkpoint_every = 500;
  config.methods = {MethodSpec::parse("voila")};
  config.seeds = {7};
  const auto records = srs::run_experiment(config);
  REQUIRE(records.size() == 1);
  CHECK(records[0].method == "voila");
  CHECK(records[0].elements_seen == 500);
  CHECK(records[0].cosine_to_voila <= 1e-3);  // integer rounding only
  CHECK(records[0].variance >= 0.0);
}

TEST_CASE("invalid configurations are rejected") {
  ExperimentConfig config = small_config();
  CHECK_THROWS_AS(srs::run_experiment(config), srs::Error);  // no methods
  config.methods = {MethodSpec::parse("voila")};
  config.seeds.clear();
  CHECK_THROWS_AS(srs::run_experiment(config), srs::Error);
  config.seeds = {1};
  config.budget = 0;
  CHECK_THROWS_AS(srs::run_experiment(config), srs::Error);
}

TEST_CASE("metrics are deterministic for a fixed configuration") {
  ExperimentConfig config = small_config();
  config.methods = {MethodSpec::parse("svoila:10"),
                    MethodSpec::parse("voila")};
  const std::string a = jsonl_of(config);
  const std::string b = jsonl_of(config);
  CHECK(a == b);
  CHECK(a.find("\"method\":\"svoila:10\"") != std::string::npos);
}

TEST_CASE("the optimal allocation reacts to the planted change") {
  ExperimentConfig config = small_config();
  config.methods = {MethodSpec::parse("voila")};
  config.seeds = {3};
  const auto records = srs::run_experiment(config);
  REQUIRE(records.size() == 6);
  const auto share = [&](const MetricsRecord& rec) {
    double total = 0.0;
    for (const auto& [id, v] : rec.allocation) total += v;
    return rec.allocation.at(StratumId::of(3)) / total;
  };
  CHECK(share(records[0]) < 0.3);       // before the change: ~1/5
  CHECK(share(records[4]) > 2 * share(records[0]));  // after: dominates
}

TEST_CASE("streaming methods report sane aggregated metrics") {
  ExperimentConfig config = small_config();
  config.methods = {MethodSpec::parse("svoila:25"),
                    MethodSpec::parse("reservoir"),
                    MethodSpec::parse("ssunif:25")};
  const auto records = srs::run_experiment(config);
  REQUIRE(records.size() == 18);
  for (const auto& rec : records) {
    double total = 0.0;
    for (const auto& [id, v] : rec.allocation) total += v;
    CHECK(total == doctest::Approx(100.0));
    if (std::isfinite(rec.cosine_to_voila)) {
      CHECK(rec.cosine_to_voila >= 0.0);
      CHECK(rec.cosine_to_voila <= 1.0);
    }
    if (std::isfinite(rec.variance)) CHECK(rec.variance >= 0.0);
  }
}

TEST_CASE("cli: reduce reproduces the worked reduction") {
  const auto inst = std::filesystem::temp_directory_path() / "srs_inst.csv";
  {
    std::ofstream out(inst);
    out << "stratum,weight,size\n";
    out << "01,10000,100\n";
    for (int i = 2; i <= 10; ++i) {
      out << (i < 10 ? "0" : "") << i << ",100,1000\n";
    }
  }
  std::string out;
  const int rc = run_cli("reduce --instance " + inst.string() +
                             " --target 1000 --oracle",
                         out);
  CHECK(rc == 0);
  CHECK(out.find("\"01\": 100.0") != std::string::npos);
  CHECK(out.find("\"certified_optimal\": true") != std::string::npos);
}

TEST_CASE("cli: allocate reproduces the worked allocations") {
  const auto stats = std::filesystem::temp_directory_path() / "srs_stats.csv";
  {
    std::ofstream out(stats);
    out << "stratum,count,sigma\n";
    out << "01,100,100\n";
    for (int i = 2; i <= 10; ++i) {
      out << (i < 10 ? "0" : "") << i << ",1000,0.1\n";
    }
  }
  std::string out;
  int rc = run_cli(
      "allocate --stats " + stats.string() + " --policy neyman --budget 1000",
      out);
  CHECK(rc == 0);
  CHECK(out.find("\"01\": 917.0") != std::string::npos);
  CHECK(out.find("\"02\": 9.0") != std::string::npos);

  rc = run_cli(
      "allocate --stats " + stats.string() + " --policy voila --budget 1000",
      out);
  CHECK(rc == 0);
  CHECK(out.find("\"01\": 100.0") != std::string::npos);
  CHECK(out.find("\"02\": 100.0") != std::string::npos);
}

TEST_CASE("cli: run without methods fails with a usage error") {
  std::string out;
  const int rc = run_cli("run --source synthetic --budget 50 --seeds 1", out);
  CHECK(rc != 0);
  CHECK(out.find("error") != std::string::npos);
}

TEST_CASE("cli: generated streams round-trip through evaluation") {
  const auto data = std::filesystem::temp_directory_path() / "srs_adv.csv";
  const auto sample = std::filesystem::temp_directory_path() / "srs_sample.csv";
  std::string out;
  int rc = run_cli(
      "gen-adversarial --strata 4 --alpha 8 --output " + data.string(), out);
  REQUIRE(rc == 0);
  rc = run_cli("sample-offline --source csv --data " + data.string() +
                   " --stratum-column stratum --value-column value "
                   "--policy voila --budget 33 --seed 3 --output " +
                   sample.string(),
               out);
  REQUIRE(rc == 0);  // budget covers the whole stream: census sample
  rc = run_cli("evaluate --source csv --data " + data.string() +
                   " --stratum-column stratum --value-column value --sample " +
                   sample.string(),
               out);
  REQUIRE(rc == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["relative_error"].get<double>() < 1e-12);  // census sample
}

TEST_CASE("cli: stream determinism end to end") {
  const auto out1 = std::filesystem::temp_directory_path() / "srs_run1.jsonl";
  const auto out2 = std::filesystem::temp_directory_path() / "srs_run2.jsonl";
  const std::string base =
      "run --source synthetic --num-strata 4 --changed-stratum 2 "
      "--change-at 300 --total-records 900 --budget 60 "
      "--methods svoila:10,reservoir --seeds 4,5 --checkpoint-every 300 ";
  std::string out;
  REQUIRE(run_cli(base + "--output " + out1.string(), out) == 0);
  REQUIRE(run_cli(base + "--output " + out2.string(), out) == 0);
  std::ifstream f1(out1), f2(out2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  REQUIRE(!s1.str().empty());
  CHECK(s1.str() == s2.str());
}

TEST_CASE("cli: config files mirror the flag surface") {
  const auto cfg = std::filesystem::temp_directory_path() / "srs_run.cfg";
  const auto out_path = std::filesystem::temp_directory_path() / "srs_cfg.jsonl";
  {
    std::ofstream f(cfg);
    f << "# tiny scenario\n";
    f << "source=synthetic\n";
    f << "num_strata=4\n";
    f << "changed_stratum=2\n";
    f << "changed_sigma=10\n";
    f << "change_at=400\n";
    f << "total_records=1200\n";
    f << "methods=voila,svoila:10\n";
    f << "budget=60\n";
    f << "seeds=1,2\n";
    f << "checkpoint_every=400\n";
    f << "output=" << out_path.string() << "\n";
  }
  std::string out;
  REQUIRE(run_cli("run --config " + cfg.string(), out) == 0);
  std::ifstream in(out_path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("method"));
    CHECK(j.contains("variance"));
    CHECK(j.contains("cosine_to_voila"));
    CHECK(j.contains("relative_error"));
    CHECK(j.contains("allocation"));
    CHECK_FALSE(j.contains("batch_seconds"));  // timings are opt-in
    ++lines;
  }
  CHECK(lines == 6);  // 3 checkpoints x 2 methods

  const auto bad = std::filesystem::temp_directory_path() / "srs_bad.cfg";
  {
    std::ofstream f(bad);
    f << "nonsense_key=1\n";
  }
  CHECK(run_cli("run --config " + bad.string(), out) != 0);
}

TEST_CASE("cli: streaming snapshots expose allocation, stats, and variance") {
  const auto snaps = std::filesystem::temp_directory_path() / "srs_snaps.jsonl";
  std::string out;
  REQUIRE(run_cli("stream --source synthetic --num-strata 3 "
                  "--changed-stratum 1 --change-at 600 --total-records 600 "
                  "--method svoila:50 --budget 40 --seed 2 --snapshots " +
                      snaps.string(),
                  out) == 0);
  std::ifstream in(snaps);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++lines;
    double total = 0.0;
    for (const auto& [id, v] : j["allocation"].items()) {
      total += v.get<double>();
    }
    if (j["elements_seen"].get<int>() >= 40) {
      CHECK(total == doctest::Approx(40.0));  // budget exact at boundaries
    }
    CHECK(j["stats"].size() == 3);
  }
  CHECK(lines == 12);  // 600 records in batches of 50
}

TEST_CASE("cli: synthetic generation round-robins the strata") {
  const auto path = std::filesystem::temp_directory_path() / "srs_syn.csv";
  std::string out;
  REQUIRE(run_cli("gen-synthetic --num-strata 3 --total-records 9 "
                  "--change-at 9 --changed-stratum 1 --seed 5 --output " +
                      path.string(),
                  out) == 0);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "stratum,value");
  int row = 0;
  while (std::getline(in, line)) {
    const std::string expect = std::to_string(row % 3 + 1) + ",";
    CHECK(line.substr(0, 2) == expect);
    ++row;
  }
  CHECK(row == 9);
}

TEST_CASE("source-defined minibatches drive the batch sampler") {
  const auto path = std::filesystem::temp_directory_path() / "srs_days2.csv";
  {
    std::ofstream f(path);
    f << "stratum,value,day\n";
    int day = 0;
    for (int i = 0; i < 90; ++i) {
      if (i % 30 == 0) ++day;
      f << (i % 3) << ',' << i << ",d" << day << '\n';
    }
  }
  ExperimentConfig config;
  config.source.kind = srs::SourceSpec::Kind::csv;
  config.source.path = path.string();
  config.source.schema.stratum_columns = {"stratum"};
  config.source.schema.value_column = "value";
  config.source.batch.bucket_column = "day";
  config.budget = 12;
  config.seeds = {11};
  config.checkpoint_every = 0;  // one checkpoint per source batch
  config.methods = {MethodSpec::parse("svoila:batch")};
  const auto records = srs::run_experiment(config);
  REQUIRE(records.size() == 3);  // three day-buckets of 30 records
  CHECK(records[0].elements_seen == 30);
  CHECK(records[2].elements_seen == 90);
  for (const auto& rec : records) {
    double total = 0.0;
    for (const auto& [id, v] : rec.allocation) total += v;
    CHECK(total == doctest::Approx(12.0));
  }
}
