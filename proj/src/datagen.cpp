#include "srs/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "srs/errors.hpp"

namespace srs {

Dataset read_all(StreamSource& source) {
  source.reset();
  Dataset out;
  while (auto batch = source.next_batch()) {
    out.insert(out.end(), batch->begin(), batch->end());
  }
  return out;
}

Dataset read_prefix(StreamSource& source, std::size_t count) {
  source.reset();
  Dataset out;
  while (out.size() < count) {
    auto batch = source.next_batch();
    if (!batch) break;
    for (auto& rec : *batch) {
      if (out.size() >= count) break;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

namespace {

// One CSV row; supports quoted fields with embedded commas and "" escapes.
std::vector<std::string> split_csv_row(const std::string& line,
                                       std::size_t line_number) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (field.empty()) {
        quoted = true;
      } else {
        field.push_back(c);
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw ParseError("line " + std::to_string(line_number) +
                     ": unterminated quote");
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

CsvReplaySource::CsvReplaySource(const std::string& path, CsvSchema schema,
                                 BatchSpec batch)
    : batch_(std::move(batch)) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_row(line, 1);

  const auto column_index = [&header](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw MissingColumn("no column named " + name);
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> stratum_cols;
  for (const auto& name : schema.stratum_columns) {
    stratum_cols.push_back(column_index(name));
  }
  if (stratum_cols.empty()) throw MissingColumn("no stratum columns given");
  const std::size_t value_col = column_index(schema.value_column);
  std::size_t bucket_col = 0;
  if (batch_.bucketed()) bucket_col = column_index(batch_.bucket_column);

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line, line_number);
    const std::size_t needed =
        std::max({*std::max_element(stratum_cols.begin(), stratum_cols.end()),
                  value_col, batch_.bucketed() ? bucket_col : 0});
    if (fields.size() <= needed) {
      throw ParseError("line " + std::to_string(line_number) +
                       ": too few fields");
    }
    std::string id;
    for (std::size_t i = 0; i < stratum_cols.size(); ++i) {
      if (i > 0) id.push_back('|');
      id += fields[stratum_cols[i]];
    }
    const std::string& raw = fields[value_col];
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc() || ptr != raw.data() + raw.size()) {
      throw ParseError("line " + std::to_string(line_number) +
                       ": cannot parse value '" + raw + "'");
    }
    records_.push_back({StratumId(id), value});
    if (batch_.bucketed()) buckets_.push_back(fields[bucket_col]);
  }
}

std::optional<Minibatch> CsvReplaySource::next_batch() {
  if (position_ >= records_.size()) return std::nullopt;
  Minibatch batch;
  if (batch_.bucketed()) {
    const std::string& bucket = buckets_[position_];
    while (position_ < records_.size() && buckets_[position_] == bucket) {
      batch.push_back(records_[position_++]);
    }
  } else {
    const std::size_t take =
        std::min(batch_.fixed_size, records_.size() - position_);
    for (std::size_t i = 0; i < take; ++i) {
      batch.push_back(records_[position_++]);
    }
  }
  return batch;
}

SyntheticSource::SyntheticSource(SyntheticConfig config, std::uint64_t seed,
                                 std::size_t batch_size)
    : config_(config), seed_(seed), batch_size_(batch_size), rng_(seed) {
  if (config_.num_strata == 0) throw Error("num_strata must be at least 1");
  if (config_.changed_stratum < 1 ||
      config_.changed_stratum > config_.num_strata) {
    throw Error("changed_stratum out of range");
  }
  if (config_.change_at > config_.total_records) {
    throw Error("change_at beyond total_records");
  }
  if (batch_size_ == 0) throw Error("batch size must be at least 1");
}

void SyntheticSource::reset() {
  position_ = 0;
  rng_ = Rng(seed_);
}

std::optional<Minibatch> SyntheticSource::next_batch() {
  if (position_ >= config_.total_records) return std::nullopt;
  Minibatch batch;
  while (position_ < config_.total_records && batch.size() < batch_size_) {
    const std::uint64_t stratum = position_ % config_.num_strata + 1;
    const bool changed =
        stratum == config_.changed_stratum && position_ >= config_.change_at;
    const double sigma = changed ? config_.changed_sigma : config_.base_sigma;
    batch.push_back(
        {StratumId::of(stratum), rng_.gaussian(config_.mean, sigma)});
    ++position_;
  }
  return batch;
}

AdversarialSource::AdversarialSource(std::uint64_t num_strata,
                                     std::uint64_t alpha,
                                     std::size_t batch_size)
    : num_strata_(num_strata), alpha_(alpha), batch_size_(batch_size) {
  if (num_strata_ < 2) throw Error("need at least 2 strata");
  if (alpha_ < 3) throw Error("alpha must be at least 3");
  if (batch_size_ == 0) throw Error("batch size must be at least 1");
}

Record AdversarialSource::record_at(std::uint64_t index) const {
  const double eps = 1.0 / static_cast<double>(num_strata_ - 1);
  if (index == num_strata_ * alpha_) {
    return {StratumId::of(1), 2.0 - eps};  // the closing spike in stratum 1
  }
  const std::uint64_t stratum = index / alpha_ + 1;
  const std::uint64_t offset = index % alpha_;
  const double base = static_cast<double>(stratum);
  return {StratumId::of(stratum), offset == 0 ? base + eps : base};
}

std::optional<Minibatch> AdversarialSource::next_batch() {
  const std::uint64_t total = record_count();
  if (position_ >= total) return std::nullopt;
  Minibatch batch;
  while (position_ < total && batch.size() < batch_size_) {
    batch.push_back(record_at(position_++));
  }
  return batch;
}

}  // namespace srs
