/*
 * Copyright 2026 the uptake authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Shared on-disk formats: score tables, gold labels, agreement matrices,
// dialog-act tags, and the per-run manifest written next to every output.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uptake/corpus.hpp"
#include "uptake/csv.hpp"
#include "uptake/error.hpp"
#include "uptake/format.hpp"
#include "uptake/prng.hpp"
#include "uptake/similarity.hpp"
#include "uptake/version.hpp"

namespace uptake {

// ---------------------------------------------------------------------------
// ScoreTable CSV: header pair_id,<metric>...; missing cells stay empty.

inline void write_score_table(std::ostream& out, const ScoreTable& table) {
  std::vector<std::string> header = {"pair_id"};
  header.insert(header.end(), table.metric_names.begin(),
                table.metric_names.end());
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < table.pair_ids.size(); ++r) {
    row.clear();
    row.push_back(table.pair_ids[r]);
    for (const auto& cell : table.cells[r]) {
      row.push_back(cell ? format_double(*cell) : std::string());
    }
    write_csv_row(out, row);
  }
}

inline void write_score_table(const std::string& path,
                              const ScoreTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write score table: " + path);
  write_score_table(out, table);
}

inline ScoreTable read_score_table(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw error("empty score table");
  if (row.empty() || row[0] != "pair_id") {
    throw parse_error("score table header must start with pair_id",
                      reader.line());
  }
  ScoreTable table;
  table.metric_names.assign(row.begin() + 1, row.end());
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != table.metric_names.size() + 1) {
      throw parse_error("row has " + std::to_string(row.size()) +
                            " fields, expected " +
                            std::to_string(table.metric_names.size() + 1),
                        reader.line());
    }
    table.pair_ids.push_back(row[0]);
    std::vector<std::optional<double>> cells;
    cells.reserve(table.metric_names.size());
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) {
        cells.emplace_back();
      } else {
        cells.emplace_back(parse_double(row[c], "score"));
      }
    }
    table.cells.push_back(std::move(cells));
  }
  return table;
}

inline ScoreTable read_score_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open score table: " + path);
  return read_score_table(in);
}

// ---------------------------------------------------------------------------
// Gold labels CSV: pair_id,value,n_raters

inline void write_gold_labels(std::ostream& out,
                              const std::vector<GoldLabel>& labels) {
  write_csv_row(out, {"pair_id", "value", "n_raters"});
  for (const auto& l : labels) {
    write_csv_row(out,
                  {l.pair_id, format_double(l.value), std::to_string(l.n_raters)});
  }
}

inline void write_gold_labels(const std::string& path,
                              const std::vector<GoldLabel>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot write labels: " + path);
  write_gold_labels(out, labels);
}

inline std::vector<GoldLabel> read_gold_labels(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  if (row.size() < 3 || row[0] != "pair_id" || row[1] != "value" ||
      row[2] != "n_raters") {
    throw parse_error("expected header pair_id,value,n_raters", reader.line());
  }
  std::vector<GoldLabel> labels;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 3) throw parse_error("short row", reader.line());
    GoldLabel l;
    l.pair_id = row[0];
    l.value = parse_double(row[1], "label value");
    l.n_raters = static_cast<int>(parse_int(row[2], "n_raters"));
    labels.push_back(std::move(l));
  }
  return labels;
}

inline std::vector<GoldLabel> read_gold_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open labels: " + path);
  return read_gold_labels(in);
}

// ---------------------------------------------------------------------------
// Agreement CSV: rater_id,pair_id,z -> rater -> item -> z

inline std::map<std::string, std::map<std::string, double>> read_agreement_csv(
    std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  if (row.size() < 3 || row[0] != "rater_id" || row[1] != "pair_id" ||
      row[2] != "z") {
    throw parse_error("expected header rater_id,pair_id,z", reader.line());
  }
  std::map<std::string, std::map<std::string, double>> out;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 3) throw parse_error("short row", reader.line());
    auto& items = out[row[0]];
    if (!items.emplace(row[1], parse_double(row[2], "z")).second) {
      throw parse_error("duplicate z for rater \"" + row[0] + "\" pair \"" +
                            row[1] + "\"",
                        reader.line());
    }
  }
  return out;
}

inline std::map<std::string, std::map<std::string, double>> read_agreement_csv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open agreement file: " + path);
  return read_agreement_csv(in);
}

// ---------------------------------------------------------------------------
// Dialog-act tags CSV: pair_id,tag

inline std::map<std::string, std::string> read_tags_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  if (row.size() < 2 || row[0] != "pair_id" || row[1] != "tag") {
    throw parse_error("expected header pair_id,tag", reader.line());
  }
  std::map<std::string, std::string> out;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < 2) throw parse_error("short row", reader.line());
    if (!out.emplace(row[0], row[1]).second) {
      throw parse_error("duplicate tag for pair \"" + row[0] + "\"",
                        reader.line());
    }
  }
  return out;
}

inline std::map<std::string, std::string> read_tags_csv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open tag file: " + path);
  return read_tags_csv(in);
}

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> input_paths;
  std::vector<std::string> output_paths;
  std::string tool_version = kVersion;
  std::string timestamp;  // UTC, ISO 8601
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

/// Honors SOURCE_DATE_EPOCH (the reproducible-builds convention) so runs
/// can be made byte-identical end to end.
inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Hash of the command, the canonical (sorted) settings, the seed, and the
/// bytes of every input file: equal configuration + seed + inputs gives an
/// equal hash regardless of flag order or job count.
inline std::string compute_config_hash(
    const std::string& command,
    const std::map<std::string, std::string>& settings, std::uint64_t seed,
    const std::vector<std::string>& input_paths) {
  std::string canon = command;
  canon += '\x1e';
  canon += "seed=" + std::to_string(seed);
  for (const auto& [key, value] : settings) {
    canon += '\x1e';
    canon += key;
    canon += '=';
    canon += value;
  }
  std::uint64_t h = fnv1a64(canon);
  for (const auto& path : input_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open input for hashing: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    h = h * 0x100000001B3ULL ^ fnv1a64(bytes);
  }
  return hex64(h);
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json obj;
  obj["command"] = m.command;
  obj["config_hash"] = m.config_hash;
  obj["seed"] = m.seed;
  obj["input_paths"] = m.input_paths;
  obj["output_paths"] = m.output_paths;
  obj["tool_version"] = m.tool_version;
  obj["timestamp"] = m.timestamp;
  return obj;
}

/// Writes `<output>.manifest.json` beside every declared output.
inline void write_manifests(const RunManifest& m) {
  const std::string body = manifest_to_json(m).dump(2) + "\n";
  for (const auto& path : m.output_paths) {
    const std::string manifest_path = path + ".manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw error("cannot write manifest: " + manifest_path);
    out << body;
  }
}

}  // namespace uptake
