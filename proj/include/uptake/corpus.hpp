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

// Transcript/annotation loading, (student, teacher) pair extraction with the
// length and audio-quality filters, and aggregation of rater judgments into
// per-pair gold labels.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "uptake/csv.hpp"
#include "uptake/error.hpp"
#include "uptake/format.hpp"
#include "uptake/textprep.hpp"

namespace uptake {

enum class Role { student, teacher };

inline Role role_from_string(std::string_view s) {
  const std::string lc = ascii_lower(s);
  if (lc == "student") return Role::student;
  if (lc == "teacher") return Role::teacher;
  throw error("unknown speaker role \"" + std::string(s) + "\"");
}

inline const char* role_name(Role r) {
  return r == Role::student ? "student" : "teacher";
}

struct Utterance {
  Role speaker_role = Role::student;
  std::string text;
  int turn_index = 0;
};

struct Transcript {
  std::string id;
  std::vector<Utterance> utterances;  // ordered by turn_index
};

struct ExchangePair {
  std::string id;            // unique; "<transcript>:<student turn>"
  std::string source;        // dataset tag, e.g. "ncte"
  std::string conversation;  // transcript the pair came from
  Utterance s;
  Utterance t;
  std::vector<Utterance> context;  // up to 2 utterances preceding s
};

struct RaterJudgment {
  std::string rater_id;
  std::string pair_id;
  bool on_topic = false;
  std::optional<int> level;  // 0=low 1=mid 2=high; set only when on_topic
};

struct GoldLabel {
  std::string pair_id;
  double value = 0.0;  // mean of per-rater z-scores
  int n_raters = 0;
};

enum class TranscriptFormat { jsonl, csv };

namespace detail {

inline bool all_whitespace(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

struct TranscriptBuilder {
  std::vector<Transcript> transcripts;
  std::unordered_map<std::string, std::size_t> index;

  void add(const std::string& transcript_id, int turn, std::string_view role,
           const std::string& text, std::size_t line) {
    if (all_whitespace(text)) {
      throw parse_error("utterance text is empty", line);
    }
    if (turn < 0) throw parse_error("turn index is negative", line);
    Role r;
    try {
      r = role_from_string(role);
    } catch (const error& e) {
      throw parse_error(e.what(), line);
    }
    auto [it, fresh] = index.emplace(transcript_id, transcripts.size());
    if (fresh) transcripts.push_back(Transcript{transcript_id, {}});
    transcripts[it->second].utterances.push_back(Utterance{r, text, turn});
  }

  std::vector<Transcript> finish() {
    for (auto& tr : transcripts) {
      std::stable_sort(tr.utterances.begin(), tr.utterances.end(),
                       [](const Utterance& a, const Utterance& b) {
                         return a.turn_index < b.turn_index;
                       });
      for (std::size_t i = 1; i < tr.utterances.size(); ++i) {
        if (tr.utterances[i].turn_index == tr.utterances[i - 1].turn_index) {
          throw error("duplicate turn " +
                      std::to_string(tr.utterances[i].turn_index) +
                      " in transcript \"" + tr.id + "\"");
        }
      }
    }
    return std::move(transcripts);
  }
};

}  // namespace detail

inline std::vector<Transcript> load_transcripts(std::istream& in,
                                                TranscriptFormat format) {
  detail::TranscriptBuilder builder;
  if (format == TranscriptFormat::jsonl) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::all_whitespace(line)) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad JSON: ") + e.what(), lineno);
      }
      try {
        builder.add(obj.at("transcript_id").get<std::string>(),
                    obj.at("turn").get<int>(),
                    obj.at("role").get<std::string>(),
                    obj.at("text").get<std::string>(), lineno);
      } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad transcript record: ") + e.what(),
                          lineno);
      }
    }
  } else {
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) return {};
    std::map<std::string, std::size_t> cols;
    for (std::size_t i = 0; i < row.size(); ++i) cols[row[i]] = i;
    for (const char* need : {"transcript_id", "turn", "role", "text"}) {
      if (!cols.count(need)) {
        throw parse_error(std::string("missing column \"") + need + "\"",
                          reader.line());
      }
    }
    while (reader.next(row)) {
      if (row.size() == 1 && row[0].empty()) continue;  // blank line
      if (row.size() < cols.size()) {
        throw parse_error("short row", reader.line());
      }
      builder.add(row[cols["transcript_id"]],
                  static_cast<int>(parse_int(row[cols["turn"]], "turn")),
                  row[cols["role"]], row[cols["text"]], reader.line());
    }
  }
  return builder.finish();
}

inline std::vector<Transcript> load_transcripts(const std::string& path,
                                                TranscriptFormat format) {
  std::ifstream in(path);
  if (!in) throw error("cannot open transcript file: " + path);
  return load_transcripts(in, format);
}

/// True when the pair would survive extraction: s long enough and neither
/// utterance carrying the inaudible marker (case-sensitive substring).
inline bool pair_passes_filters(const ExchangePair& p,
                                int min_s_tokens = 5,
                                std::string_view marker = kInaudibleMarker) {
  if (p.s.text.find(marker) != std::string::npos) return false;
  if (p.t.text.find(marker) != std::string::npos) return false;
  return count_non_punct(tokenize(p.s.text, marker)) >=
         static_cast<std::size_t>(min_s_tokens);
}

/// Every adjacent (student, teacher) turn pair passing the filters. A run of
/// student turns contributes only its final turn. Context carries up to the
/// two utterances immediately preceding s.
inline std::vector<ExchangePair> extract_pairs(
    const std::vector<Transcript>& transcripts, int min_s_tokens = 5,
    std::string_view marker = kInaudibleMarker,
    std::string_view source = "default") {
  std::vector<ExchangePair> pairs;
  for (const auto& tr : transcripts) {
    const auto& u = tr.utterances;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      if (u[i].speaker_role != Role::student ||
          u[i + 1].speaker_role != Role::teacher) {
        continue;
      }
      ExchangePair p;
      p.id = tr.id + ":" + std::to_string(u[i].turn_index);
      p.source = std::string(source);
      p.conversation = tr.id;
      p.s = u[i];
      p.t = u[i + 1];
      if (i >= 2) p.context.push_back(u[i - 2]);
      if (i >= 1) p.context.push_back(u[i - 1]);
      if (pair_passes_filters(p, min_s_tokens, marker)) {
        pairs.push_back(std::move(p));
      }
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Pair interchange (JSONL)

inline void write_pairs_jsonl(std::ostream& out,
                              const std::vector<ExchangePair>& pairs) {
  for (const auto& p : pairs) {
    nlohmann::json obj;
    obj["id"] = p.id;
    obj["source"] = p.source;
    obj["s"] = p.s.text;
    obj["t"] = p.t.text;
    auto ctx = nlohmann::json::array();
    for (const auto& c : p.context) ctx.push_back(c.text);
    obj["context"] = std::move(ctx);
    if (!p.conversation.empty()) obj["conversation"] = p.conversation;
    out << obj.dump() << '\n';
  }
}

/// Reloaded pairs carry text only: roles are restored from the pair shape
/// and turn indices are synthesized (context, s, t in order).
inline std::vector<ExchangePair> read_pairs_jsonl(std::istream& in) {
  std::vector<ExchangePair> pairs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::all_whitespace(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("bad JSON: ") + e.what(), lineno);
    }
    try {
      ExchangePair p;
      p.id = obj.at("id").get<std::string>();
      p.source = obj.at("source").get<std::string>();
      p.conversation = obj.value("conversation", std::string());
      int turn = 0;
      if (obj.contains("context")) {
        for (const auto& c : obj.at("context")) {
          p.context.push_back(
              Utterance{Role::teacher, c.get<std::string>(), turn++});
        }
      }
      p.s = Utterance{Role::student, obj.at("s").get<std::string>(), turn++};
      p.t = Utterance{Role::teacher, obj.at("t").get<std::string>(), turn++};
      if (!seen.insert(p.id).second) {
        throw parse_error("duplicate pair id \"" + p.id + "\"", lineno);
      }
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("bad pair record: ") + e.what(), lineno);
    }
  }
  return pairs;
}

inline std::vector<ExchangePair> read_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open pair file: " + path);
  return read_pairs_jsonl(in);
}

// ---------------------------------------------------------------------------
// Annotations

inline std::vector<RaterJudgment> load_annotations(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  const std::vector<std::string> expected = {"rater_id", "pair_id", "on_topic",
                                             "level"};
  std::map<std::string, std::size_t> cols;
  for (std::size_t i = 0; i < row.size(); ++i) cols[row[i]] = i;
  for (const auto& need : expected) {
    if (!cols.count(need)) {
      throw parse_error("missing column \"" + need + "\"", reader.line());
    }
  }
  std::vector<RaterJudgment> out;
  std::set<std::pair<std::string, std::string>> seen;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() < cols.size()) throw parse_error("short row", reader.line());
    RaterJudgment j;
    j.rater_id = row[cols["rater_id"]];
    j.pair_id = row[cols["pair_id"]];
    const std::string& topic = row[cols["on_topic"]];
    if (topic == "true") {
      j.on_topic = true;
    } else if (topic == "false") {
      j.on_topic = false;
    } else {
      throw parse_error("bad on_topic value \"" + topic + "\"", reader.line());
    }
    const std::string& level = row[cols["level"]];
    if (j.on_topic) {
      if (level == "low") j.level = 0;
      else if (level == "mid") j.level = 1;
      else if (level == "high") j.level = 2;
      else throw parse_error("unknown level \"" + level + "\"", reader.line());
    } else if (!level.empty()) {
      throw parse_error("level must be empty when on_topic is false",
                        reader.line());
    }
    if (!seen.emplace(j.rater_id, j.pair_id).second) {
      throw parse_error(
          "duplicate judgment for rater \"" + j.rater_id + "\" on pair \"" +
              j.pair_id + "\"",
          reader.line());
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline std::vector<RaterJudgment> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open annotation file: " + path);
  return load_annotations(in);
}

// ---------------------------------------------------------------------------
// Gold-label aggregation

struct AggregateResult {
  std::vector<GoldLabel> labels;  // sorted by pair_id
  std::vector<std::string> warnings;
};

/// Drops every pair with an off-topic vote, z-scores each rater's levels
/// over their retained judgments (sample SD), and averages the z-scores per
/// pair. A rater with no variance contributes 0 and triggers a warning.
inline AggregateResult aggregate_labels(
    const std::vector<RaterJudgment>& judgments) {
  AggregateResult result;

  std::unordered_set<std::string> off_topic;
  for (const auto& j : judgments) {
    if (!j.on_topic) off_topic.insert(j.pair_id);
  }

  // rater -> retained (pair, level), in input order
  std::map<std::string, std::vector<std::pair<std::string, int>>> by_rater;
  for (const auto& j : judgments) {
    if (!j.on_topic || off_topic.count(j.pair_id)) continue;
    by_rater[j.rater_id].emplace_back(j.pair_id, *j.level);
  }

  std::map<std::string, std::pair<double, int>> sums;  // pair -> (sum z, n)
  for (const auto& [rater, items] : by_rater) {
    const std::size_t n = items.size();
    double mean = 0.0;
    for (const auto& [pid, level] : items) mean += level;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& [pid, level] : items) {
      var += (level - mean) * (level - mean);
    }
    const double sd =
        n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    if (sd == 0.0) {
      result.warnings.push_back("rater \"" + rater +
                                "\" has zero variance; z-scores set to 0");
    }
    for (const auto& [pid, level] : items) {
      const double z = sd == 0.0 ? 0.0 : (level - mean) / sd;
      auto& slot = sums[pid];
      slot.first += z;
      slot.second += 1;
    }
  }

  result.labels.reserve(sums.size());
  for (const auto& [pid, acc] : sums) {
    result.labels.push_back(
        GoldLabel{pid, acc.first / acc.second, acc.second});
  }
  return result;
}

}  // namespace uptake
