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

// Pretrained word vectors, externally precomputed utterance vectors, and the
// small amount of vector arithmetic the embedding-based metrics need.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "uptake/error.hpp"
#include "uptake/format.hpp"
#include "uptake/textprep.hpp"

namespace uptake {

struct WordVectorStore {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> table;

  const std::vector<double>* find(const std::string& token) const {
    const auto it = table.find(token);
    return it == table.end() ? nullptr : &it->second;
  }
};

struct SentenceVectorStore {
  std::size_t dim = 0;
  // key: pair_id + '\x1f' + side ("s" or "t")
  std::unordered_map<std::string, std::vector<double>> table;

  static std::string key(std::string_view pair_id, std::string_view side) {
    std::string k(pair_id);
    k += '\x1f';
    k += side;
    return k;
  }
  const std::vector<double>* find(std::string_view pair_id,
                                  std::string_view side) const {
    const auto it = table.find(key(pair_id, side));
    return it == table.end() ? nullptr : &it->second;
  }
};

/// Text format: token, then dim whitespace-separated floats, one entry per
/// line. Dimension is inferred from the first line.
inline WordVectorStore load_word_vectors(std::istream& in) {
  WordVectorStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> vec;
    std::string num;
    while (fields >> num) vec.push_back(parse_double(num, "vector component"));
    if (vec.empty()) throw parse_error("no vector components", lineno);
    if (store.dim == 0) store.dim = vec.size();
    if (vec.size() != store.dim) {
      throw parse_error("vector has " + std::to_string(vec.size()) +
                            " components, expected " +
                            std::to_string(store.dim),
                        lineno);
    }
    if (!store.table.emplace(token, std::move(vec)).second) {
      throw parse_error("duplicate token \"" + token + "\"", lineno);
    }
  }
  if (store.table.empty()) throw error("no vectors");
  return store;
}

inline WordVectorStore load_word_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open word-vector file: " + path);
  return load_word_vectors(in);
}

inline void write_word_vectors(std::ostream& out,
                               const WordVectorStore& store) {
  for (const auto& [token, vec] : store.table) {
    out << token;
    for (const double v : vec) out << ' ' << format_double(v);
    out << '\n';
  }
}

/// JSONL, one `{"pair_id", "side", "vector"}` object per line.
inline SentenceVectorStore load_sentence_vectors(std::istream& in) {
  SentenceVectorStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("bad JSON: ") + e.what(), lineno);
    }
    try {
      const auto pair_id = obj.at("pair_id").get<std::string>();
      const auto side = obj.at("side").get<std::string>();
      if (side != "s" && side != "t") {
        throw parse_error("side must be \"s\" or \"t\"", lineno);
      }
      auto vec = obj.at("vector").get<std::vector<double>>();
      if (vec.empty()) throw parse_error("empty vector", lineno);
      if (store.dim == 0) store.dim = vec.size();
      if (vec.size() != store.dim) {
        throw parse_error("vector has " + std::to_string(vec.size()) +
                              " components, expected " +
                              std::to_string(store.dim),
                          lineno);
      }
      const std::string key = SentenceVectorStore::key(pair_id, side);
      if (!store.table.emplace(key, std::move(vec)).second) {
        throw parse_error(
            "duplicate vector for pair \"" + pair_id + "\" side " + side,
            lineno);
      }
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("bad vector record: ") + e.what(), lineno);
    }
  }
  return store;
}

inline SentenceVectorStore load_sentence_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open sentence-vector file: " + path);
  return load_sentence_vectors(in);
}

/// Mean of the vectors of in-vocabulary tokens (duplicates counted);
/// nullopt when nothing is in vocabulary.
inline std::optional<std::vector<double>> sentence_vector(
    const WordVectorStore& store, const TokenSequence& seq) {
  std::vector<double> sum(store.dim, 0.0);
  std::size_t hits = 0;
  for (const auto& tok : seq.tokens) {
    if (const auto* vec = store.find(tok)) {
      for (std::size_t i = 0; i < store.dim; ++i) sum[i] += (*vec)[i];
      ++hits;
    }
  }
  if (hits == 0) return std::nullopt;
  for (double& v : sum) v /= static_cast<double>(hits);
  return sum;
}

inline double dot(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw error("vector length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

inline double cosine(const std::vector<double>& u,
                     const std::vector<double>& v) {
  const double uu = dot(u, u), vv = dot(v, v);
  if (uu == 0.0 || vv == 0.0) throw error("undefined cosine of zero vector");
  return dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace uptake
