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

// Overlap and similarity measures over (student, teacher) utterance pairs,
// each bound to a preprocessing profile, plus batch scoring into a table.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "uptake/corpus.hpp"
#include "uptake/embeddings.hpp"
#include "uptake/error.hpp"
#include "uptake/parallel.hpp"
#include "uptake/textprep.hpp"

namespace uptake {

enum class MetricName {
  lcs,
  pct_s_in_t,
  pct_t_in_s,
  jaccard,
  bleu,
  glove_align,
  glove_utt,
  sent_cosine,
  sent_inner,
  nuc_prob,
  pjsd,
  external,
};

inline const char* metric_name_string(MetricName m) {
  switch (m) {
    case MetricName::lcs: return "lcs";
    case MetricName::pct_s_in_t: return "pct_s_in_t";
    case MetricName::pct_t_in_s: return "pct_t_in_s";
    case MetricName::jaccard: return "jaccard";
    case MetricName::bleu: return "bleu";
    case MetricName::glove_align: return "glove_align";
    case MetricName::glove_utt: return "glove_utt";
    case MetricName::sent_cosine: return "sent_cosine";
    case MetricName::sent_inner: return "sent_inner";
    case MetricName::nuc_prob: return "nuc_prob";
    case MetricName::pjsd: return "pjsd";
    case MetricName::external: return "external";
  }
  throw error("bad metric enum value");
}

inline MetricName metric_name_from_string(std::string_view s) {
  static const std::unordered_map<std::string_view, MetricName> kMap = {
      {"lcs", MetricName::lcs},
      {"pct_s_in_t", MetricName::pct_s_in_t},
      {"pct_t_in_s", MetricName::pct_t_in_s},
      {"jaccard", MetricName::jaccard},
      {"bleu", MetricName::bleu},
      {"glove_align", MetricName::glove_align},
      {"glove_utt", MetricName::glove_utt},
      {"sent_cosine", MetricName::sent_cosine},
      {"sent_inner", MetricName::sent_inner},
      {"nuc_prob", MetricName::nuc_prob},
      {"pjsd", MetricName::pjsd},
      {"external", MetricName::external},
  };
  const auto it = kMap.find(s);
  if (it == kMap.end()) {
    throw error("unknown metric \"" + std::string(s) + "\"");
  }
  return it->second;
}

/// The preprocessing each measure performed best with; identity for the
/// non-token metrics.
inline PreprocessProfile default_profile(MetricName m) {
  switch (m) {
    case MetricName::pct_s_in_t: return parse_profile_spec("PST");
    case MetricName::pct_t_in_s: return parse_profile_spec("PS");
    case MetricName::jaccard: return parse_profile_spec("PS");
    case MetricName::bleu: return parse_profile_spec("PST");
    case MetricName::glove_align: return parse_profile_spec("P");
    case MetricName::glove_utt: return parse_profile_spec("PS");
    default: return PreprocessProfile{};
  }
}

struct MetricId {
  MetricName name;
  PreprocessProfile profile;

  static MetricId with_default(MetricName name) {
    return MetricId{name, default_profile(name)};
  }
};

// ---------------------------------------------------------------------------
// Pairwise measures (inputs are already-preprocessed sequences)

/// Longest common token subsequence length / len(s).
inline double lcs_norm(const TokenSequence& s, const TokenSequence& t) {
  const auto& a = s.tokens;
  const auto& b = t.tokens;
  if (a.empty()) throw error("lcs_norm: empty student sequence");
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
    std::fill(cur.begin(), cur.end(), 0);
  }
  return static_cast<double>(prev[b.size()]) / static_cast<double>(a.size());
}

/// Fraction of token positions in s whose token occurs anywhere in t.
inline std::optional<double> pct_s_in_t(const TokenSequence& s,
                                        const TokenSequence& t) {
  if (s.tokens.empty()) return std::nullopt;
  const std::unordered_set<std::string> tset(t.tokens.begin(), t.tokens.end());
  std::size_t hits = 0;
  for (const auto& tok : s.tokens) {
    if (tset.count(tok)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s.tokens.size());
}

inline std::optional<double> pct_t_in_s(const TokenSequence& s,
                                        const TokenSequence& t) {
  return pct_s_in_t(t, s);
}

inline std::optional<double> jaccard(const TokenSequence& s,
                                     const TokenSequence& t) {
  const std::unordered_set<std::string> sset(s.tokens.begin(), s.tokens.end());
  const std::unordered_set<std::string> tset(t.tokens.begin(), t.tokens.end());
  if (sset.empty() && tset.empty()) return std::nullopt;
  std::size_t inter = 0;
  for (const auto& tok : sset) {
    if (tset.count(tok)) ++inter;
  }
  const std::size_t uni = sset.size() + tset.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// BLEU with s as reference and t as hypothesis: geometric mean of clipped
/// n-gram precisions for n = 1..min(max_n, len(t)) times the brevity
/// penalty; zero precisions replaced by eps so short utterances keep rank
/// information.
inline std::optional<double> bleu(const TokenSequence& s,
                                  const TokenSequence& t, int max_n = 4,
                                  double eps = 1e-9) {
  const std::size_t tlen = t.tokens.size();
  if (tlen == 0) return std::nullopt;
  const int top = std::min<int>(max_n, static_cast<int>(tlen));
  double log_sum = 0.0;
  for (int n = 1; n <= top; ++n) {
    const auto hyp = ngram_counts(t.tokens, n);
    const auto ref = ngram_counts(s.tokens, n);
    std::size_t total = 0, clipped = 0;
    for (const auto& [gram, count] : hyp) {
      total += static_cast<std::size_t>(count);
      const auto it = ref.find(gram);
      if (it != ref.end()) {
        clipped += static_cast<std::size_t>(std::min(count, it->second));
      }
    }
    const double prec =
        clipped == 0 ? eps
                     : static_cast<double>(clipped) / static_cast<double>(total);
    log_sum += std::log(prec);
  }
  const double brevity =
      std::exp(std::min(0.0, 1.0 - static_cast<double>(s.tokens.size()) /
                                       static_cast<double>(tlen)));
  return brevity * std::exp(log_sum / top);
}

/// Mean over in-vocabulary s tokens (per occurrence) of the best cosine
/// against any in-vocabulary t token. Directional: not symmetric in (s, t).
inline std::optional<double> glove_align(const WordVectorStore& store,
                                         const TokenSequence& s,
                                         const TokenSequence& t) {
  std::vector<const std::vector<double>*> tvecs;
  for (const auto& tok : t.tokens) {
    if (const auto* v = store.find(tok)) tvecs.push_back(v);
  }
  if (tvecs.empty()) return std::nullopt;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& tok : s.tokens) {
    const auto* sv = store.find(tok);
    if (!sv) continue;
    double best = -2.0;
    for (const auto* tv : tvecs) best = std::max(best, cosine(*sv, *tv));
    sum += best;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

/// Cosine of the two mean word vectors; missing when either side has no
/// in-vocabulary token or a mean vector degenerates to zero.
inline std::optional<double> glove_utt(const WordVectorStore& store,
                                       const TokenSequence& s,
                                       const TokenSequence& t) {
  const auto sv = sentence_vector(store, s);
  const auto tv = sentence_vector(store, t);
  if (!sv || !tv) return std::nullopt;
  if (dot(*sv, *sv) == 0.0 || dot(*tv, *tv) == 0.0) return std::nullopt;
  return cosine(*sv, *tv);
}

enum class SentSimMode { cosine, inner };

inline std::optional<double> sent_sim(const SentenceVectorStore& store,
                                      const std::string& pair_id,
                                      SentSimMode mode) {
  const auto* sv = store.find(pair_id, "s");
  const auto* tv = store.find(pair_id, "t");
  if (!sv || !tv) return std::nullopt;
  if (mode == SentSimMode::inner) return dot(*sv, *tv);
  if (dot(*sv, *sv) == 0.0 || dot(*tv, *tv) == 0.0) return std::nullopt;
  return cosine(*sv, *tv);
}

// ---------------------------------------------------------------------------
// Batch scoring

struct ScoreTable {
  std::vector<std::string> metric_names;                   // column order
  std::vector<std::string> pair_ids;                       // row order
  std::vector<std::vector<std::optional<double>>> cells;   // [row][column]
  std::vector<std::string> warnings;

  std::size_t column(std::string_view metric) const {
    for (std::size_t i = 0; i < metric_names.size(); ++i) {
      if (metric_names[i] == metric) return i;
    }
    throw error("no such metric column: " + std::string(metric));
  }

  bool has_column(std::string_view metric) const {
    return std::find(metric_names.begin(), metric_names.end(), metric) !=
           metric_names.end();
  }

  /// pair_id -> value for one metric, skipping missing cells.
  std::unordered_map<std::string, double> column_values(
      std::string_view metric) const {
    const std::size_t c = column(metric);
    std::unordered_map<std::string, double> out;
    for (std::size_t r = 0; r < pair_ids.size(); ++r) {
      if (cells[r][c]) out.emplace(pair_ids[r], *cells[r][c]);
    }
    return out;
  }
};

struct ScoreConfig {
  std::vector<MetricId> metrics;
  const WordVectorStore* word_vectors = nullptr;
  const SentenceVectorStore* sentence_vectors = nullptr;
  int jobs = 1;
};

namespace detail {

inline bool metric_needs_word_vectors(MetricName m) {
  return m == MetricName::glove_align || m == MetricName::glove_utt;
}

inline bool metric_needs_sentence_vectors(MetricName m) {
  return m == MetricName::sent_cosine || m == MetricName::sent_inner;
}

inline bool metric_is_computable(MetricName m) {
  return m != MetricName::nuc_prob && m != MetricName::pjsd &&
         m != MetricName::external;
}

}  // namespace detail

/// Scores every pair under every configured metric. Rows come out sorted by
/// pair_id; missing values stay as empty cells with a warning each, and the
/// result is identical for any job count.
inline ScoreTable score_all(const std::vector<ExchangePair>& pairs,
                            const ScoreConfig& config) {
  for (const auto& m : config.metrics) {
    const char* name = metric_name_string(m.name);
    if (!detail::metric_is_computable(m.name)) {
      throw error(std::string("metric \"") + name +
                  "\" is ingested, not computed here");
    }
    if (detail::metric_needs_word_vectors(m.name) && !config.word_vectors) {
      throw error(std::string("metric \"") + name +
                  "\" requires word vectors");
    }
    if (detail::metric_needs_sentence_vectors(m.name) &&
        !config.sentence_vectors) {
      throw error(std::string("metric \"") + name +
                  "\" requires sentence vectors");
    }
    if (m.profile.remove_stopwords) stopword_list(m.profile.stopword_list_id);
  }

  ScoreTable table;
  for (const auto& m : config.metrics) {
    std::string name = metric_name_string(m.name);
    if (table.has_column(name)) throw error("duplicate metric column: " + name);
    table.metric_names.push_back(std::move(name));
  }

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].id < pairs[b].id;
  });

  table.pair_ids.resize(pairs.size());
  table.cells.assign(pairs.size(),
                     std::vector<std::optional<double>>(
                         config.metrics.size(), std::nullopt));
  std::vector<std::vector<std::string>> row_warnings(pairs.size());

  parallel_for(pairs.size(), config.jobs, [&](std::size_t r) {
    const ExchangePair& p = pairs[order[r]];
    table.pair_ids[r] = p.id;
    const TokenSequence s_raw = tokenize(p.s.text);
    const TokenSequence t_raw = tokenize(p.t.text);
    for (std::size_t c = 0; c < config.metrics.size(); ++c) {
      const MetricId& m = config.metrics[c];
      std::optional<double> value;
      if (m.name == MetricName::sent_cosine || m.name == MetricName::sent_inner) {
        value = sent_sim(*config.sentence_vectors, p.id,
                         m.name == MetricName::sent_cosine
                             ? SentSimMode::cosine
                             : SentSimMode::inner);
      } else {
        const TokenSequence s = apply_profile(s_raw, m.profile);
        const TokenSequence t = apply_profile(t_raw, m.profile);
        switch (m.name) {
          case MetricName::lcs:
            if (!s.tokens.empty()) value = lcs_norm(s, t);
            break;
          case MetricName::pct_s_in_t: value = pct_s_in_t(s, t); break;
          case MetricName::pct_t_in_s: value = pct_t_in_s(s, t); break;
          case MetricName::jaccard: value = jaccard(s, t); break;
          case MetricName::bleu: value = bleu(s, t); break;
          case MetricName::glove_align:
            value = glove_align(*config.word_vectors, s, t);
            break;
          case MetricName::glove_utt:
            value = glove_utt(*config.word_vectors, s, t);
            break;
          default: break;  // unreachable: rejected up front
        }
      }
      if (value && !std::isfinite(*value)) value.reset();
      if (!value) {
        row_warnings[r].push_back("pair " + p.id + ": " +
                                  table.metric_names[c] + " missing");
      }
      table.cells[r][c] = value;
    }
  });

  for (auto& w : row_warnings) {
    table.warnings.insert(table.warnings.end(), w.begin(), w.end());
  }
  return table;
}

/// Adds the columns of `extra` to `base` (matching rows by pair_id; rows
/// present in only one table keep/gain missing cells).
inline ScoreTable merge_score_tables(const ScoreTable& base,
                                     const ScoreTable& extra) {
  ScoreTable out;
  out.metric_names = base.metric_names;
  for (const auto& name : extra.metric_names) {
    if (std::find(out.metric_names.begin(), out.metric_names.end(), name) !=
        out.metric_names.end()) {
      throw error("duplicate metric column on merge: " + name);
    }
    out.metric_names.push_back(name);
  }
  std::vector<std::string> ids = base.pair_ids;
  ids.insert(ids.end(), extra.pair_ids.begin(), extra.pair_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::unordered_map<std::string, std::size_t> base_row, extra_row;
  for (std::size_t r = 0; r < base.pair_ids.size(); ++r) {
    base_row.emplace(base.pair_ids[r], r);
  }
  for (std::size_t r = 0; r < extra.pair_ids.size(); ++r) {
    extra_row.emplace(extra.pair_ids[r], r);
  }

  out.pair_ids = std::move(ids);
  out.cells.assign(out.pair_ids.size(),
                   std::vector<std::optional<double>>(out.metric_names.size(),
                                                      std::nullopt));
  for (std::size_t r = 0; r < out.pair_ids.size(); ++r) {
    const auto& id = out.pair_ids[r];
    if (const auto it = base_row.find(id); it != base_row.end()) {
      for (std::size_t c = 0; c < base.metric_names.size(); ++c) {
        out.cells[r][c] = base.cells[it->second][c];
      }
    }
    if (const auto it = extra_row.find(id); it != extra_row.end()) {
      for (std::size_t c = 0; c < extra.metric_names.size(); ++c) {
        out.cells[r][base.metric_names.size() + c] =
            extra.cells[it->second][c];
      }
    }
  }
  out.warnings = base.warnings;
  out.warnings.insert(out.warnings.end(), extra.warnings.begin(),
                      extra.warnings.end());
  return out;
}

}  // namespace uptake
