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

// Next-utterance classification: negative-sampled datasets, a reference
// logistic classifier over overlap features, and the pointwise
// Jensen-Shannon divergence estimated from its probabilities.
//
// The estimator is the variational form value = ln 2 - L/2 with
// L = -ln f(t,s) - mean_j ln(1 - f(t'_j, s)): exactly 0 for a chance-level
// classifier and approaching ln 2 at saturation, so maximizing the estimate
// coincides with minimizing the classification cross-entropy.

#include <algorithm>
#include <tuple>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "uptake/corpus.hpp"
#include "uptake/embeddings.hpp"
#include "uptake/error.hpp"
#include "uptake/parallel.hpp"
#include "uptake/prng.hpp"
#include "uptake/similarity.hpp"
#include "uptake/textprep.hpp"

namespace uptake {

struct NucExample {
  std::string pair_id;  // negatives carry the positive's id plus "#n<j>"
  TokenSequence s;
  TokenSequence t;
  int z = 0;  // 1 = true reply, 0 = sampled negative
  std::string source;
};

inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;
inline const double kLn2 = std::log(2.0);

// ---------------------------------------------------------------------------
// Dataset construction

/// For every pair, emits the true (s, t) with z=1 followed by k (s, t')
/// with z=0, t' sampled uniformly without replacement from other pairs of
/// the same source whose teacher text differs from t. Per-pair derived
/// seeds make the result independent of pair order within a source and of
/// any parallel execution.
inline std::vector<NucExample> build_nuc_dataset(
    const std::vector<ExchangePair>& pairs, int k, std::uint64_t seed) {
  if (k < 1) throw error("need at least one negative per pair");
  std::unordered_map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_source[pairs[i].source].push_back(i);
  }
  for (auto& [source, members] : by_source) {
    if (members.size() <= static_cast<std::size_t>(k)) {
      throw error("source group \"" + source + "\" has " +
                  std::to_string(members.size()) + " pairs; need more than " +
                  std::to_string(k));
    }
    // Canonical candidate order, so sampling ignores input permutation.
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) {
                return std::tie(pairs[a].id, pairs[a].t.text) <
                       std::tie(pairs[b].id, pairs[b].t.text);
              });
  }

  std::vector<NucExample> out;
  out.reserve(pairs.size() * (static_cast<std::size_t>(k) + 1));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ExchangePair& p = pairs[i];
    NucExample pos;
    pos.pair_id = p.id;
    pos.s = tokenize(p.s.text);
    pos.t = tokenize(p.t.text);
    pos.z = 1;
    pos.source = p.source;
    out.push_back(std::move(pos));

    std::vector<std::size_t> candidates;
    for (const std::size_t j : by_source[p.source]) {
      if (j != i && pairs[j].t.text != p.t.text) candidates.push_back(j);
    }
    if (candidates.size() < static_cast<std::size_t>(k)) {
      throw error("pair \"" + p.id + "\": only " +
                  std::to_string(candidates.size()) +
                  " distinct negatives available in source \"" + p.source +
                  "\"");
    }
    Prng rng(derive_seed(seed, p.id));
    const auto picks = rng.sample_without_replacement(candidates.size(),
                                                      static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < picks.size(); ++j) {
      const ExchangePair& other = pairs[candidates[picks[j]]];
      NucExample neg;
      neg.pair_id = p.id + "#n" + std::to_string(j + 1);
      neg.s = tokenize(p.s.text);
      neg.t = tokenize(other.t.text);
      neg.z = 0;
      neg.source = p.source;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

inline void write_nuc_jsonl(std::ostream& out,
                            const std::vector<NucExample>& examples) {
  for (const auto& e : examples) {
    nlohmann::json obj;
    obj["pair_id"] = e.pair_id;
    obj["s"] = e.s.source_text;
    obj["t"] = e.t.source_text;
    obj["z"] = e.z;
    obj["source"] = e.source;
    out << obj.dump() << '\n';
  }
}

inline std::vector<NucExample> read_nuc_jsonl(std::istream& in) {
  std::vector<NucExample> out;
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
      NucExample e;
      e.pair_id = obj.at("pair_id").get<std::string>();
      e.s = tokenize(obj.at("s").get<std::string>());
      e.t = tokenize(obj.at("t").get<std::string>());
      e.z = obj.at("z").get<int>();
      if (e.z != 0 && e.z != 1) throw parse_error("z must be 0 or 1", lineno);
      e.source = obj.at("source").get<std::string>();
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(std::string("bad example record: ") + e.what(),
                        lineno);
    }
  }
  return out;
}

inline std::vector<NucExample> read_nuc_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open dataset file: " + path);
  return read_nuc_jsonl(in);
}

/// One positive and the indices of its negatives.
struct NucGroup {
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

/// Recovers the [positive, negatives...] runs; the file layout (not id
/// conventions) defines grouping. Errors on a leading negative or a
/// positive with no negatives.
inline std::vector<NucGroup> group_examples(
    const std::vector<NucExample>& examples) {
  std::vector<NucGroup> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].z == 1) {
      groups.push_back(NucGroup{i, {}});
    } else {
      if (groups.empty()) {
        throw error("dataset must start with a positive example");
      }
      groups.back().negatives.push_back(i);
    }
  }
  if (groups.empty()) throw error("dataset is empty");
  for (const auto& g : groups) {
    if (g.negatives.empty()) {
      throw error("positive example \"" + examples[g.positive].pair_id +
                  "\" has no negatives");
    }
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Features

struct FeatureSchema {
  std::string id;
  std::vector<std::string> names;
};

/// Seven overlap measures under their default profiles, two length terms,
/// the clipped unigram match count, and one missing-value indicator per
/// overlap measure (misses are imputed as 0).
inline const FeatureSchema& default_feature_schema() {
  static const FeatureSchema kSchema = {
      "overlap-v1",
      {"pct_s_in_t", "pct_t_in_s", "jaccard", "bleu", "lcs", "glove_align",
       "glove_utt", "log1p_len_s", "log1p_len_t", "unigram_overlap",
       "miss_pct_s_in_t", "miss_pct_t_in_s", "miss_jaccard", "miss_bleu",
       "miss_lcs", "miss_glove_align", "miss_glove_utt"}};
  return kSchema;
}

struct FeatureVector {
  std::vector<double> values;
};

/// Computes the default schema for raw-tokenized s and t. `word_vectors`
/// may be null, in which case the embedding features are misses.
inline FeatureVector featurize(const TokenSequence& s_raw,
                               const TokenSequence& t_raw,
                               const WordVectorStore* word_vectors = nullptr) {
  static const PreprocessProfile kPst = parse_profile_spec("PST");
  static const PreprocessProfile kPs = parse_profile_spec("PS");
  static const PreprocessProfile kP = parse_profile_spec("P");

  const TokenSequence s_pst = apply_profile(s_raw, kPst);
  const TokenSequence t_pst = apply_profile(t_raw, kPst);
  const TokenSequence s_ps = apply_profile(s_raw, kPs);
  const TokenSequence t_ps = apply_profile(t_raw, kPs);

  std::array<std::optional<double>, 7> metrics;
  metrics[0] = pct_s_in_t(s_pst, t_pst);
  metrics[1] = pct_t_in_s(s_ps, t_ps);
  metrics[2] = jaccard(s_ps, t_ps);
  metrics[3] = bleu(s_pst, t_pst);
  metrics[4] = s_raw.tokens.empty()
                   ? std::nullopt
                   : std::optional<double>(lcs_norm(s_raw, t_raw));
  if (word_vectors) {
    const TokenSequence s_p = apply_profile(s_raw, kP);
    const TokenSequence t_p = apply_profile(t_raw, kP);
    metrics[5] = glove_align(*word_vectors, s_p, t_p);
    metrics[6] = glove_utt(*word_vectors, s_ps, t_ps);
  }

  const auto s_uni = ngram_counts(s_raw.tokens, 1);
  const auto t_uni = ngram_counts(t_raw.tokens, 1);
  double overlap = 0.0;
  for (const auto& [tok, count] : t_uni) {
    const auto it = s_uni.find(tok);
    if (it != s_uni.end()) overlap += std::min(count, it->second);
  }

  FeatureVector fv;
  fv.values.reserve(default_feature_schema().names.size());
  for (const auto& m : metrics) fv.values.push_back(m.value_or(0.0));
  fv.values.push_back(std::log1p(static_cast<double>(s_raw.tokens.size())));
  fv.values.push_back(std::log1p(static_cast<double>(t_raw.tokens.size())));
  fv.values.push_back(overlap);
  for (const auto& m : metrics) fv.values.push_back(m ? 0.0 : 1.0);
  return fv;
}

// ---------------------------------------------------------------------------
// Reference classifier

struct TrainOptions {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 256;  // pair groups per batch
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

struct ClassifierParams {
  std::string feature_schema_id;
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> standardization_mean;
  std::vector<double> standardization_scale;
  TrainOptions training;
  std::vector<double> loss_history;  // full objective after each epoch
};

inline double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

inline double clamp_probability(double p) {
  return std::min(kProbClampHi, std::max(kProbClampLo, p));
}

namespace detail {

struct NucDesign {
  std::vector<std::vector<double>> features;  // standardized, per example
  std::vector<NucGroup> groups;
};

inline void standardize_in_place(std::vector<std::vector<double>>& rows,
                                 std::vector<double>& mean,
                                 std::vector<double>& scale) {
  const std::size_t dim = rows.empty() ? 0 : rows[0].size();
  mean.assign(dim, 0.0);
  scale.assign(dim, 1.0);
  if (rows.empty()) return;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(rows.size());
  std::vector<double> var(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  for (auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) r[j] = (r[j] - mean[j]) / scale[j];
  }
}

}  // namespace detail

/// The training objective over the given groups: mean over pairs of
///   (1/2)(-ln f_pos) + (1/(2k)) sum_j -ln(1 - f_neg_j)
/// plus (l2/2)|w|^2, with gradients in `grad_w`/`grad_b`. Exposed so the
/// gradient can be checked against finite differences.
inline double objective_and_gradient(
    const std::vector<std::vector<double>>& features,
    const std::vector<NucGroup>& groups, const std::vector<double>& w,
    double b, double l2, std::vector<double>* grad_w = nullptr,
    double* grad_b = nullptr) {
  const std::size_t dim = w.size();
  if (grad_w) grad_w->assign(dim, 0.0);
  if (grad_b) *grad_b = 0.0;
  double total = 0.0;
  const auto logit = [&](std::size_t i) {
    double u = b;
    const auto& x = features[i];
    for (std::size_t j = 0; j < dim; ++j) u += w[j] * x[j];
    return u;
  };
  const auto accumulate = [&](std::size_t i, double coeff_loss,
                              double dLdu) {
    total += coeff_loss;
    if (grad_w) {
      const auto& x = features[i];
      for (std::size_t j = 0; j < dim; ++j) (*grad_w)[j] += dLdu * x[j];
    }
    if (grad_b) *grad_b += dLdu;
  };
  const double inv_pairs = 1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) {
    {
      const double f = clamp_probability(sigmoid(logit(g.positive)));
      accumulate(g.positive, 0.5 * inv_pairs * -std::log(f),
                 0.5 * inv_pairs * (f - 1.0));
    }
    const double neg_w = 1.0 / (2.0 * static_cast<double>(g.negatives.size()));
    for (const std::size_t i : g.negatives) {
      const double f = clamp_probability(sigmoid(logit(i)));
      accumulate(i, neg_w * inv_pairs * -std::log(1.0 - f),
                 neg_w * inv_pairs * f);
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    total += 0.5 * l2 * w[j] * w[j];
    if (grad_w) (*grad_w)[j] += l2 * w[j];
  }
  return total;
}

/// Mini-batch gradient descent on the pair-weighted cross-entropy.
/// Deterministic given options.seed; throws on single-class input or a
/// diverging (non-finite) loss.
inline ClassifierParams train_reference_classifier(
    const std::vector<NucExample>& examples, const TrainOptions& options = {},
    const WordVectorStore* word_vectors = nullptr) {
  if (examples.empty()) throw error("no training examples");
  bool has_pos = false, has_neg = false;
  for (const auto& e : examples) (e.z == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw error("training needs both positive and negative examples");
  }
  const auto groups = group_examples(examples);

  detail::NucDesign design;
  design.groups = groups;
  design.features.resize(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    design.features[i] =
        featurize(examples[i].s, examples[i].t, word_vectors).values;
  }

  ClassifierParams params;
  params.feature_schema_id = default_feature_schema().id;
  params.feature_names = default_feature_schema().names;
  params.training = options;
  detail::standardize_in_place(design.features, params.standardization_mean,
                               params.standardization_scale);

  const std::size_t dim = params.feature_names.size();
  params.weights.assign(dim, 0.0);
  params.bias = 0.0;

  Prng rng(derive_seed(options.seed, "train"));
  std::vector<std::size_t> order(design.groups.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      options.batch_size < 1 ? design.groups.size()
                             : static_cast<std::size_t>(options.batch_size);

  std::vector<double> grad_w(dim, 0.0);
  double grad_b = 0.0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      std::vector<NucGroup> slice;
      slice.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        slice.push_back(design.groups[order[i]]);
      }
      objective_and_gradient(design.features, slice, params.weights,
                             params.bias, options.l2, &grad_w, &grad_b);
      for (std::size_t j = 0; j < dim; ++j) {
        params.weights[j] -= options.learning_rate * grad_w[j];
      }
      params.bias -= options.learning_rate * grad_b;
    }
    const double loss = objective_and_gradient(
        design.features, design.groups, params.weights, params.bias,
        options.l2, nullptr, nullptr);
    if (!std::isfinite(loss)) {
      throw error("training diverged (non-finite loss); lower learning_rate");
    }
    params.loss_history.push_back(loss);
  }
  return params;
}

/// sigma(w . standardized phi + b), clamped into (0,1).
inline double predict(const ClassifierParams& params, const TokenSequence& s,
                      const TokenSequence& t,
                      const WordVectorStore* word_vectors = nullptr) {
  const auto& schema = default_feature_schema();
  if (params.feature_schema_id != schema.id ||
      params.weights.size() != schema.names.size() ||
      params.standardization_mean.size() != schema.names.size() ||
      params.standardization_scale.size() != schema.names.size()) {
    throw error("classifier parameters do not match feature schema \"" +
                schema.id + "\"");
  }
  const FeatureVector fv = featurize(s, t, word_vectors);
  double u = params.bias;
  for (std::size_t j = 0; j < fv.values.size(); ++j) {
    u += params.weights[j] * (fv.values[j] - params.standardization_mean[j]) /
         params.standardization_scale[j];
  }
  return clamp_probability(sigmoid(u));
}

/// Mean over pair groups of (1/2)L_pair where
/// L_pair = -ln f_pos - mean_j ln(1 - f_neg_j); ln 2 at chance level.
/// The mean pJSD estimate over the same groups is exactly ln 2 minus this.
inline double dataset_mean_loss(const ClassifierParams& params,
                                const std::vector<NucExample>& examples,
                                const WordVectorStore* word_vectors = nullptr) {
  const auto groups = group_examples(examples);
  double total = 0.0;
  for (const auto& g : groups) {
    const auto& pos = examples[g.positive];
    double l = -std::log(predict(params, pos.s, pos.t, word_vectors));
    double neg = 0.0;
    for (const std::size_t i : g.negatives) {
      const auto& e = examples[i];
      neg += std::log(1.0 - predict(params, e.s, e.t, word_vectors));
    }
    l -= neg / static_cast<double>(g.negatives.size());
    total += 0.5 * l;
  }
  return total / static_cast<double>(groups.size());
}

// ---------------------------------------------------------------------------
// pJSD estimation

struct PJsdEstimate {
  double value = 0.0;
  int n_negatives = 0;
  double f_true = 0.0;
  double mean_log_one_minus_f_neg = 0.0;
};

inline PJsdEstimate pjsd_estimate(double f_true,
                                  const std::vector<double>& f_negatives) {
  if (f_negatives.empty()) throw error("pjsd_estimate needs negatives");
  const auto check = [](double p) {
    if (!(p > 0.0 && p < 1.0)) {
      throw error("probability " + format_double(p) + " outside (0,1)");
    }
  };
  check(f_true);
  double mean_log = 0.0;
  for (const double p : f_negatives) {
    check(p);
    mean_log += std::log(1.0 - p);
  }
  mean_log /= static_cast<double>(f_negatives.size());
  const double loss = -std::log(f_true) - mean_log;
  PJsdEstimate est;
  est.value = kLn2 - 0.5 * loss;
  est.n_negatives = static_cast<int>(f_negatives.size());
  est.f_true = f_true;
  est.mean_log_one_minus_f_neg = mean_log;
  return est;
}

/// Scores every pair with the trained classifier: columns nuc_prob (the
/// classifier probability on the true reply) and pjsd (estimated with k
/// freshly sampled same-source negatives). Deterministic for any job count.
inline ScoreTable score_corpus_pjsd(
    const ClassifierParams& params, const std::vector<ExchangePair>& pairs,
    int k, std::uint64_t seed,
    const WordVectorStore* word_vectors = nullptr, int jobs = 1) {
  if (k < 1) throw error("need at least one negative per pair");
  std::unordered_map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    by_source[pairs[i].source].push_back(i);
  }
  for (auto& [source, members] : by_source) {
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) {
                return std::tie(pairs[a].id, pairs[a].t.text) <
                       std::tie(pairs[b].id, pairs[b].t.text);
              });
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].id < pairs[b].id;
  });

  ScoreTable table;
  table.metric_names = {"nuc_prob", "pjsd"};
  table.pair_ids.resize(pairs.size());
  table.cells.assign(pairs.size(),
                     std::vector<std::optional<double>>(2, std::nullopt));

  const std::uint64_t score_seed = derive_seed(seed, "pjsd-negatives");
  parallel_for(pairs.size(), jobs, [&](std::size_t r) {
    const ExchangePair& p = pairs[order[r]];
    table.pair_ids[r] = p.id;
    const TokenSequence s = tokenize(p.s.text);
    const TokenSequence t = tokenize(p.t.text);
    const double f_true = predict(params, s, t, word_vectors);
    table.cells[r][0] = f_true;

    std::vector<std::size_t> candidates;
    for (const std::size_t j : by_source[p.source]) {
      if (pairs[j].id != p.id && pairs[j].t.text != p.t.text) {
        candidates.push_back(j);
      }
    }
    if (candidates.size() < static_cast<std::size_t>(k)) {
      throw error("pair \"" + p.id + "\": only " +
                  std::to_string(candidates.size()) +
                  " distinct negatives available in source \"" + p.source +
                  "\"");
    }
    Prng rng(derive_seed(score_seed, p.id));
    const auto picks = rng.sample_without_replacement(
        candidates.size(), static_cast<std::size_t>(k));
    std::vector<double> f_neg;
    f_neg.reserve(picks.size());
    for (const std::size_t pick : picks) {
      const TokenSequence neg_t = tokenize(pairs[candidates[pick]].t.text);
      f_neg.push_back(predict(params, s, neg_t, word_vectors));
    }
    table.cells[r][1] = pjsd_estimate(f_true, f_neg).value;
  });
  return table;
}

// ---------------------------------------------------------------------------
// Parameter (de)serialization

inline nlohmann::json classifier_params_to_json(const ClassifierParams& p) {
  nlohmann::json obj;
  obj["feature_schema_id"] = p.feature_schema_id;
  obj["feature_names"] = p.feature_names;
  obj["weights"] = p.weights;
  obj["bias"] = p.bias;
  obj["standardization"] = {{"mean", p.standardization_mean},
                            {"scale", p.standardization_scale}};
  obj["training"] = {{"seed", p.training.seed},
                     {"learning_rate", p.training.learning_rate},
                     {"epochs", p.training.epochs},
                     {"batch_size", p.training.batch_size},
                     {"l2", p.training.l2}};
  obj["loss_history"] = p.loss_history;
  return obj;
}

inline ClassifierParams classifier_params_from_json(const nlohmann::json& obj) {
  ClassifierParams p;
  try {
    p.feature_schema_id = obj.at("feature_schema_id").get<std::string>();
    p.feature_names = obj.at("feature_names").get<std::vector<std::string>>();
    p.weights = obj.at("weights").get<std::vector<double>>();
    p.bias = obj.at("bias").get<double>();
    const auto& st = obj.at("standardization");
    p.standardization_mean = st.at("mean").get<std::vector<double>>();
    p.standardization_scale = st.at("scale").get<std::vector<double>>();
    if (obj.contains("training")) {
      const auto& tr = obj.at("training");
      p.training.seed = tr.value("seed", std::uint64_t{0});
      p.training.learning_rate = tr.value("learning_rate", 0.1);
      p.training.epochs = tr.value("epochs", 20);
      p.training.batch_size = tr.value("batch_size", 256);
      p.training.l2 = tr.value("l2", 1e-4);
    }
    if (obj.contains("loss_history")) {
      p.loss_history = obj.at("loss_history").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw error(std::string("bad classifier parameter file: ") + e.what());
  }
  if (p.weights.size() != p.feature_names.size() ||
      p.standardization_mean.size() != p.feature_names.size() ||
      p.standardization_scale.size() != p.feature_names.size()) {
    throw error("classifier parameter lengths disagree with feature names");
  }
  return p;
}

inline void save_classifier_params(const std::string& path,
                                   const ClassifierParams& p) {
  std::ofstream out(path);
  if (!out) throw error("cannot write parameter file: " + path);
  out << classifier_params_to_json(p).dump(2) << '\n';
}

inline ClassifierParams load_classifier_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open parameter file: " + path);
  nlohmann::json obj;
  try {
    in >> obj;
  } catch (const nlohmann::json::exception& e) {
    throw error(std::string("bad JSON in ") + path + ": " + e.what());
  }
  return classifier_params_from_json(obj);
}

}  // namespace uptake
