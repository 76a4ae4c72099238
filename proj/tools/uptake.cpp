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

// Command-line driver for the uptake pipeline. One subcommand per stage;
// every stage reads and writes plain files and emits a run manifest, so
// stages can be rerun, diffed, and swapped independently.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uptake/uptake.hpp"

namespace {

// Flag-combination problems discovered after CLI11 parsing. Exit code 1.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_json_file(const std::string& path, const nlohmann::json& obj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw uptake::error("cannot write " + path);
  out << obj.dump(2) << '\n';
}

void emit_manifest(const std::string& command,
                   const std::map<std::string, std::string>& settings,
                   std::uint64_t seed, std::vector<std::string> inputs,
                   std::vector<std::string> outputs) {
  uptake::RunManifest m;
  m.command = command;
  m.config_hash = uptake::compute_config_hash(command, settings, seed, inputs);
  m.seed = seed;
  m.input_paths = std::move(inputs);
  m.output_paths = std::move(outputs);
  m.timestamp = uptake::utc_timestamp();
  uptake::write_manifests(m);
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOpts {
  std::string in;
  std::string format = "jsonl";
  std::string out;
  int min_s_tokens = 5;
  std::string marker = uptake::kInaudibleMarker;
  std::string source = "default";
};

void run_extract(const ExtractOpts& o, std::uint64_t seed) {
  const auto fmt = o.format == "csv" ? uptake::TranscriptFormat::csv
                                     : uptake::TranscriptFormat::jsonl;
  const auto transcripts = uptake::load_transcripts(o.in, fmt);
  const auto pairs =
      uptake::extract_pairs(transcripts, o.min_s_tokens, o.marker, o.source);
  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw uptake::error("cannot write " + o.out);
  uptake::write_pairs_jsonl(out, pairs);
  out.close();
  std::cerr << "extract: " << transcripts.size() << " transcripts -> "
            << pairs.size() << " pairs\n";
  emit_manifest("extract",
                {{"format", o.format},
                 {"min_s_tokens", std::to_string(o.min_s_tokens)},
                 {"marker", o.marker},
                 {"source", o.source}},
                seed, {o.in}, {o.out});
}

// ---------------------------------------------------------------------------
// annotate-agg

struct AnnotateOpts {
  std::string annotations;
  std::string out;
};

void run_annotate_agg(const AnnotateOpts& o, std::uint64_t seed) {
  const auto judgments = uptake::load_annotations(o.annotations);
  const auto result = uptake::aggregate_labels(judgments);
  log_warnings(result.warnings);
  uptake::write_gold_labels(o.out, result.labels);
  std::cerr << "annotate-agg: " << judgments.size() << " judgments -> "
            << result.labels.size() << " labels\n";
  emit_manifest("annotate-agg", {}, seed, {o.annotations}, {o.out});
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
  std::string pairs;
  std::string metrics;
  std::string out;
  std::string vectors;
  std::string sent_vectors;
  std::string stopwords;
  std::string prep;                    // one profile for all metrics
  std::vector<std::string> prep_for;   // per-metric "name=SPEC" overrides
};

void run_score(const ScoreOpts& o, std::uint64_t seed, int jobs) {
  const auto names = split_list(o.metrics);
  if (names.empty()) throw usage_error("--metrics needs at least one name");

  std::vector<uptake::MetricId> metrics;
  for (const auto& name : names) {
    uptake::MetricName m;
    try {
      m = uptake::metric_name_from_string(name);
    } catch (const uptake::error& e) {
      throw usage_error(e.what());
    }
    if (!uptake::detail::metric_is_computable(m)) {
      throw usage_error("metric \"" + name +
                        "\" is produced by nuc-score or ingested externally");
    }
    if (uptake::detail::metric_needs_word_vectors(m) && o.vectors.empty()) {
      throw usage_error("metric \"" + name + "\" requires --vectors");
    }
    if (uptake::detail::metric_needs_sentence_vectors(m) &&
        o.sent_vectors.empty()) {
      throw usage_error("metric \"" + name + "\" requires --sent-vectors");
    }
    metrics.push_back(uptake::MetricId::with_default(m));
  }

  if (!o.prep.empty()) {
    uptake::PreprocessProfile profile;
    try {
      profile = uptake::parse_profile_spec(o.prep);
    } catch (const uptake::error& e) {
      throw usage_error(e.what());
    }
    for (auto& m : metrics) m.profile = profile;
  }
  for (const auto& entry : o.prep_for) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw usage_error("--prep-for wants METRIC=SPEC, got \"" + entry + "\"");
    }
    const std::string name = entry.substr(0, eq);
    bool found = false;
    for (auto& m : metrics) {
      if (uptake::metric_name_string(m.name) == name) {
        try {
          m.profile = uptake::parse_profile_spec(entry.substr(eq + 1));
        } catch (const uptake::error& e) {
          throw usage_error(e.what());
        }
        found = true;
      }
    }
    if (!found) {
      throw usage_error("--prep-for names \"" + name +
                        "\" which is not in --metrics");
    }
  }

  std::vector<std::string> inputs = {o.pairs};
  if (!o.stopwords.empty()) {
    uptake::register_stopword_list(o.stopwords,
                                   uptake::load_stopword_list(o.stopwords));
    for (auto& m : metrics) m.profile.stopword_list_id = o.stopwords;
    inputs.push_back(o.stopwords);
  }

  std::unique_ptr<uptake::WordVectorStore> words;
  if (!o.vectors.empty()) {
    words = std::make_unique<uptake::WordVectorStore>(
        uptake::load_word_vectors(o.vectors));
    inputs.push_back(o.vectors);
  }
  std::unique_ptr<uptake::SentenceVectorStore> sentences;
  if (!o.sent_vectors.empty()) {
    sentences = std::make_unique<uptake::SentenceVectorStore>(
        uptake::load_sentence_vectors(o.sent_vectors));
    inputs.push_back(o.sent_vectors);
  }

  const auto pairs = uptake::read_pairs_jsonl(o.pairs);
  uptake::ScoreConfig config;
  config.metrics = metrics;
  config.word_vectors = words.get();
  config.sentence_vectors = sentences.get();
  config.jobs = jobs;
  const auto table = uptake::score_all(pairs, config);
  log_warnings(table.warnings);
  uptake::write_score_table(o.out, table);
  std::cerr << "score: " << table.pair_ids.size() << " pairs x "
            << table.metric_names.size() << " metrics\n";

  std::string metric_spec;
  for (const auto& m : metrics) {
    if (!metric_spec.empty()) metric_spec += ',';
    metric_spec += uptake::metric_name_string(m.name);
    metric_spec += '=';
    metric_spec += uptake::profile_spec(m.profile);
  }
  emit_manifest("score",
                {{"metrics", metric_spec}, {"stopwords", o.stopwords}},
                seed, inputs, {o.out});
}

// ---------------------------------------------------------------------------
// nuc-build / nuc-train / nuc-score

struct NucBuildOpts {
  std::string pairs;
  int k = 3;
  std::string out;
};

void run_nuc_build(const NucBuildOpts& o, std::uint64_t seed) {
  const auto pairs = uptake::read_pairs_jsonl(o.pairs);
  const auto examples = uptake::build_nuc_dataset(pairs, o.k, seed);
  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw uptake::error("cannot write " + o.out);
  uptake::write_nuc_jsonl(out, examples);
  out.close();
  std::cerr << "nuc-build: " << pairs.size() << " pairs -> "
            << examples.size() << " examples (k=" << o.k << ")\n";
  emit_manifest("nuc-build", {{"k", std::to_string(o.k)}}, seed, {o.pairs},
                {o.out});
}

struct NucTrainOpts {
  std::string dataset;
  std::string out;
  std::string vectors;
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 256;
  double l2 = 1e-4;
  double holdout = 0.0;
};

void run_nuc_train(const NucTrainOpts& o, std::uint64_t seed) {
  const auto examples = uptake::read_nuc_jsonl(o.dataset);
  std::vector<std::string> inputs = {o.dataset};
  std::unique_ptr<uptake::WordVectorStore> words;
  if (!o.vectors.empty()) {
    words = std::make_unique<uptake::WordVectorStore>(
        uptake::load_word_vectors(o.vectors));
    inputs.push_back(o.vectors);
  }

  uptake::TrainOptions options;
  options.learning_rate = o.learning_rate;
  options.epochs = o.epochs;
  options.batch_size = o.batch_size;
  options.l2 = o.l2;
  options.seed = seed;

  uptake::ClassifierParams params;
  if (o.holdout > 0.0) {
    if (o.holdout >= 1.0) throw usage_error("--holdout must be below 1");
    const auto groups = uptake::group_examples(examples);
    if (groups.size() < 2) {
      throw uptake::error("need at least 2 pair groups to hold any out");
    }
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    uptake::Prng rng(uptake::derive_seed(seed, "holdout"));
    rng.shuffle(order);
    auto held_n = static_cast<std::size_t>(
        std::llround(o.holdout * static_cast<double>(groups.size())));
    held_n = std::min(std::max<std::size_t>(held_n, 1), groups.size() - 1);

    const auto collect = [&](std::size_t begin, std::size_t end) {
      std::vector<uptake::NucExample> subset;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& g = groups[order[i]];
        subset.push_back(examples[g.positive]);
        for (const std::size_t n : g.negatives) subset.push_back(examples[n]);
      }
      return subset;
    };
    const auto train_set = collect(held_n, groups.size());
    const auto held_set = collect(0, held_n);
    params = uptake::train_reference_classifier(train_set, options,
                                                words.get());
    const double held_loss =
        uptake::dataset_mean_loss(params, held_set, words.get());
    std::cerr << "nuc-train: held-out groups=" << held_n
              << " mean_loss=" << uptake::format_double(held_loss)
              << " mean_pjsd="
              << uptake::format_double(uptake::kLn2 - held_loss) << '\n';
  } else {
    params = uptake::train_reference_classifier(examples, options,
                                                words.get());
  }

  uptake::save_classifier_params(o.out, params);
  std::cerr << "nuc-train: final objective="
            << uptake::format_double(params.loss_history.back()) << " after "
            << params.loss_history.size() << " epochs\n";
  emit_manifest("nuc-train",
                {{"learning_rate", uptake::format_double(o.learning_rate)},
                 {"epochs", std::to_string(o.epochs)},
                 {"batch_size", std::to_string(o.batch_size)},
                 {"l2", uptake::format_double(o.l2)},
                 {"holdout", uptake::format_double(o.holdout)}},
                seed, inputs, {o.out});
}

struct NucScoreOpts {
  std::string pairs;
  std::string params;
  std::string vectors;
  int k = 3;
  std::string out;
};

void run_nuc_score(const NucScoreOpts& o, std::uint64_t seed, int jobs) {
  const auto pairs = uptake::read_pairs_jsonl(o.pairs);
  const auto params = uptake::load_classifier_params(o.params);
  std::vector<std::string> inputs = {o.pairs, o.params};
  std::unique_ptr<uptake::WordVectorStore> words;
  if (!o.vectors.empty()) {
    words = std::make_unique<uptake::WordVectorStore>(
        uptake::load_word_vectors(o.vectors));
    inputs.push_back(o.vectors);
  }
  const auto table =
      uptake::score_corpus_pjsd(params, pairs, o.k, seed, words.get(), jobs);
  log_warnings(table.warnings);
  uptake::write_score_table(o.out, table);
  std::cerr << "nuc-score: " << table.pair_ids.size() << " pairs\n";
  emit_manifest("nuc-score", {{"k", std::to_string(o.k)}}, seed, inputs,
                {o.out});
}

// ---------------------------------------------------------------------------
// eval-corr

struct EvalCorrOpts {
  std::string scores;
  std::string labels;
  std::string metric;
  int iterations = 1000;
  double level = 0.95;
  std::string out;
};

void run_eval_corr(const EvalCorrOpts& o, std::uint64_t seed, int jobs) {
  if (!(o.level > 0.0 && o.level < 1.0)) {
    throw usage_error("--level must be in (0,1)");
  }
  const auto table = uptake::read_score_table(o.scores);
  const auto labels = uptake::read_gold_labels(o.labels);
  const auto values = table.column_values(o.metric);

  std::vector<double> x, y;
  for (const auto& label : labels) {
    const auto it = values.find(label.pair_id);
    if (it == values.end()) continue;
    x.push_back(it->second);
    y.push_back(label.value);
  }
  const auto result =
      uptake::bootstrap_ci(x, y, o.iterations, o.level, seed, jobs);
  if (result.ci_warning) {
    std::cerr << "warning: point estimate lies outside the bootstrap CI\n";
  }

  nlohmann::json obj;
  obj["command"] = "eval-corr";
  obj["statistic"] = "spearman_rho";
  obj["metric"] = o.metric;
  obj["rho"] = result.rho;
  obj["n"] = result.n;
  obj["ci_low"] = *result.ci_low;
  obj["ci_high"] = *result.ci_high;
  obj["ci_level"] = o.level;
  obj["iterations"] = o.iterations;
  obj["degenerate_skipped"] = result.degenerate_skipped;
  obj["ci_warning"] = result.ci_warning;
  obj["seed"] = seed;
  write_json_file(o.out, obj);
  std::cerr << "eval-corr: " << o.metric << " rho="
            << uptake::format_double(result.rho) << " n=" << result.n << '\n';
  emit_manifest("eval-corr",
                {{"metric", o.metric},
                 {"iterations", std::to_string(o.iterations)},
                 {"level", uptake::format_double(o.level)}},
                seed, {o.scores, o.labels}, {o.out});
}

// ---------------------------------------------------------------------------
// eval-agreement

struct EvalAgreementOpts {
  std::string annotations;
  std::string z;
  std::string out;
};

// Per-rater z-scores over the retained (everyone-on-topic) pairs; the same
// normalization the label aggregation applies before averaging.
std::map<std::string, std::map<std::string, double>> rater_z_matrix(
    const std::vector<uptake::RaterJudgment>& judgments,
    std::vector<std::string>* warnings) {
  std::set<std::string> off_topic;
  for (const auto& j : judgments) {
    if (!j.on_topic) off_topic.insert(j.pair_id);
  }
  std::map<std::string, std::vector<std::pair<std::string, int>>> by_rater;
  for (const auto& j : judgments) {
    if (!j.on_topic || off_topic.count(j.pair_id)) continue;
    by_rater[j.rater_id].emplace_back(j.pair_id, *j.level);
  }
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& [rater, items] : by_rater) {
    double mean = 0.0;
    for (const auto& [pid, level] : items) mean += level;
    mean /= static_cast<double>(items.size());
    double var = 0.0;
    for (const auto& [pid, level] : items) {
      var += (level - mean) * (level - mean);
    }
    const double sd = items.size() > 1
                          ? std::sqrt(var / (items.size() - 1.0))
                          : 0.0;
    if (sd == 0.0 && warnings != nullptr) {
      warnings->push_back("rater \"" + rater +
                          "\" has zero variance; z-scores set to 0");
    }
    for (const auto& [pid, level] : items) {
      out[rater][pid] = sd == 0.0 ? 0.0 : (level - mean) / sd;
    }
  }
  return out;
}

void run_eval_agreement(const EvalAgreementOpts& o, std::uint64_t seed) {
  if (o.annotations.empty() && o.z.empty()) {
    throw usage_error("need --annotations and/or --z");
  }
  nlohmann::json obj;
  obj["command"] = "eval-agreement";
  obj["seed"] = seed;
  std::vector<std::string> warnings;
  std::vector<std::string> inputs;

  std::map<std::string, std::map<std::string, double>> zmap;
  if (!o.annotations.empty()) {
    inputs.push_back(o.annotations);
    const auto judgments = uptake::load_annotations(o.annotations);

    std::set<std::string> raters;
    for (const auto& j : judgments) raters.insert(j.rater_id);
    // Count matrix over the on-topic level judgments, restricted to pairs
    // every rater scored, so the per-item rater count is constant.
    std::map<std::string, std::map<std::string, int>> levels_by_pair;
    for (const auto& j : judgments) {
      if (j.on_topic) levels_by_pair[j.pair_id][j.rater_id] = *j.level;
    }
    std::vector<std::vector<int>> counts;
    for (const auto& [pid, by_rater] : levels_by_pair) {
      if (by_rater.size() != raters.size()) continue;
      std::vector<int> row(3, 0);
      for (const auto& [rater, level] : by_rater) row[level] += 1;
      counts.push_back(std::move(row));
    }
    if (counts.empty()) {
      throw uptake::error("no pairs rated on-topic by every rater");
    }
    obj["fleiss_kappa"] = uptake::fleiss_kappa(counts);
    obj["fleiss_n_items"] = counts.size();
    obj["n_raters"] = raters.size();
    zmap = rater_z_matrix(judgments, &warnings);
  }
  if (!o.z.empty()) {
    inputs.push_back(o.z);
    zmap = uptake::read_agreement_csv(o.z);
  }

  if (zmap.size() >= 3) {
    const auto agreement = uptake::leave_out_agreement(zmap);
    for (const auto& w : agreement.warnings) warnings.push_back(w);
    nlohmann::json per;
    for (const auto& [rater, rho] : agreement.per_rater) per[rater] = rho;
    obj["leave_out"] = {{"mean_rho", agreement.mean_rho},
                        {"per_rater", per}};
  } else {
    warnings.push_back("leave-out agreement needs at least 3 raters; skipped");
  }
  obj["warnings"] = warnings;
  log_warnings(warnings);
  write_json_file(o.out, obj);
  emit_manifest("eval-agreement", {}, seed, inputs, {o.out});
}

// ---------------------------------------------------------------------------
// analyze-residuals

struct ResidualOpts {
  std::string labels;
  std::string scores;
  std::string a;
  std::string b;
  double threshold = 1.5;
  std::string out;
  std::string summary;
};

void run_analyze_residuals(const ResidualOpts& o, std::uint64_t seed) {
  const auto labels = uptake::read_gold_labels(o.labels);
  const auto table = uptake::read_score_table(o.scores);
  const auto result = uptake::residual_gap_set(
      labels, table.column_values(o.a), table.column_values(o.b), o.threshold);

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw uptake::error("cannot write " + o.out);
  out << "pair_id,d\n";
  for (std::size_t i = 0; i < result.pair_ids.size(); ++i) {
    uptake::write_csv_row(
        out, {result.pair_ids[i], uptake::format_double(result.d_values[i])});
  }
  out.close();

  nlohmann::json obj;
  obj["command"] = "analyze-residuals";
  obj["statistic"] = "residual_gap";
  obj["a"] = o.a;
  obj["b"] = o.b;
  obj["threshold_sd"] = o.threshold;
  obj["n"] = result.n;
  obj["mean_d"] = result.mean_d;
  obj["sd_d"] = result.sd_d;
  obj["n_flagged"] = result.pair_ids.size();
  obj["seed"] = seed;
  write_json_file(o.summary, obj);
  std::cerr << "analyze-residuals: " << result.pair_ids.size() << " of "
            << result.n << " pairs flagged\n";
  emit_manifest("analyze-residuals",
                {{"a", o.a},
                 {"b", o.b},
                 {"threshold", uptake::format_double(o.threshold)}},
                seed, {o.labels, o.scores}, {o.out, o.summary});
}

// ---------------------------------------------------------------------------
// analyze-damsl

struct DamslOpts {
  std::string scores;
  std::string tags;
  std::string a;
  std::string b;
  std::string out;
  std::string summary;
};

// Quantile-transform one column over its present values so the two measures
// share a uniform scale.
std::unordered_map<std::string, double> quantile_column(
    const uptake::ScoreTable& table, const std::string& metric) {
  const std::size_t col = table.column(metric);
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t r = 0; r < table.pair_ids.size(); ++r) {
    if (table.cells[r][col]) {
      ids.push_back(table.pair_ids[r]);
      values.push_back(*table.cells[r][col]);
    }
  }
  const auto q = uptake::quantile_transform(values);
  std::unordered_map<std::string, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], q[i]);
  return out;
}

void run_analyze_damsl(const DamslOpts& o, std::uint64_t seed) {
  const auto table = uptake::read_score_table(o.scores);
  const auto tags = uptake::read_tags_csv(o.tags);
  const auto qa = quantile_column(table, o.a);
  const auto qb = quantile_column(table, o.b);
  const auto rows = uptake::phenomenon_delta(qa, qb, tags);

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw uptake::error("cannot write " + o.out);
  out << "phenomenon,n,delta,p\n";
  nlohmann::json json_rows = nlohmann::json::array();
  for (const auto& row : rows) {
    const std::string name = uptake::phenomenon_name(row.phenomenon);
    uptake::write_csv_row(
        out, {name, std::to_string(row.n),
              row.delta ? uptake::format_double(*row.delta) : "",
              row.p ? uptake::format_double(*row.p) : ""});
    nlohmann::json jr;
    jr["phenomenon"] = name;
    jr["n"] = row.n;
    jr["delta"] = row.delta ? nlohmann::json(*row.delta) : nullptr;
    jr["p"] = row.p ? nlohmann::json(*row.p) : nullptr;
    json_rows.push_back(jr);
  }
  out.close();

  nlohmann::json obj;
  obj["command"] = "analyze-damsl";
  obj["statistic"] = "median_delta";
  obj["a"] = o.a;
  obj["b"] = o.b;
  obj["rows"] = json_rows;
  obj["seed"] = seed;
  write_json_file(o.summary, obj);
  emit_manifest("analyze-damsl", {{"a", o.a}, {"b", o.b}}, seed,
                {o.scores, o.tags}, {o.out, o.summary});
}

// ---------------------------------------------------------------------------
// analyze-outcomes

struct OutcomesOpts {
  std::string scores;
  std::string pairs;
  std::string metric;
  std::string outcomes;
  std::string outcome_col;
  bool cues = false;
  std::string table_out;
  std::string out;
};

std::map<std::string, double> read_outcomes_csv(const std::string& path,
                                                const std::string& col) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw uptake::error("cannot open " + path);
  uptake::CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw uptake::parse_error("empty outcomes file", 1);
  std::size_t conv_col = row.size(), val_col = row.size();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] == "conversation") conv_col = i;
    if (row[i] == col) val_col = i;
  }
  if (conv_col == row.size() || val_col == row.size()) {
    throw uptake::parse_error(
        "outcomes file needs columns \"conversation\" and \"" + col + "\"",
        1);
  }
  std::map<std::string, double> out;
  while (reader.next(row)) {
    if (row.size() <= std::max(conv_col, val_col)) {
      throw uptake::parse_error("short outcomes row", reader.line());
    }
    if (!out.emplace(row[conv_col], uptake::parse_double(row[val_col]))
             .second) {
      throw uptake::parse_error(
          "duplicate conversation \"" + row[conv_col] + "\"", reader.line());
    }
  }
  return out;
}

void run_analyze_outcomes(const OutcomesOpts& o, std::uint64_t seed) {
  if (o.outcomes.empty() && !o.cues) {
    throw usage_error("need --outcomes and/or --cues");
  }
  if (!o.outcomes.empty() && o.outcome_col.empty()) {
    throw usage_error("--outcomes requires --outcome-col");
  }
  const auto pairs = uptake::read_pairs_jsonl(o.pairs);
  const auto table = uptake::read_score_table(o.scores);
  const auto agg = uptake::conversation_aggregate(table, pairs, o.metric);
  std::vector<std::string> warnings = agg.warnings;

  nlohmann::json obj;
  obj["command"] = "analyze-outcomes";
  obj["metric"] = o.metric;
  obj["n_conversations"] = agg.rows.size();
  obj["seed"] = seed;
  std::vector<std::string> inputs = {o.scores, o.pairs};
  std::vector<std::string> outputs = {o.out};

  std::map<std::string, uptake::CueRates> rates;
  if (o.cues) {
    rates = uptake::cue_rates(pairs);
    std::vector<double> means;
    for (const auto& row : agg.rows) means.push_back(row.mean_score);
    const double med = uptake::median_of(means);
    std::vector<double> q_high, q_low, e_high, e_low;
    for (const auto& row : agg.rows) {
      const auto& r = rates.at(row.conversation);
      if (row.mean_score > med) {
        q_high.push_back(r.question_rate);
        e_high.push_back(r.exclamation_rate);
      } else {
        q_low.push_back(r.question_rate);
        e_low.push_back(r.exclamation_rate);
      }
    }
    nlohmann::json cues;
    cues["split_median"] = med;
    cues["n_high"] = q_high.size();
    cues["n_low"] = q_low.size();
    const auto side = [&](const std::vector<double>& high,
                          const std::vector<double>& low) {
      nlohmann::json c;
      c["mean_high"] = uptake::mean_of(high);
      c["mean_low"] = uptake::mean_of(low);
      try {
        const auto t = uptake::ttest_two_sample(high, low);
        c["t"] = t.statistic;
        c["p"] = t.p;
        c["df"] = t.df;
        c["approximate"] = t.approximate;
      } catch (const uptake::error& e) {
        warnings.push_back(std::string("cue t-test skipped: ") + e.what());
      }
      return c;
    };
    if (q_high.size() >= 2 && q_low.size() >= 2) {
      cues["question"] = side(q_high, q_low);
      cues["exclamation"] = side(e_high, e_low);
    } else {
      warnings.push_back("cue t-test skipped: a median split side has "
                         "fewer than 2 conversations");
    }
    obj["cues"] = cues;
  }

  if (!o.outcomes.empty()) {
    inputs.push_back(o.outcomes);
    const auto outcomes = read_outcomes_csv(o.outcomes, o.outcome_col);
    std::vector<double> y, x, n_pairs;
    for (const auto& row : agg.rows) {
      const auto it = outcomes.find(row.conversation);
      if (it == outcomes.end()) {
        warnings.push_back("conversation \"" + row.conversation +
                           "\" has no outcome; skipped");
        continue;
      }
      y.push_back(it->second);
      x.push_back(row.mean_score);
      n_pairs.push_back(row.n_pairs);
    }
    const auto fit = uptake::ols(y, x, {n_pairs},
                                 {"mean_" + o.metric, "n_pairs"});
    nlohmann::json ols;
    ols["outcome"] = o.outcome_col;
    ols["names"] = fit.names;
    ols["coefficients"] = fit.coefficients;
    ols["std_errors"] = fit.std_errors;
    ols["p_values"] = fit.p_values;
    ols["standardized"] = fit.standardized;
    ols["r_squared"] = fit.r_squared;
    ols["n"] = fit.n;
    ols["approximate"] = fit.approximate;
    obj["ols"] = ols;
  }

  if (!o.table_out.empty()) {
    std::ofstream out(o.table_out, std::ios::binary);
    if (!out) throw uptake::error("cannot write " + o.table_out);
    out << (o.cues
                ? "conversation,n_pairs,mean_score,question_rate,"
                  "exclamation_rate\n"
                : "conversation,n_pairs,mean_score\n");
    for (const auto& row : agg.rows) {
      std::vector<std::string> fields = {
          row.conversation, std::to_string(row.n_pairs),
          uptake::format_double(row.mean_score)};
      if (o.cues) {
        const auto& r = rates.at(row.conversation);
        fields.push_back(uptake::format_double(r.question_rate));
        fields.push_back(uptake::format_double(r.exclamation_rate));
      }
      uptake::write_csv_row(out, fields);
    }
    outputs.push_back(o.table_out);
  }

  obj["warnings"] = warnings;
  log_warnings(warnings);
  write_json_file(o.out, obj);
  emit_manifest("analyze-outcomes",
                {{"metric", o.metric},
                 {"outcome_col", o.outcome_col},
                 {"cues", o.cues ? "1" : "0"}},
                seed, inputs, outputs);
}

// ---------------------------------------------------------------------------
// selftest

struct SelfTest {
  int passed = 0;
  int failed = 0;

  void check(const std::string& name, bool ok, const std::string& detail) {
    if (ok) {
      std::cout << "ok " << name << '\n';
      ++passed;
    } else {
      std::cout << "FAIL " << name << ": " << detail << '\n';
      ++failed;
    }
  }
  void close(const std::string& name, double got, double want, double tol) {
    check(name, std::abs(got - want) <= tol,
          "got " + uptake::format_double(got) + ", want " +
              uptake::format_double(want));
  }
};

uptake::TokenSequence seq(std::vector<std::string> tokens) {
  uptake::TokenSequence s;
  s.tokens = std::move(tokens);
  return s;
}

void run_selftest() {
  SelfTest t;

  // Tokenizer post-conditions.
  {
    const auto a = uptake::tokenize("14 plus 14 is 28.");
    t.check("tokenize.splits-trailing-period",
            a.tokens == std::vector<std::string>{"14", "plus", "14", "is",
                                                 "28", "."} &&
                uptake::count_non_punct(a) == 5,
            "got " + std::to_string(a.tokens.size()) + " tokens");
    const auto b = uptake::tokenize("You would multiply 4 times 3.");
    t.check("tokenize.multiply-example", b.tokens.size() == 7,
            "got " + std::to_string(b.tokens.size()) + " tokens");
    const auto c = uptake::tokenize("so [INAUDIBLE] ok?");
    t.check("tokenize.keeps-marker-whole",
            std::find(c.tokens.begin(), c.tokens.end(), "[inaudible]") !=
                c.tokens.end(),
            "marker token missing");
  }

  // Stemmer spot checks (values frozen from the reference implementation).
  {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"multiplied", "multipli"}, {"fractions", "fraction"},
        {"generously", "generous"}, {"agreed", "agre"},
        {"ties", "tie"},            {"happily", "happili"},
        {"conversations", "convers"}, {"repeated", "repeat"}};
    bool ok = true;
    std::string detail;
    for (const auto& [word, want] : cases) {
      const std::string got = uptake::snowball_stem(word);
      if (got != want) {
        ok = false;
        detail += word + "->" + got + " (want " + want + ") ";
      }
    }
    t.check("stem.known-pairs", ok, detail);
  }

  // Dependence-estimate calibration.
  {
    t.close("pjsd.chance-is-zero",
            uptake::pjsd_estimate(0.5, {0.5, 0.5, 0.5}).value, 0.0, 1e-12);
    t.close("pjsd.saturates-at-ln2",
            uptake::pjsd_estimate(1.0 - 1e-6, {1e-6, 1e-6, 1e-6}).value,
            uptake::kLn2, 1e-3);
    t.close("pjsd.worked-example",
            uptake::pjsd_estimate(0.8, {0.3, 0.1, 0.4}).value, 0.41942, 1e-4);
  }

  // Overlap measures on pinned examples.
  {
    const auto s = seq({"the", "cat", "sat", "down"});
    const auto h = seq({"the", "cat", "sat"});
    t.close("bleu.brevity-penalty-example", *uptake::bleu(s, h),
            std::exp(-1.0 / 3.0), 1e-12);
    t.close("lcs.two-of-three",
            uptake::lcs_norm(seq({"a", "b", "c"}), seq({"a", "x", "c"})),
            2.0 / 3.0, 1e-12);
  }

  // Rank statistics.
  {
    t.close("spearman.monotone", uptake::spearman({1, 2, 3}, {1, 4, 9}).rho,
            1.0, 1e-12);
    t.close("spearman.reversed", uptake::spearman({1, 2, 3}, {9, 4, 1}).rho,
            -1.0, 1e-12);
    t.close("spearman.tied-fixture",
            uptake::spearman({1, 2, 2, 3}, {1, 3, 2, 4}).rho,
            0.9486832980505138, 1e-12);
    t.close("fleiss.hand-fixture",
            uptake::fleiss_kappa(
                {{3, 0, 0}, {0, 3, 0}, {1, 1, 1}, {2, 1, 0}}),
            11.0 / 41.0, 1e-12);
    const auto q = uptake::quantile_transform({10, 20, 30});
    t.check("quantile.thirds",
            q == std::vector<double>{1.0 / 6.0, 0.5, 5.0 / 6.0},
            "unexpected values");
    t.close("median-test.identical-samples",
            uptake::median_test({1, 2, 3, 4}, {1, 2, 3, 4}).p, 1.0, 1e-12);
  }

  // Dialog-act mapping: one tag per phenomenon, five non-matching.
  {
    using P = uptake::Phenomenon;
    const std::vector<std::pair<std::string, std::optional<P>>> cases = {
        {"b", P::acknowledgment},   {"qw^2", P::collaborative_completion},
        {"sd^m", P::repetition},    {"bf", P::reformulation},
        {"ny", P::answer},          {"sd", std::nullopt},
        {"qy", std::nullopt},       {"aa", std::nullopt},
        {"sv", std::nullopt},       {"fc", std::nullopt}};
    bool ok = true;
    std::string detail;
    for (const auto& [tag, want] : cases) {
      if (uptake::map_damsl(tag) != want) {
        ok = false;
        detail += tag + " ";
      }
    }
    t.check("damsl.ten-cases", ok, "mismatch on: " + detail);
  }

  // Seeded sampling determinism.
  {
    std::vector<uptake::ExchangePair> pairs;
    for (int i = 0; i < 6; ++i) {
      uptake::ExchangePair p;
      p.id = "t:" + std::to_string(i);
      p.source = "default";
      p.s.text = "student line " + std::to_string(i);
      p.t.text = "teacher line " + std::to_string(i);
      pairs.push_back(p);
    }
    const auto d1 = uptake::build_nuc_dataset(pairs, 2, 7);
    const auto d2 = uptake::build_nuc_dataset(pairs, 2, 7);
    bool same = d1.size() == d2.size() && d1.size() == 18;
    for (std::size_t i = 0; same && i < d1.size(); ++i) {
      same = d1[i].pair_id == d2[i].pair_id &&
             d1[i].t.source_text == d2[i].t.source_text &&
             d1[i].z == d2[i].z;
    }
    t.check("nuc.seeded-rebuild-identical", same, "datasets differ");
    uptake::Prng a(42), b(42);
    bool prng_same = true;
    for (int i = 0; i < 5; ++i) prng_same = prng_same && a.next() == b.next();
    t.check("prng.same-seed-same-stream", prng_same, "streams diverge");
  }

  // Shortest round-trip double formatting.
  {
    bool ok = true;
    for (const double v : {0.1, 1.0 / 3.0, 1e300, -2.5e-8, 12345.6789}) {
      ok = ok && std::strtod(uptake::format_double(v).c_str(), nullptr) == v;
    }
    t.check("format.round-trips", ok, "value did not round-trip");
  }

  std::cout << "selftest: " << t.passed << "/" << (t.passed + t.failed)
            << " checks passed\n";
  if (t.failed > 0) {
    throw uptake::error("selftest failed (" + std::to_string(t.failed) +
                        " checks)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational uptake measurement pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI/TOML file with flag defaults ([subcommand] sections; "
                 "command-line flags win)");
  app.set_version_flag("--version", uptake::kVersion);

  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--seed", seed, "Seed for every stochastic operation")
      ->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads (output is identical for any value)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ExtractOpts extract;
  auto* cmd_extract =
      app.add_subcommand("extract", "Extract reply pairs from transcripts");
  cmd_extract->fallthrough();
  cmd_extract->add_option("--in", extract.in, "Transcript file")->required();
  cmd_extract->add_option("--format", extract.format, "Input format")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  cmd_extract->add_option("--out", extract.out, "Pair JSONL output")
      ->required();
  cmd_extract
      ->add_option("--min-s-tokens", extract.min_s_tokens,
                   "Minimum non-punctuation tokens in the first utterance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd_extract
      ->add_option("--marker", extract.marker,
                   "Token whose presence drops a pair")
      ->capture_default_str();
  cmd_extract
      ->add_option("--source", extract.source,
                   "Source label stored on each pair")
      ->capture_default_str();

  AnnotateOpts annotate;
  auto* cmd_annotate = app.add_subcommand(
      "annotate-agg", "Aggregate rater judgments into gold labels");
  cmd_annotate->fallthrough();
  cmd_annotate
      ->add_option("--annotations", annotate.annotations, "Rater CSV")
      ->required();
  cmd_annotate->add_option("--out", annotate.out, "Gold label CSV")
      ->required();

  ScoreOpts score;
  auto* cmd_score =
      app.add_subcommand("score", "Score pairs with overlap measures");
  cmd_score->fallthrough();
  cmd_score->add_option("--pairs", score.pairs, "Pair JSONL")->required();
  cmd_score
      ->add_option("--metrics", score.metrics,
                   "Comma-separated measure names")
      ->required();
  cmd_score->add_option("--out", score.out, "Score CSV output")->required();
  cmd_score->add_option("--vectors", score.vectors, "Word-vector text file");
  cmd_score->add_option("--sent-vectors", score.sent_vectors,
                        "Sentence-vector JSONL");
  cmd_score->add_option("--stopwords", score.stopwords,
                        "Stopword list file (default: bundled english)");
  cmd_score->add_option("--prep", score.prep,
                        "Preprocessing for all measures (subset of PST, or "
                        "none)");
  cmd_score->add_option("--prep-for", score.prep_for,
                        "Per-measure override, METRIC=SPEC (repeatable)");

  NucBuildOpts nuc_build;
  auto* cmd_nuc_build = app.add_subcommand(
      "nuc-build", "Sample negatives into a classification dataset");
  cmd_nuc_build->fallthrough();
  cmd_nuc_build->add_option("--pairs", nuc_build.pairs, "Pair JSONL")
      ->required();
  cmd_nuc_build->add_option("--k", nuc_build.k, "Negatives per pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_nuc_build->add_option("--out", nuc_build.out, "Dataset JSONL output")
      ->required();

  NucTrainOpts nuc_train;
  auto* cmd_nuc_train = app.add_subcommand(
      "nuc-train", "Train the reference reply classifier");
  cmd_nuc_train->fallthrough();
  cmd_nuc_train->add_option("--dataset", nuc_train.dataset, "Dataset JSONL")
      ->required();
  cmd_nuc_train->add_option("--out", nuc_train.out, "Parameter JSON output")
      ->required();
  cmd_nuc_train->add_option("--vectors", nuc_train.vectors,
                            "Word-vector text file");
  cmd_nuc_train
      ->add_option("--lr", nuc_train.learning_rate, "Learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_nuc_train->add_option("--epochs", nuc_train.epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_nuc_train
      ->add_option("--batch", nuc_train.batch_size, "Pair groups per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_nuc_train->add_option("--l2", nuc_train.l2, "L2 penalty on weights")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd_nuc_train
      ->add_option("--holdout", nuc_train.holdout,
                   "Fraction of pair groups held out for evaluation")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  NucScoreOpts nuc_score;
  auto* cmd_nuc_score = app.add_subcommand(
      "nuc-score", "Score pairs with a trained classifier");
  cmd_nuc_score->fallthrough();
  cmd_nuc_score->add_option("--pairs", nuc_score.pairs, "Pair JSONL")
      ->required();
  cmd_nuc_score->add_option("--params", nuc_score.params, "Parameter JSON")
      ->required();
  cmd_nuc_score->add_option("--vectors", nuc_score.vectors,
                            "Word-vector text file");
  cmd_nuc_score->add_option("--k", nuc_score.k, "Negatives per pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_nuc_score->add_option("--out", nuc_score.out, "Score CSV output")
      ->required();

  EvalCorrOpts eval_corr;
  auto* cmd_eval_corr = app.add_subcommand(
      "eval-corr", "Rank correlation of a measure against gold labels");
  cmd_eval_corr->fallthrough();
  cmd_eval_corr->add_option("--scores", eval_corr.scores, "Score CSV")
      ->required();
  cmd_eval_corr->add_option("--labels", eval_corr.labels, "Gold label CSV")
      ->required();
  cmd_eval_corr->add_option("--metric", eval_corr.metric, "Score column")
      ->required();
  cmd_eval_corr
      ->add_option("--iterations", eval_corr.iterations,
                   "Bootstrap iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_eval_corr
      ->add_option("--level", eval_corr.level, "Confidence level")
      ->capture_default_str();
  cmd_eval_corr->add_option("--out", eval_corr.out, "Result JSON output")
      ->required();

  EvalAgreementOpts eval_agreement;
  auto* cmd_eval_agreement = app.add_subcommand(
      "eval-agreement", "Inter-rater agreement statistics");
  cmd_eval_agreement->fallthrough();
  cmd_eval_agreement->add_option("--annotations", eval_agreement.annotations,
                                 "Rater CSV");
  cmd_eval_agreement->add_option(
      "--z", eval_agreement.z, "Precomputed rater_id,pair_id,z CSV");
  cmd_eval_agreement
      ->add_option("--out", eval_agreement.out, "Result JSON output")
      ->required();

  ResidualOpts residuals;
  auto* cmd_residuals = app.add_subcommand(
      "analyze-residuals", "Pairs one measure explains and another misses");
  cmd_residuals->fallthrough();
  cmd_residuals->add_option("--labels", residuals.labels, "Gold label CSV")
      ->required();
  cmd_residuals->add_option("--scores", residuals.scores, "Score CSV")
      ->required();
  cmd_residuals->add_option("--a", residuals.a, "Favored measure column")
      ->required();
  cmd_residuals->add_option("--b", residuals.b, "Compared measure column")
      ->required();
  cmd_residuals
      ->add_option("--threshold", residuals.threshold,
                   "Standard deviations above the mean gap")
      ->capture_default_str();
  cmd_residuals->add_option("--out", residuals.out, "Flagged pair CSV")
      ->required();
  cmd_residuals->add_option("--summary", residuals.summary,
                            "Summary JSON output")
      ->required();

  DamslOpts damsl;
  auto* cmd_damsl = app.add_subcommand(
      "analyze-damsl", "Compare measures over dialog-act phenomena");
  cmd_damsl->fallthrough();
  cmd_damsl->add_option("--scores", damsl.scores, "Score CSV")->required();
  cmd_damsl->add_option("--tags", damsl.tags, "pair_id,tag CSV")->required();
  cmd_damsl->add_option("--a", damsl.a, "First measure column")->required();
  cmd_damsl->add_option("--b", damsl.b, "Second measure column")->required();
  cmd_damsl->add_option("--out", damsl.out, "Per-phenomenon CSV")->required();
  cmd_damsl->add_option("--summary", damsl.summary, "Summary JSON output")
      ->required();

  OutcomesOpts outcomes;
  auto* cmd_outcomes = app.add_subcommand(
      "analyze-outcomes", "Conversation-level regressions and cue rates");
  cmd_outcomes->fallthrough();
  cmd_outcomes->add_option("--scores", outcomes.scores, "Score CSV")
      ->required();
  cmd_outcomes->add_option("--pairs", outcomes.pairs, "Pair JSONL")
      ->required();
  cmd_outcomes->add_option("--metric", outcomes.metric, "Score column")
      ->required();
  cmd_outcomes->add_option("--outcomes", outcomes.outcomes,
                           "Per-conversation outcome CSV");
  cmd_outcomes->add_option("--outcome-col", outcomes.outcome_col,
                           "Outcome column name");
  cmd_outcomes->add_flag("--cues", outcomes.cues,
                         "Compare question/exclamation rates across a "
                         "median split");
  cmd_outcomes->add_option("--table", outcomes.table_out,
                           "Per-conversation aggregate CSV output");
  cmd_outcomes->add_option("--out", outcomes.out, "Result JSON output")
      ->required();

  auto* cmd_selftest = app.add_subcommand(
      "selftest", "Run the embedded oracle fixtures");
  cmd_selftest->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_extract->parsed()) run_extract(extract, seed);
    if (cmd_annotate->parsed()) run_annotate_agg(annotate, seed);
    if (cmd_score->parsed()) run_score(score, seed, jobs);
    if (cmd_nuc_build->parsed()) run_nuc_build(nuc_build, seed);
    if (cmd_nuc_train->parsed()) run_nuc_train(nuc_train, seed);
    if (cmd_nuc_score->parsed()) run_nuc_score(nuc_score, seed, jobs);
    if (cmd_eval_corr->parsed()) run_eval_corr(eval_corr, seed, jobs);
    if (cmd_eval_agreement->parsed()) run_eval_agreement(eval_agreement, seed);
    if (cmd_residuals->parsed()) run_analyze_residuals(residuals, seed);
    if (cmd_damsl->parsed()) run_analyze_damsl(damsl, seed);
    if (cmd_outcomes->parsed()) run_analyze_outcomes(outcomes, seed);
    if (cmd_selftest->parsed()) run_selftest();
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
