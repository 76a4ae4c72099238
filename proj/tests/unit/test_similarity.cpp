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
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "uptake/prng.hpp"
#include "uptake/similarity.hpp"

using uptake::MetricId;
using uptake::MetricName;
using uptake::TokenSequence;

namespace {
TokenSequence seq(std::vector<std::string> tokens) {
  TokenSequence s;
  s.tokens = std::move(tokens);
  return s;
}
}  // namespace

TEST_CASE("lcs_norm divides the common subsequence length by len(s)") {
  CHECK(uptake::lcs_norm(seq({"a", "b", "c"}), seq({"a", "x", "c"})) ==
        Catch::Approx(2.0 / 3.0));
  CHECK(uptake::lcs_norm(seq({"a", "b"}), seq({"b", "a"})) ==
        Catch::Approx(0.5));
  CHECK(uptake::lcs_norm(seq({"a"}), seq({})) == 0.0);
  CHECK_THROWS_WITH(uptake::lcs_norm(seq({}), seq({"a"})),
                    Catch::Matchers::ContainsSubstring("empty student"));
}

TEST_CASE("pct overlap counts positions against the other side's types") {
  const auto s = seq({"a", "a", "b"});
  const auto t = seq({"a", "c"});
  CHECK(*uptake::pct_s_in_t(s, t) == Catch::Approx(2.0 / 3.0));
  CHECK(*uptake::pct_t_in_s(s, t) == Catch::Approx(0.5));
  CHECK_FALSE(uptake::pct_s_in_t(seq({}), t).has_value());
  CHECK_FALSE(uptake::pct_t_in_s(s, seq({})).has_value());
  CHECK(*uptake::pct_s_in_t(s, seq({})) == 0.0);
}

TEST_CASE("jaccard uses type sets and is undefined only when both empty") {
  CHECK(*uptake::jaccard(seq({"a", "b", "c"}), seq({"b", "c", "d"})) ==
        Catch::Approx(0.5));
  CHECK(*uptake::jaccard(seq({"a", "a"}), seq({"a"})) == Catch::Approx(1.0));
  CHECK(*uptake::jaccard(seq({"a"}), seq({})) == 0.0);
  CHECK_FALSE(uptake::jaccard(seq({}), seq({})).has_value());
}

TEST_CASE("bleu reproduces the brevity-penalty worked example") {
  const auto s = seq({"the", "cat", "sat", "down"});
  const auto t = seq({"the", "cat", "sat"});
  CHECK(*uptake::bleu(s, t) == Catch::Approx(std::exp(-1.0 / 3.0)));
  CHECK(*uptake::bleu(t, t) == Catch::Approx(1.0));
  CHECK(*uptake::bleu(seq({"a", "b"}), seq({"c", "d"})) <= 1e-2);
  CHECK_FALSE(uptake::bleu(s, seq({})).has_value());
}

TEST_CASE("bleu matches an independent reference on random pairs") {
  uptake::Prng rng(20260814);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> s(1 + rng.below(8)), t(1 + rng.below(8));
    for (auto& tok : s) tok = alphabet[rng.below(alphabet.size())];
    for (auto& tok : t) tok = alphabet[rng.below(alphabet.size())];
    const double got = *uptake::bleu(seq(s), seq(t));
    const double want = oracles::reference_bleu(s, t);
    REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-9));
  }
}

TEST_CASE("glove_align is the mean best cosine and is asymmetric") {
  std::istringstream in("a 1 0\nb 0 1\nc 1 0\n");
  const auto store = uptake::load_word_vectors(in);

  CHECK(*uptake::glove_align(store, seq({"a", "b"}), seq({"c"})) ==
        Catch::Approx(0.5));
  CHECK(*uptake::glove_align(store, seq({"c"}), seq({"a", "b"})) ==
        Catch::Approx(1.0));
  // Out-of-vocabulary s tokens are skipped; all-OOV sides are missing.
  CHECK(*uptake::glove_align(store, seq({"a", "zzz"}), seq({"c"})) ==
        Catch::Approx(1.0));
  CHECK_FALSE(uptake::glove_align(store, seq({"zzz"}), seq({"c"})).has_value());
  CHECK_FALSE(uptake::glove_align(store, seq({"a"}), seq({"zzz"})).has_value());
}

TEST_CASE("glove_utt is the cosine of mean vectors") {
  std::istringstream in("a 1 0\nb 0 1\nneg -1 0\n");
  const auto store = uptake::load_word_vectors(in);
  // mean(s) = (0.5, 0.5); mean(t) = (1, 0) -> cosine = 1/sqrt(2).
  CHECK(*uptake::glove_utt(store, seq({"a", "b"}), seq({"a"})) ==
        Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK_FALSE(uptake::glove_utt(store, seq({"zzz"}), seq({"a"})).has_value());
  // A zero mean vector is missing, not an error.
  CHECK_FALSE(
      uptake::glove_utt(store, seq({"a", "neg"}), seq({"a"})).has_value());
}

TEST_CASE("sent_sim looks up stored vectors by pair and side") {
  std::istringstream in(
      R"({"pair_id":"p1","side":"s","vector":[1,0]})"
      "\n"
      R"({"pair_id":"p1","side":"t","vector":[3,0]})"
      "\n");
  const auto store = uptake::load_sentence_vectors(in);
  CHECK(*uptake::sent_sim(store, "p1", uptake::SentSimMode::cosine) ==
        Catch::Approx(1.0));
  CHECK(*uptake::sent_sim(store, "p1", uptake::SentSimMode::inner) ==
        Catch::Approx(3.0));
  CHECK_FALSE(
      uptake::sent_sim(store, "p2", uptake::SentSimMode::cosine).has_value());
}

TEST_CASE("default preprocessing profiles match the per-measure table") {
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::pct_s_in_t)) ==
        "PST");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::pct_t_in_s)) ==
        "PS");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::jaccard)) ==
        "PS");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::bleu)) ==
        "PST");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::glove_align)) ==
        "P");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::glove_utt)) ==
        "PS");
  CHECK(uptake::profile_spec(uptake::default_profile(MetricName::lcs)) ==
        "none");
}

namespace {
std::vector<uptake::ExchangePair> demo_pairs() {
  std::vector<uptake::ExchangePair> pairs(3);
  pairs[0].id = "t1:2";
  pairs[0].s.text = "The cats sat on the mat today.";
  pairs[0].t.text = "The cats sat, nice.";
  pairs[1].id = "t1:1";
  pairs[1].s.text = "Four times three is twelve.";
  pairs[1].t.text = "Twelve, good.";
  pairs[2].id = "t1:3";
  pairs[2].s.text = "...";
  pairs[2].t.text = "Mhm.";
  for (auto& p : pairs) p.source = "default";
  return pairs;
}
}  // namespace

TEST_CASE("score_all sorts rows, leaves holes, and warns per miss") {
  uptake::ScoreConfig config;
  config.metrics = {MetricId::with_default(MetricName::pct_s_in_t),
                    MetricId::with_default(MetricName::jaccard)};
  const auto table = uptake::score_all(demo_pairs(), config);

  CHECK(table.metric_names ==
        std::vector<std::string>{"pct_s_in_t", "jaccard"});
  CHECK(table.pair_ids == std::vector<std::string>{"t1:1", "t1:2", "t1:3"});
  // "..." reduces to nothing under P: pct_s_in_t goes missing, while
  // jaccard (one side still nonempty) is 0.
  CHECK_FALSE(table.cells[2][0].has_value());
  CHECK(table.cells[2][1] == 0.0);
  REQUIRE(table.warnings.size() == 1);
  CHECK_THAT(table.warnings[0],
             Catch::Matchers::ContainsSubstring("t1:3") &&
                 Catch::Matchers::ContainsSubstring("pct_s_in_t missing"));

  // Stemming folds "cats"/"cat" together under the PST default;
  // stopwords keep only [cat, sat, mat, today] vs [cat, sat, nice].
  const auto row1 = table.column_values("pct_s_in_t");
  CHECK(row1.at("t1:2") == Catch::Approx(0.5));
}

TEST_CASE("score_all output is identical for any job count") {
  std::vector<uptake::ExchangePair> pairs;
  uptake::Prng rng(99);
  const std::vector<std::string> vocab = {"one", "two",  "three",
                                          "four", "five", "six"};
  for (int i = 0; i < 40; ++i) {
    uptake::ExchangePair p;
    p.id = "p" + std::to_string(100 + i);
    p.source = "default";
    std::string s_text, t_text;
    for (int j = 0; j < 6; ++j) {
      s_text += vocab[rng.below(vocab.size())] + " ";
      t_text += vocab[rng.below(vocab.size())] + " ";
    }
    p.s.text = s_text;
    p.t.text = t_text;
    pairs.push_back(std::move(p));
  }
  uptake::ScoreConfig one;
  one.metrics = {MetricId::with_default(MetricName::pct_s_in_t),
                 MetricId::with_default(MetricName::bleu),
                 MetricId::with_default(MetricName::lcs)};
  uptake::ScoreConfig four = one;
  one.jobs = 1;
  four.jobs = 4;
  const auto ta = uptake::score_all(pairs, one);
  const auto tb = uptake::score_all(pairs, four);
  CHECK(ta.pair_ids == tb.pair_ids);
  CHECK(ta.cells == tb.cells);
  CHECK(ta.warnings == tb.warnings);
}

TEST_CASE("score_all rejects ingested metrics and missing stores") {
  uptake::ScoreConfig config;
  config.metrics = {MetricId::with_default(MetricName::pjsd)};
  CHECK_THROWS_WITH(uptake::score_all(demo_pairs(), config),
                    Catch::Matchers::ContainsSubstring(
                        "ingested, not computed here"));

  config.metrics = {MetricId::with_default(MetricName::glove_align)};
  CHECK_THROWS_WITH(uptake::score_all(demo_pairs(), config),
                    Catch::Matchers::ContainsSubstring(
                        "requires word vectors"));

  config.metrics = {MetricId::with_default(MetricName::sent_cosine)};
  CHECK_THROWS_WITH(uptake::score_all(demo_pairs(), config),
                    Catch::Matchers::ContainsSubstring(
                        "requires sentence vectors"));

  config.metrics = {MetricId::with_default(MetricName::jaccard),
                    MetricId::with_default(MetricName::jaccard)};
  CHECK_THROWS_WITH(uptake::score_all(demo_pairs(), config),
                    Catch::Matchers::ContainsSubstring("duplicate metric"));
}

TEST_CASE("merge_score_tables unions rows and rejects duplicate columns") {
  uptake::ScoreTable a;
  a.metric_names = {"m1"};
  a.pair_ids = {"p1", "p2"};
  a.cells = {{1.0}, {2.0}};
  uptake::ScoreTable b;
  b.metric_names = {"m2"};
  b.pair_ids = {"p2", "p3"};
  b.cells = {{5.0}, {6.0}};

  const auto merged = uptake::merge_score_tables(a, b);
  CHECK(merged.metric_names == std::vector<std::string>{"m1", "m2"});
  CHECK(merged.pair_ids == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(merged.cells[0][0] == 1.0);
  CHECK_FALSE(merged.cells[0][1].has_value());
  CHECK(merged.cells[1][1] == 5.0);
  CHECK_FALSE(merged.cells[2][0].has_value());
  CHECK(merged.cells[2][1] == 6.0);

  CHECK_THROWS_WITH(uptake::merge_score_tables(a, a),
                    Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("metric names round-trip and reject unknowns") {
  for (const char* name :
       {"lcs", "pct_s_in_t", "pct_t_in_s", "jaccard", "bleu", "glove_align",
        "glove_utt", "sent_cosine", "sent_inner", "nuc_prob", "pjsd",
        "external"}) {
    CHECK(uptake::metric_name_string(uptake::metric_name_from_string(name)) ==
          std::string(name));
  }
  CHECK_THROWS_WITH(uptake::metric_name_from_string("rouge"),
                    Catch::Matchers::ContainsSubstring(
                        "unknown metric \"rouge\""));
}
