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

#include <sstream>
#include <string>
#include <vector>

#include "uptake/embeddings.hpp"

TEST_CASE("word vectors load with dimension from the first line") {
  std::istringstream in("cat 1 0\ndog 0 1\nboth 2 1\n");
  const auto store = uptake::load_word_vectors(in);
  CHECK(store.dim == 2);
  CHECK(store.table.size() == 3);
  REQUIRE(store.find("cat") != nullptr);
  CHECK(*store.find("cat") == std::vector<double>{1.0, 0.0});
  CHECK(store.find("fish") == nullptr);
}

TEST_CASE("word vector loading reports precise failures") {
  std::istringstream short_row("cat 1 0\ndog 1\n");
  CHECK_THROWS_WITH(uptake::load_word_vectors(short_row),
                    Catch::Matchers::ContainsSubstring(
                        "vector has 1 components, expected 2") &&
                        Catch::Matchers::ContainsSubstring("line 2"));

  std::istringstream dup("cat 1 0\ncat 0 1\n");
  CHECK_THROWS_WITH(uptake::load_word_vectors(dup),
                    Catch::Matchers::ContainsSubstring("duplicate token"));

  std::istringstream bare("cat\n");
  CHECK_THROWS_WITH(uptake::load_word_vectors(bare),
                    Catch::Matchers::ContainsSubstring("no vector components"));

  std::istringstream garbage("cat 1 x\n");
  CHECK_THROWS_AS(uptake::load_word_vectors(garbage), uptake::error);

  std::istringstream empty("\n  \n");
  CHECK_THROWS_WITH(uptake::load_word_vectors(empty),
                    Catch::Matchers::ContainsSubstring("no vectors"));
}

TEST_CASE("word vectors round-trip through the text format") {
  std::istringstream in("cat 1.5 -0.25\ndog 0.1 0.2\n");
  const auto store = uptake::load_word_vectors(in);
  std::ostringstream out;
  uptake::write_word_vectors(out, store);
  std::istringstream back(out.str());
  const auto reloaded = uptake::load_word_vectors(back);
  CHECK(reloaded.dim == store.dim);
  CHECK(reloaded.table == store.table);
}

TEST_CASE("cosine matches the worked example and rejects zero vectors") {
  CHECK(uptake::cosine({1.0, 2.0}, {2.0, 1.0}) == Catch::Approx(0.8));
  CHECK(uptake::cosine({1.0, 0.0}, {1.0, 0.0}) == Catch::Approx(1.0));
  CHECK_THROWS_WITH(uptake::cosine({0.0, 0.0}, {1.0, 0.0}),
                    Catch::Matchers::ContainsSubstring("zero vector"));
  CHECK_THROWS_WITH(uptake::dot({1.0}, {1.0, 2.0}),
                    Catch::Matchers::ContainsSubstring("length mismatch"));
}

TEST_CASE("sentence_vector averages in-vocabulary tokens with duplicates") {
  std::istringstream in("cat 1 0\ndog 0 1\n");
  const auto store = uptake::load_word_vectors(in);

  uptake::TokenSequence seq;
  seq.tokens = {"cat", "cat", "dog"};
  const auto vec = uptake::sentence_vector(store, seq);
  REQUIRE(vec.has_value());
  CHECK((*vec)[0] == Catch::Approx(2.0 / 3.0));
  CHECK((*vec)[1] == Catch::Approx(1.0 / 3.0));

  uptake::TokenSequence oov;
  oov.tokens = {"fish", "bird"};
  CHECK_FALSE(uptake::sentence_vector(store, oov).has_value());
}

TEST_CASE("sentence vectors load from JSONL with side validation") {
  std::istringstream in(
      R"({"pair_id":"p1","side":"s","vector":[1,0]})"
      "\n"
      R"({"pair_id":"p1","side":"t","vector":[0,2]})"
      "\n");
  const auto store = uptake::load_sentence_vectors(in);
  CHECK(store.dim == 2);
  REQUIRE(store.find("p1", "s") != nullptr);
  CHECK(*store.find("p1", "t") == std::vector<double>{0.0, 2.0});
  CHECK(store.find("p2", "s") == nullptr);

  std::istringstream bad_side(R"({"pair_id":"p1","side":"x","vector":[1]})"
                              "\n");
  CHECK_THROWS_WITH(uptake::load_sentence_vectors(bad_side),
                    Catch::Matchers::ContainsSubstring("side must be"));

  std::istringstream dup(R"({"pair_id":"p1","side":"s","vector":[1]})"
                         "\n"
                         R"({"pair_id":"p1","side":"s","vector":[2]})"
                         "\n");
  CHECK_THROWS_WITH(uptake::load_sentence_vectors(dup),
                    Catch::Matchers::ContainsSubstring("duplicate vector"));

  std::istringstream mixed(R"({"pair_id":"p1","side":"s","vector":[1,2]})"
                           "\n"
                           R"({"pair_id":"p2","side":"s","vector":[1]})"
                           "\n");
  CHECK_THROWS_WITH(uptake::load_sentence_vectors(mixed),
                    Catch::Matchers::ContainsSubstring("expected 2"));
}
