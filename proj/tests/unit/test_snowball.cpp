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

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "uptake/snowball.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> load_fixture() {
  std::ifstream in(UPTAKE_FIXTURE_DIR "/snowball_pairs.tsv");
  REQUIRE(in.good());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

}  // namespace

TEST_CASE("stemmer matches the frozen reference fixture") {
  const auto pairs = load_fixture();
  REQUIRE(pairs.size() > 20000);

  std::vector<std::string> mismatches;
  for (const auto& [word, want] : pairs) {
    const std::string got = uptake::snowball_stem(word);
    if (got != want) {
      mismatches.push_back(word + " -> " + got + " (want " + want + ")");
      if (mismatches.size() >= 10) break;
    }
  }
  INFO("first mismatches: " << (mismatches.empty() ? "none"
                                                   : mismatches.front()));
  CHECK(mismatches.empty());
}

TEST_CASE("repeated stemming shortens and settles") {
  // Stems are not fixed points of the algorithm (agreed -> agre -> agr),
  // but each pass never lengthens the word and a fixed point arrives fast.
  const auto pairs = load_fixture();
  std::size_t lengthened = 0;
  std::size_t unsettled = 0;
  for (const auto& [word, want] : pairs) {
    (void)want;
    std::string cur = word;
    bool settled = false;
    for (int pass = 0; pass < 4; ++pass) {
      const std::string next = uptake::snowball_stem(cur);
      if (next.size() > cur.size()) ++lengthened;
      if (next == cur) {
        settled = true;
        break;
      }
      cur = next;
    }
    if (!settled && uptake::snowball_stem(cur) != cur) ++unsettled;
  }
  CHECK(lengthened == 0);
  CHECK(unsettled == 0);
}

TEST_CASE("stemmer special words and invariants") {
  CHECK(uptake::snowball_stem("skis") == "ski");
  CHECK(uptake::snowball_stem("skies") == "sky");
  CHECK(uptake::snowball_stem("dying") == "die");
  CHECK(uptake::snowball_stem("lying") == "lie");
  CHECK(uptake::snowball_stem("tying") == "tie");
  CHECK(uptake::snowball_stem("news") == "news");
  CHECK(uptake::snowball_stem("atlas") == "atlas");
  CHECK(uptake::snowball_stem("cosmos") == "cosmos");
  CHECK(uptake::snowball_stem("bias") == "bias");
  CHECK(uptake::snowball_stem("andes") == "andes");
  CHECK(uptake::snowball_stem("inning") == "inning");
  CHECK(uptake::snowball_stem("outing") == "outing");
  CHECK(uptake::snowball_stem("canning") == "canning");
  CHECK(uptake::snowball_stem("proceed") == "proceed");
  CHECK(uptake::snowball_stem("exceed") == "exceed");
  CHECK(uptake::snowball_stem("succeed") == "succeed");
}

TEST_CASE("stemmer leaves one- and two-letter words alone") {
  CHECK(uptake::snowball_stem("a") == "a");
  CHECK(uptake::snowball_stem("as") == "as");
  CHECK(uptake::snowball_stem("is") == "is");
  CHECK(uptake::snowball_stem("") == "");
}

TEST_CASE("stemmer normalizes curly apostrophes and strips possessives") {
  CHECK(uptake::snowball_stem("teacher's") == "teacher");
  CHECK(uptake::snowball_stem("teacher’s") == "teacher");
  CHECK(uptake::snowball_stem("cats") == "cat");
}
