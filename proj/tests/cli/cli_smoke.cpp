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

// Drives the full CLI pipeline over a small synthetic classroom corpus:
// extract -> score -> annotate-agg -> eval-corr -> eval-agreement ->
// analyze-residuals -> analyze-damsl -> analyze-outcomes. Checks exit
// codes, that every declared output lands with a manifest beside it, that
// result JSON parses with the promised keys, and that usage errors and
// data errors map to exit codes 1 and 2. Numeric semantics live in the
// unit tests; this is the wiring check.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uptake/corpus.hpp"
#include "uptake/io.hpp"

namespace {

namespace fs = std::filesystem;

int g_failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    std::printf("FAIL %s\n", what.c_str());
    ++g_failures;
  }
}

fs::path g_dir;

int run_cli(const std::string& args) {
  const std::string shell = "cd '" + g_dir.string() + "' && '" +
                            std::string(UPTAKE_CLI_PATH) + "' " + args +
                            " >> log.txt 2>&1";
  const int status = std::system(shell.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_output(const std::string& name) {
  check(fs::exists(g_dir / name), name + " exists");
  check(fs::exists(g_dir / (name + ".manifest.json")),
        name + ".manifest.json exists");
}

nlohmann::json read_json(const std::string& name) {
  std::ifstream in(g_dir / name);
  check(static_cast<bool>(in), name + " opens");
  return nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
}

void write_file(const std::string& name, const std::string& body) {
  std::ofstream out(g_dir / name, std::ios::binary);
  out << body;
}

// Four conversations of decreasing length; the reply echoes, half-echoes,
// or ignores the student line on a rotating schedule so scores vary by
// conversation, and replies carry ?/! for the cue-rate analysis.
std::string make_transcripts() {
  std::string csv = "transcript_id,turn,role,text\n";
  const int pairs_per_conv[] = {5, 4, 3, 2};
  for (int c = 0; c < 4; ++c) {
    const std::string conv = "c" + std::to_string(c + 1);
    for (int j = 0; j < pairs_per_conv[c]; ++j) {
      const int n = 10 * (c + 1) + j;
      const std::string s = "the red house number " + std::to_string(n) +
                            " stood alone on the tall hill";
      std::string t;
      switch ((c + j) % 3) {
        case 0:
          t = "so the red house number " + std::to_string(n) +
              " stood on the hill did it?";
          break;
        case 1:
          t = "a house on a hill you said?";
          break;
        default:
          t = "please open your workbooks to the next page!";
          break;
      }
      csv += conv + "," + std::to_string(2 * j) + ",student,\"" + s + "\"\n";
      csv += conv + "," + std::to_string(2 * j + 1) + ",teacher,\"" + t +
             "\"\n";
    }
  }
  return csv;
}

std::string make_annotations(const std::vector<uptake::ExchangePair>& pairs) {
  const char* levels[] = {"low", "mid", "high"};
  std::string csv = "rater_id,pair_id,on_topic,level\n";
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (int r = 0; r < 3; ++r) {
      const bool off_topic = r == 0 && p + 1 == pairs.size();
      csv += "r" + std::to_string(r + 1) + "," + pairs[p].id + ",";
      csv += off_topic ? "false," : "true," + std::string(levels[(p + r) % 3]);
      csv += "\n";
    }
  }
  return csv;
}

std::string make_tags(const std::vector<uptake::ExchangePair>& pairs) {
  const char* tags[] = {"b", "ny", "sd^m", "bf", "qw^2", "ny", "sd", "fc"};
  std::string csv = "pair_id,tag\n";
  for (std::size_t p = 0; p < pairs.size() && p < 8; ++p) {
    csv += pairs[p].id + "," + tags[p] + "\n";
  }
  return csv;
}

}  // namespace

int run_pipeline();

int main() {
  g_dir = fs::temp_directory_path() / "uptake_cli_smoke";
  std::error_code ec;
  fs::remove_all(g_dir, ec);
  fs::create_directories(g_dir);
  try {
    return run_pipeline();
  } catch (const std::exception& e) {
    std::printf("cli smoke: aborted: %s (artifacts in %s)\n", e.what(),
                g_dir.string().c_str());
    return 1;
  }
}

int run_pipeline() {
  std::error_code ec;
  write_file("transcripts.csv", make_transcripts());
  check(run_cli("extract --in transcripts.csv --format csv "
                "--out pairs.jsonl") == 0,
        "extract exits 0");
  expect_output("pairs.jsonl");

  const auto pairs = uptake::read_pairs_jsonl((g_dir / "pairs.jsonl").string());
  check(pairs.size() == 14, "extract kept all 14 exchanges");

  check(run_cli("score --pairs pairs.jsonl --metrics pct_s_in_t,jaccard "
                "--out scores.csv --seed 3") == 0,
        "score exits 0");
  expect_output("scores.csv");

  write_file("annotations.csv", make_annotations(pairs));
  check(run_cli("annotate-agg --annotations annotations.csv "
                "--out labels.csv") == 0,
        "annotate-agg exits 0");
  expect_output("labels.csv");
  const auto labels = uptake::read_gold_labels((g_dir / "labels.csv").string());
  check(labels.size() == pairs.size() - 1,
        "the pair with an off-topic vote is dropped");

  check(run_cli("eval-corr --scores scores.csv --labels labels.csv "
                "--metric pct_s_in_t --iterations 200 --out corr.json "
                "--seed 3") == 0,
        "eval-corr exits 0");
  expect_output("corr.json");
  const auto corr = read_json("corr.json");
  for (const char* key : {"rho", "ci_low", "ci_high", "n", "iterations"}) {
    check(corr.contains(key), std::string("corr.json has ") + key);
  }
  check(corr["iterations"] == 200, "corr.json records --iterations");
  check(corr["n"] == 13, "correlation joins the 13 labeled pairs");

  check(run_cli("eval-agreement --annotations annotations.csv "
                "--out agreement.json") == 0,
        "eval-agreement exits 0");
  expect_output("agreement.json");
  const auto agreement = read_json("agreement.json");
  for (const char* key : {"fleiss_kappa", "fleiss_n_items", "n_raters",
                          "leave_out"}) {
    check(agreement.contains(key), std::string("agreement.json has ") + key);
  }
  check(agreement["n_raters"] == 3, "agreement counts 3 raters");

  check(run_cli("analyze-residuals --labels labels.csv --scores scores.csv "
                "--a pct_s_in_t --b jaccard --out flagged.csv "
                "--summary residuals.json") == 0,
        "analyze-residuals exits 0");
  expect_output("flagged.csv");
  expect_output("residuals.json");

  write_file("tags.csv", make_tags(pairs));
  check(run_cli("analyze-damsl --scores scores.csv --tags tags.csv "
                "--a pct_s_in_t --b jaccard --out damsl.csv "
                "--summary damsl.json") == 0,
        "analyze-damsl exits 0");
  expect_output("damsl.csv");
  expect_output("damsl.json");

  write_file("outcomes.csv",
             "conversation,gain\nc1,0.6\nc2,0.5\nc3,0.4\nc4,0.3\n");
  check(run_cli("analyze-outcomes --scores scores.csv --pairs pairs.jsonl "
                "--metric pct_s_in_t --outcomes outcomes.csv "
                "--outcome-col gain --cues --table table.csv "
                "--out outcomes.json") == 0,
        "analyze-outcomes exits 0");
  expect_output("outcomes.json");
  expect_output("table.csv");
  const auto outcomes = read_json("outcomes.json");
  check(outcomes.contains("ols") && outcomes.contains("cues"),
        "outcomes.json has ols and cues blocks");
  check(outcomes["n_conversations"] == 4, "all 4 conversations aggregated");

  // Usage errors exit 1; unreadable or malformed data exits 2.
  check(run_cli("score --pairs pairs.jsonl --metrics jaccard") == 1,
        "missing required flag exits 1");
  check(run_cli("eval-corr --scores scores.csv --labels labels.csv "
                "--metric pct_s_in_t --level 1.5 --out bad.json") == 1,
        "out-of-range --level exits 1");
  check(run_cli("score --pairs no_such_file.jsonl --metrics jaccard "
                "--out x.csv") == 2,
        "missing input file exits 2");
  write_file("broken.csv", "transcript_id,turn,text\nc1,0,hello\n");
  check(run_cli("extract --in broken.csv --format csv --out x.jsonl") == 2,
        "transcript without a role column exits 2");

  if (g_failures == 0) {
    std::printf("cli smoke: all checks passed\n");
    fs::remove_all(g_dir, ec);
    return 0;
  }
  std::printf("cli smoke: %d check(s) failed (artifacts in %s)\n", g_failures,
              g_dir.string().c_str());
  return 1;
}
